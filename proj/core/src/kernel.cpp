#include "codareg/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "codareg/error.hpp"

namespace codareg {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kMaxCondition = 1e12;

double gaussian_profile(double squared_norm, Eigen::Index dim) {
  return std::pow(2.0 * kPi, -0.5 * static_cast<double>(dim)) *
         std::exp(-0.5 * squared_norm);
}

}  // namespace

KernelSpec::KernelSpec(Eigen::MatrixXd bandwidth) : h_(std::move(bandwidth)) {
  if (h_.rows() != h_.cols() || h_.rows() < 1) {
    throw Error(Errc::singular_bandwidth,
                "bandwidth matrix must be square and nonempty");
  }
  if ((h_ - h_.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw Error(Errc::singular_bandwidth, "bandwidth matrix is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(h_);
  if (llt.info() != Eigen::Success) {
    throw Error(Errc::singular_bandwidth,
                "bandwidth matrix is not positive-definite");
  }
  h_inv_ = llt.solve(Eigen::MatrixXd::Identity(h_.rows(), h_.rows()));
  const Eigen::VectorXd diag = llt.matrixL().toDenseMatrix().diagonal();
  det_ = diag.prod() * diag.prod();
}

KernelSpec KernelSpec::isotropic(double h, Eigen::Index dim) {
  if (!(h > 0.0)) {
    throw Error(Errc::singular_bandwidth,
                "isotropic bandwidth must be positive, got " +
                    std::to_string(h));
  }
  return KernelSpec(h * Eigen::MatrixXd::Identity(dim, dim));
}

Dataset::Dataset(std::vector<SimplexPoint> covariates, Eigen::VectorXd responses)
    : covariates_(std::move(covariates)), responses_(std::move(responses)) {
  if (covariates_.empty() ||
      static_cast<Eigen::Index>(covariates_.size()) != responses_.size()) {
    throw Error(Errc::length_mismatch,
                std::to_string(covariates_.size()) + " covariates vs " +
                    std::to_string(responses_.size()) + " responses");
  }
  const Eigen::Index d = covariates_.front().dim();
  ilr_.resize(responses_.size(), d - 1);
  for (std::size_t i = 0; i < covariates_.size(); ++i) {
    if (covariates_[i].dim() != d) {
      throw Error(Errc::dimension_mismatch,
                  "row " + std::to_string(i + 1) + " has " +
                      std::to_string(covariates_[i].dim()) + " parts, expected " +
                      std::to_string(d));
    }
    ilr_.row(i) = ilr(covariates_[i]).transpose();
  }
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
  Dataset out;
  out.covariates_.reserve(rows.size());
  out.responses_.resize(static_cast<Eigen::Index>(rows.size()));
  out.ilr_.resize(static_cast<Eigen::Index>(rows.size()), ilr_.cols());
  Eigen::Index k = 0;
  for (const Eigen::Index i : rows) {
    out.covariates_.push_back(covariates_[static_cast<std::size_t>(i)]);
    out.responses_[k] = responses_[i];
    out.ilr_.row(k) = ilr_.row(i);
    ++k;
  }
  if (out.covariates_.empty()) {
    throw Error(Errc::fold_too_small, "empty data subset");
  }
  return out;
}

double kernel_value(const KernelSpec& spec, const Eigen::VectorXd& u_star,
                    const Eigen::VectorXd& x_star) {
  if (u_star.size() != spec.dim() || x_star.size() != spec.dim()) {
    throw Error(Errc::dimension_mismatch,
                "kernel expects ilr vectors of length " +
                    std::to_string(spec.dim()));
  }
  const Eigen::VectorXd z = spec.inverse() * (u_star - x_star);
  return gaussian_profile(z.squaredNorm(), spec.dim()) / spec.det();
}

Eigen::VectorXd kernel_weights_ilr(const KernelSpec& spec, const Dataset& data,
                                   const Eigen::VectorXd& x_star) {
  if (x_star.size() != data.ilr_coords().cols()) {
    throw Error(Errc::dimension_mismatch,
                "query ilr length " + std::to_string(x_star.size()) +
                    " does not match data dimension " +
                    std::to_string(data.ilr_coords().cols()));
  }
  const Eigen::Index n = data.size();
  Eigen::VectorXd values(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd z =
        spec.inverse() * (data.ilr_coords().row(i).transpose() - x_star);
    values[i] = gaussian_profile(z.squaredNorm(), spec.dim()) / spec.det();
  }
  const double total = values.sum();
  if (total <= 0.0) {
    throw Error(Errc::all_weights_zero,
                "every kernel value underflowed; the bandwidth is too small "
                "for this query point");
  }
  return values / total;
}

Eigen::VectorXd kernel_weights(const KernelSpec& spec, const Dataset& data,
                               const SimplexPoint& x) {
  return kernel_weights_ilr(spec, data, ilr(x));
}

double conditional_cdf(const Eigen::VectorXd& weights,
                       const Eigen::VectorXd& responses, double y) {
  if (weights.size() != responses.size()) {
    throw Error(Errc::length_mismatch,
                std::to_string(weights.size()) + " weights vs " +
                    std::to_string(responses.size()) + " responses");
  }
  double cdf = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (responses[i] <= y) cdf += weights[i];
  }
  return cdf;
}

double weighted_quantile(const Eigen::VectorXd& weights,
                         const Eigen::VectorXd& responses, double q) {
  if (weights.size() != responses.size() || weights.size() == 0) {
    throw Error(Errc::length_mismatch,
                std::to_string(weights.size()) + " weights vs " +
                    std::to_string(responses.size()) + " responses");
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(responses.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) {
                     return responses[a] < responses[b];
                   });
  // Small slack keeps exact-tie examples (cumulative weight hits q to the
  // last bit) from being skipped by accumulated rounding.
  const double target = q - 1e-12;
  double cumulative = 0.0;
  for (const Eigen::Index i : order) {
    cumulative += weights[i];
    if (cumulative >= target) return responses[i];
  }
  return responses[order.back()];
}

double kish_ess(const Eigen::VectorXd& weights) {
  const double sum = weights.sum();
  const double sum_sq = weights.squaredNorm();
  if (sum_sq <= 0.0) return 0.0;
  return sum * sum / sum_sq;
}

double fit_local_constant_ls_ilr(const KernelSpec& spec, const Dataset& data,
                                 const Eigen::VectorXd& x_star) {
  return kernel_weights_ilr(spec, data, x_star).dot(data.responses());
}

double fit_local_constant_ls(const KernelSpec& spec, const Dataset& data,
                             const SimplexPoint& x) {
  return fit_local_constant_ls_ilr(spec, data, ilr(x));
}

LinearFit fit_local_linear_ls_ilr(const KernelSpec& spec, const Dataset& data,
                                  const Eigen::VectorXd& x_star) {
  const Eigen::VectorXd w = kernel_weights_ilr(spec, data, x_star);
  const Eigen::Index n = data.size();
  const Eigen::Index p = spec.dim() + 1;

  Eigen::MatrixXd design(n, p);
  design.col(0).setOnes();
  design.rightCols(spec.dim()) =
      data.ilr_coords().rowwise() - x_star.transpose();

  const Eigen::MatrixXd normal = design.transpose() * w.asDiagonal() * design;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(normal);
  const double lambda_min = eigs.eigenvalues().minCoeff();
  const double lambda_max = eigs.eigenvalues().maxCoeff();
  if (!(lambda_min > 0.0) || lambda_max >= kMaxCondition * lambda_min) {
    throw Error(Errc::singular_design,
                "weighted design is singular or ill-conditioned at this "
                "query point (too few effective neighbors)");
  }
  const Eigen::VectorXd rhs =
      design.transpose() * w.cwiseProduct(data.responses());
  const Eigen::VectorXd beta = Eigen::LLT<Eigen::MatrixXd>(normal).solve(rhs);
  return LinearFit{beta[0], beta.tail(spec.dim())};
}

LinearFit fit_local_linear_ls(const KernelSpec& spec, const Dataset& data,
                              const SimplexPoint& x) {
  return fit_local_linear_ls_ilr(spec, data, ilr(x));
}

}  // namespace codareg
