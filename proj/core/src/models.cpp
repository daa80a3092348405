#include "codareg/models.hpp"

#include <cmath>

#include "codareg/error.hpp"

namespace codareg {

DirichletParams::DirichletParams(Eigen::VectorXd a) : alpha(std::move(a)) {
  if (alpha.size() < 2) {
    throw Error(Errc::dimension_too_small,
                "Dirichlet needs at least 2 parts, got " +
                    std::to_string(alpha.size()));
  }
  for (Eigen::Index j = 0; j < alpha.size(); ++j) {
    if (!(alpha[j] > 0.0)) {
      throw Error(Errc::non_positive_part,
                  "alpha " + std::to_string(j + 1) + " is " +
                      std::to_string(alpha[j]));
    }
  }
}

double dirichlet_density(const SimplexPoint& x, const DirichletParams& p) {
  if (x.dim() != p.dim()) {
    throw Error(Errc::dimension_mismatch,
                "point has " + std::to_string(x.dim()) + " parts, alpha has " +
                    std::to_string(p.dim()));
  }
  double log_density = std::lgamma(p.alpha.sum());
  for (Eigen::Index j = 0; j < p.dim(); ++j) {
    log_density -= std::lgamma(p.alpha[j]);
    log_density += (p.alpha[j] - 1.0) * std::log(x[j]);
  }
  return std::exp(log_density);
}

SimplexPoint dirichlet_sample(const DirichletParams& p, RngStream& rng) {
  Eigen::VectorXd raw(p.dim());
  for (int attempt = 0; attempt < 100; ++attempt) {
    bool degenerate = false;
    for (Eigen::Index j = 0; j < p.dim(); ++j) {
      raw[j] = rng.gamma(p.alpha[j]);
      if (raw[j] <= 0.0) degenerate = true;
    }
    if (!degenerate) return closure(raw);
  }
  throw Error(Errc::degenerate_draw,
              "gamma draw underflowed to 0 in 100 consecutive attempts");
}

LogisticNormalParams::LogisticNormalParams(Eigen::VectorXd m, Eigen::MatrixXd s)
    : mu(std::move(m)), sigma(std::move(s)) {
  if (sigma.rows() != sigma.cols() || sigma.rows() != mu.size()) {
    throw Error(Errc::dimension_mismatch,
                "mu has length " + std::to_string(mu.size()) + ", sigma is " +
                    std::to_string(sigma.rows()) + "x" +
                    std::to_string(sigma.cols()));
  }
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw Error(Errc::not_in_hyperplane, "sigma is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw Error(Errc::singular_bandwidth, "sigma is not positive-definite");
  }
  chol_ = llt.matrixL();
}

SimplexPoint logistic_normal_sample(const LogisticNormalParams& p,
                                    RngStream& rng) {
  Eigen::VectorXd z(p.mu.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = rng.normal();
  return inv_ilr(p.mu + p.cholesky() * z);
}

double logistic_normal_density_ilr(const IlrVector& v,
                                   const LogisticNormalParams& p) {
  if (v.size() != p.mu.size()) {
    throw Error(Errc::dimension_mismatch,
                "ilr vector has length " + std::to_string(v.size()) +
                    ", mu has length " + std::to_string(p.mu.size()));
  }
  const Eigen::Index k = v.size();
  const Eigen::VectorXd centered = v - p.mu;
  const Eigen::VectorXd half = p.cholesky().triangularView<Eigen::Lower>().solve(centered);
  const double quad = half.squaredNorm();
  const double log_det = p.cholesky().diagonal().array().log().sum();
  return std::exp(-0.5 * quad - log_det -
                  0.5 * static_cast<double>(k) * std::log(2.0 * 3.14159265358979323846));
}

double error_sample(const ErrorLaw& law, RngStream& rng) {
  if (rng.uniform01() < law.delta) {
    return law.mu_shift + law.sd_contam * rng.normal();
  }
  return rng.normal();
}

}  // namespace codareg
