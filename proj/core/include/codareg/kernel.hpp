#pragma once

#include <vector>

#include <Eigen/Core>

#include "codareg/simplex.hpp"

namespace codareg {

//! Gaussian simplicial kernel with a positive-definite bandwidth matrix H.
//!
//! K_H(u - x) = det(H)^{-1} Ktilde(H^{-1}(u* - x*)) where u*, x* are ilr
//! coordinates and Ktilde is the standard multivariate normal density.
class KernelSpec {
 public:
  explicit KernelSpec(Eigen::MatrixXd bandwidth);

  //! H = h * I on a (dim x dim) coordinate space.
  static KernelSpec isotropic(double h, Eigen::Index dim);

  const Eigen::MatrixXd& bandwidth() const noexcept { return h_; }
  const Eigen::MatrixXd& inverse() const noexcept { return h_inv_; }
  double det() const noexcept { return det_; }
  Eigen::Index dim() const noexcept { return h_.rows(); }

 private:
  Eigen::MatrixXd h_;
  Eigen::MatrixXd h_inv_;
  double det_;
};

//! Regression sample: compositions, responses, and cached ilr images.
class Dataset {
 public:
  Dataset(std::vector<SimplexPoint> covariates, Eigen::VectorXd responses);

  Eigen::Index size() const noexcept { return responses_.size(); }
  Eigen::Index dim() const noexcept { return covariates_.front().dim(); }
  const std::vector<SimplexPoint>& covariates() const noexcept {
    return covariates_;
  }
  const Eigen::VectorXd& responses() const noexcept { return responses_; }
  //! n x (D-1) matrix of ilr coordinates, row i = ilr(covariates[i]).
  const Eigen::MatrixXd& ilr_coords() const noexcept { return ilr_; }

  //! Row subset preserving order; reuses the cached ilr images.
  Dataset subset(const std::vector<Eigen::Index>& rows) const;

 private:
  Dataset() = default;

  std::vector<SimplexPoint> covariates_;
  Eigen::VectorXd responses_;
  Eigen::MatrixXd ilr_;
};

//! Kernel density value K_H at ilr coordinates u_star, x_star.
double kernel_value(const KernelSpec& spec, const Eigen::VectorXd& u_star,
                    const Eigen::VectorXd& x_star);

//! Normalized kernel weights of all data points at the query x.
//! Raises AllWeightsZero when every kernel value underflows to zero.
Eigen::VectorXd kernel_weights(const KernelSpec& spec, const Dataset& data,
                               const SimplexPoint& x);

//! Same, with the query supplied directly in ilr coordinates.
Eigen::VectorXd kernel_weights_ilr(const KernelSpec& spec, const Dataset& data,
                                   const Eigen::VectorXd& x_star);

//! Weighted empirical conditional CDF at y.
double conditional_cdf(const Eigen::VectorXd& weights,
                       const Eigen::VectorXd& responses, double y);

//! Left-continuous generalized inverse of the weighted empirical CDF:
//! the smallest response value whose CDF reaches q. No interpolation.
double weighted_quantile(const Eigen::VectorXd& weights,
                         const Eigen::VectorXd& responses, double q);

//! Kish effective sample size (sum w)^2 / sum w^2 of normalized weights.
double kish_ess(const Eigen::VectorXd& weights);

//! Local constant least-squares fit: the kernel-weighted mean.
double fit_local_constant_ls(const KernelSpec& spec, const Dataset& data,
                             const SimplexPoint& x);
double fit_local_constant_ls_ilr(const KernelSpec& spec, const Dataset& data,
                                 const Eigen::VectorXd& x_star);

//! Local linear least-squares fit at x: intercept and ilr-space slope.
struct LinearFit {
  double m_hat;
  Eigen::VectorXd slope;
};

//! Raises SingularDesign when the weighted design has condition number
//! >= 1e12 (too few effective neighbors); callers may fall back to the
//! local constant fit.
LinearFit fit_local_linear_ls(const KernelSpec& spec, const Dataset& data,
                              const SimplexPoint& x);
LinearFit fit_local_linear_ls_ilr(const KernelSpec& spec, const Dataset& data,
                                  const Eigen::VectorXd& x_star);

}  // namespace codareg
