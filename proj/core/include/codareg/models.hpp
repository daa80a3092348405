#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "codareg/rng.hpp"
#include "codareg/simplex.hpp"

namespace codareg {

//! Dirichlet shape parameters, all strictly positive.
struct DirichletParams {
  Eigen::VectorXd alpha;

  explicit DirichletParams(Eigen::VectorXd a);
  Eigen::Index dim() const noexcept { return alpha.size(); }
};

//! Dirichlet density with respect to Lebesgue measure on the simplex.
double dirichlet_density(const SimplexPoint& x, const DirichletParams& p);

//! Dirichlet draw: D independent Gamma(alpha_j, 1) variates, closed.
//! Retries up to 100 times if a gamma draw underflows to zero, then
//! raises DegenerateDraw.
SimplexPoint dirichlet_sample(const DirichletParams& p, RngStream& rng);

//! Logistic-normal parameters in pivot ilr coordinates.
struct LogisticNormalParams {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;

  LogisticNormalParams(Eigen::VectorXd m, Eigen::MatrixXd s);
  const Eigen::MatrixXd& cholesky() const noexcept { return chol_; }

 private:
  Eigen::MatrixXd chol_;
};

//! Draw z ~ N(mu, sigma) in ilr coordinates and map through inv_ilr.
SimplexPoint logistic_normal_sample(const LogisticNormalParams& p,
                                    RngStream& rng);

//! The N(mu, sigma) density at ilr coordinates v.
double logistic_normal_density_ilr(const IlrVector& v,
                                   const LogisticNormalParams& p);

//! Contaminated Gaussian error law: (1-delta) N(0,1) + delta N(mu, sd^2).
struct ErrorLaw {
  double delta = 0.0;
  double mu_shift = 0.0;
  double sd_contam = 0.1;
};

//! One draw from the contaminated error law.
double error_sample(const ErrorLaw& law, RngStream& rng);

}  // namespace codareg
