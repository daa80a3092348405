#pragma once

#include <Eigen/Core>

#include "codareg/error.hpp"

namespace codareg {

//! Coordinates of a composition in the pivot ilr basis, length D-1.
using IlrVector = Eigen::VectorXd;

//! A D-part composition: strictly positive parts summing to one.
//!
//! Construction re-closes the input (divides by the part sum), so any
//! strictly positive vector is accepted. Boundary compositions (a zero
//! part) are rejected: the log-ratio machinery is undefined there.
class SimplexPoint {
 public:
  explicit SimplexPoint(const Eigen::VectorXd& raw);

  const Eigen::VectorXd& parts() const noexcept { return parts_; }
  Eigen::Index dim() const noexcept { return parts_.size(); }
  double operator[](Eigen::Index j) const { return parts_[j]; }

 private:
  Eigen::VectorXd parts_;
};

//! Normalizes a strictly positive vector to unit sum.
SimplexPoint closure(const Eigen::VectorXd& raw);

//! The neutral element e = (1/D, ..., 1/D).
SimplexPoint simplex_neutral(Eigen::Index d);

//! Perturbation x + y: closure of the component-wise product.
SimplexPoint perturb(const SimplexPoint& x, const SimplexPoint& y);

//! Powering alpha * x: closure of component-wise powers.
SimplexPoint power(double alpha, const SimplexPoint& x);

//! Difference perturbation x - y = perturb(x, power(-1, y)).
SimplexPoint perturb_diff(const SimplexPoint& x, const SimplexPoint& y);

//! Aitchison inner product: sum_j log(x_j/g(x)) * log(y_j/g(y)).
double aitchison_inner(const SimplexPoint& x, const SimplexPoint& y);

//! Aitchison norm: sqrt of the inner product of x with itself.
double aitchison_norm(const SimplexPoint& x);

//! Aitchison distance: norm of the difference perturbation.
double aitchison_dist(const SimplexPoint& x, const SimplexPoint& y);

//! Additive log-ratio transform, length D-1: log(x_j / x_D).
Eigen::VectorXd alr(const SimplexPoint& x);

//! Inverse alr: exponentiate, append 1, close.
SimplexPoint inv_alr(const Eigen::VectorXd& v);

//! Centred log-ratio transform, length D: log(x_j / g(x)). Sums to zero.
Eigen::VectorXd clr(const SimplexPoint& x);

//! Inverse clr: closure(exp(v)). Input must sum to zero within 1e-8.
SimplexPoint inv_clr(const Eigen::VectorXd& v);

//! The D x (D-1) pivot-basis contrast matrix U with ilr(x) = U^T log(x).
//!
//! Column j has sqrt(1/(j(j+1))) in rows 1..j, -sqrt(j/(j+1)) in row j+1,
//! and zero below. Satisfies U^T U = I and U U^T = I - (1/D) 1 1^T.
Eigen::MatrixXd pivot_contrast_matrix(Eigen::Index d);

//! Isometric log-ratio transform in the pivot basis.
IlrVector ilr(const SimplexPoint& x);

//! Inverse ilr: closure(exp(U v)).
SimplexPoint inv_ilr(const IlrVector& v);

}  // namespace codareg
