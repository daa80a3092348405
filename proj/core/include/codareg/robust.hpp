#pragma once

#include <vector>

#include <Eigen/Core>

#include "codareg/kernel.hpp"
#include "codareg/simplex.hpp"

namespace codareg {

//! Bounded loss families. rho_c(r) = rho(r/c) throughout.
enum class RhoFamily { tukey_bisquare, huber, hard_rejection };

struct RhoSpec {
  RhoFamily family = RhoFamily::tukey_bisquare;
  double c = 4.685;
};

//! Loss rho_c(r). Tukey: min(3s^2 - 3s^4 + s^6, 1) with s = r/c.
//! Hard rejection: 1 when |r| > c, else 0. Huber: unbounded quadratic/linear.
double rho(const RhoSpec& spec, double r);

//! Derivative psi_c = rho_c'. Tukey: (6s - 12s^3 + 6s^5)/c inside |s| <= 1.
double psi(const RhoSpec& spec, double r);

//! IRWLS weight W_c(r) = psi_c(r)/r, with the analytic limit at r = 0
//! (Tukey: 6/c^2) so the iteration never divides zero by zero.
double weight_w(const RhoSpec& spec, double r);

//! Scale estimator selection used by the robust smoothers.
enum class ScaleKind { local_mad, local_s, global_s };

struct ScaleSpec {
  ScaleKind kind = ScaleKind::global_s;
  RhoSpec rho0{RhoFamily::tukey_bisquare, 1.54764};
  double b = 0.5;
};

//! Weighted median of |y_i - m_ini|: the local MAD.
//! Raises ZeroScale when the result is zero.
double local_mad(const Eigen::VectorXd& weights, const Eigen::VectorXd& responses,
                 double m_ini);

//! Local S-scale: the root in s of sum_i w_i rho_c0((y_i - m_ini)/s) = b,
//! by bracketing and bisection. Raises ZeroScale when all residuals are
//! zero and NoBracket when the nonzero-residual mass cannot reach b.
double local_s_scale(const Eigen::VectorXd& weights,
                     const Eigen::VectorXd& responses, double m_ini,
                     const ScaleSpec& spec);

//! Global S-scale: (1/n) sum_i rho_c0((y_i - m_ini_i)/s) = b.
double global_s_scale(const Dataset& data, const Eigen::VectorXd& m_ini_values,
                      const ScaleSpec& spec);

//! Global S-scale directly from a residual vector.
double global_s_scale_residuals(const Eigen::VectorXd& residuals,
                                const ScaleSpec& spec);

//! IRWLS configuration for the local M-smoothers.
struct MSmootherConfig {
  RhoSpec rho1{RhoFamily::tukey_bisquare, 4.685};
  ScaleSpec scale{};
  int max_iter = 100;
  double tol = 1e-8;
};

struct LocalMFit {
  double value = 0.0;
  bool converged = true;
};

struct LinearMFit {
  double m_hat = 0.0;
  Eigen::VectorXd slope;
  bool converged = true;
};

//! Robust local M-smoother (local constant), IRWLS from the local median.
//! Non-convergence returns the last iterate flagged, not an error.
//! The optional trace records the objective sum_i w_i rho_c1((y_i - m)/sigma)
//! at each iterate, for monotonicity checks.
LocalMFit fit_local_m(const KernelSpec& spec, const MSmootherConfig& cfg,
                      const Dataset& data, const SimplexPoint& x, double sigma,
                      std::vector<double>* objective_trace = nullptr);
LocalMFit fit_local_m_ilr(const KernelSpec& spec, const MSmootherConfig& cfg,
                          const Dataset& data, const Eigen::VectorXd& x_star,
                          double sigma,
                          std::vector<double>* objective_trace = nullptr);

//! Robust local linear M-smoother, IRWLS from (local median, zero slope).
//! Raises SingularDesign when the weighted design degenerates; callers
//! may fall back to the local constant M fit.
LinearMFit fit_local_linear_m(const KernelSpec& spec, const MSmootherConfig& cfg,
                              const Dataset& data, const SimplexPoint& x,
                              double sigma);
LinearMFit fit_local_linear_m_ilr(const KernelSpec& spec,
                                  const MSmootherConfig& cfg,
                                  const Dataset& data,
                                  const Eigen::VectorXd& x_star, double sigma);

//! The four estimators of the simulation study.
enum class Method { cl0, cl1, rob0, rob1 };

const char* method_name(Method m);
Method method_from_name(const std::string& name);

//! Per-query-point status flags; failures are recorded, never thrown.
struct FitFlags {
  bool converged = true;      // IRWLS reached its tolerance
  bool fell_back = false;     // local linear degraded to local constant
  bool scale_patched = false; // zero local scale replaced by the global one
  bool failed = false;        // no usable estimate (NaN recorded)
};

//! Batch fit configuration. The scale mode follows m.scale.kind:
//! global_s computes one global S-scale from the initial local medians;
//! local_mad / local_s compute a per-query scale, substituting the global
//! S-scale (flagged) when the local one degenerates to zero.
struct SurfaceConfig {
  Method method = Method::rob1;
  MSmootherConfig m{};
  bool fallback_to_constant = true;
  bool with_residuals = true;  // also fit at the data points
};

struct SmootherFit {
  Method method = Method::rob1;
  Eigen::MatrixXd bandwidth;
  Eigen::VectorXd estimates;        // one per query point
  Eigen::MatrixXd slopes;           // query x (D-1); zero rows for constant fits
  std::vector<FitFlags> flags;      // one per query point
  double global_scale = 0.0;        // NaN for classical fits
  Eigen::VectorXd local_scales;     // per query under local scale modes
  Eigen::VectorXd m_ini;            // local medians at data points (robust)
  Eigen::VectorXd residuals;        // y_i - m_hat(x_i) when with_residuals
  std::vector<FitFlags> data_flags; // flags of the data-point fits
};

//! Fits the configured estimator at every query point. Per-point errors
//! become flagged NaN entries; the batch never aborts on one bad point.
SmootherFit fit_surface(const KernelSpec& spec, const SurfaceConfig& cfg,
                        const Dataset& data, const Eigen::MatrixXd& query_ilr);
SmootherFit fit_surface(const KernelSpec& spec, const SurfaceConfig& cfg,
                        const Dataset& data,
                        const std::vector<SimplexPoint>& query_points);

}  // namespace codareg
