#include "codareg/robust.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "codareg/error.hpp"

namespace codareg {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sup_rho(const RhoSpec& spec) {
  return spec.family == RhoFamily::huber
             ? std::numeric_limits<double>::infinity()
             : 1.0;
}

double median_abs(const Eigen::VectorXd& r) {
  std::vector<double> a(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) a[i] = std::abs(r[i]);
  const std::size_t mid = a.size() / 2;
  std::nth_element(a.begin(), a.begin() + mid, a.end());
  double hi = a[mid];
  if (a.size() % 2 == 0) {
    std::nth_element(a.begin(), a.begin() + mid - 1, a.begin() + mid);
    return 0.5 * (a[mid - 1] + hi);
  }
  return hi;
}

// Root of sum_i w_i rho_c0(r_i / s) = b in s, bracketing + bisection.
double solve_s_scale(const Eigen::VectorXd& residuals,
                     const Eigen::VectorXd& weights, const RhoSpec& rho0,
                     double b) {
  if (!(b > 0.0) || b >= sup_rho(rho0))
    throw Error(Errc::parse_error,
                "scale target b must lie in (0, sup rho)");
  const double max_abs = residuals.cwiseAbs().maxCoeff();
  if (max_abs == 0.0)
    throw Error(Errc::zero_scale, "all residuals are zero");

  double nonzero_mass = 0.0;
  for (Eigen::Index i = 0; i < residuals.size(); ++i)
    if (residuals[i] != 0.0) nonzero_mass += weights[i];
  if (b >= nonzero_mass * sup_rho(rho0))
    throw Error(Errc::no_bracket,
                "nonzero-residual mass cannot reach the target b");

  const auto g = [&](double s) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < residuals.size(); ++i)
      acc += weights[i] * rho(rho0, residuals[i] / s);
    return acc - b;
  };

  double lo = std::max(median_abs(residuals) / 1e6, 1e-12);
  double hi = 10.0 * max_abs;
  int guard = 0;
  while (g(lo) <= 0.0 && ++guard <= 120) lo *= 0.5;
  guard = 0;
  while (g(hi) >= 0.0) {
    hi *= 2.0;
    if (++guard > 120)
      throw Error(Errc::no_bracket, "could not bracket the S-scale root");
  }
  while ((hi - lo) > 1e-12 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double rho(const RhoSpec& spec, double r) {
  const double s = r / spec.c;
  switch (spec.family) {
    case RhoFamily::tukey_bisquare: {
      const double s2 = s * s;
      if (s2 >= 1.0) return 1.0;
      return s2 * (3.0 + s2 * (-3.0 + s2));
    }
    case RhoFamily::huber: {
      const double a = std::abs(s);
      return a <= 1.0 ? 0.5 * s * s : a - 0.5;
    }
    case RhoFamily::hard_rejection:
      return std::abs(r) > spec.c ? 1.0 : 0.0;
  }
  return 0.0;
}

double psi(const RhoSpec& spec, double r) {
  const double s = r / spec.c;
  switch (spec.family) {
    case RhoFamily::tukey_bisquare: {
      const double s2 = s * s;
      if (s2 > 1.0) return 0.0;
      return s * (6.0 + s2 * (-12.0 + 6.0 * s2)) / spec.c;
    }
    case RhoFamily::huber:
      return std::clamp(s, -1.0, 1.0) / spec.c;
    case RhoFamily::hard_rejection:
      return 0.0;
  }
  return 0.0;
}

double weight_w(const RhoSpec& spec, double r) {
  const double s = r / spec.c;
  switch (spec.family) {
    case RhoFamily::tukey_bisquare: {
      const double s2 = s * s;
      if (s2 > 1.0) return 0.0;
      const double t = 1.0 - s2;
      return 6.0 * t * t / (spec.c * spec.c);
    }
    case RhoFamily::huber: {
      const double a = std::abs(s);
      const double cc = spec.c * spec.c;
      return a <= 1.0 ? 1.0 / cc : 1.0 / (cc * a);
    }
    case RhoFamily::hard_rejection:
      return 0.0;
  }
  return 0.0;
}

double local_mad(const Eigen::VectorXd& weights, const Eigen::VectorXd& responses,
                 double m_ini) {
  const Eigen::VectorXd abs_res = (responses.array() - m_ini).abs();
  const double mad = weighted_quantile(weights, abs_res, 0.5);
  if (mad <= 0.0)
    throw Error(Errc::zero_scale, "local MAD is zero");
  return mad;
}

double local_s_scale(const Eigen::VectorXd& weights,
                     const Eigen::VectorXd& responses, double m_ini,
                     const ScaleSpec& spec) {
  if (weights.size() != responses.size())
    throw Error(Errc::length_mismatch, "weights and responses differ in length");
  return solve_s_scale(responses.array() - m_ini, weights, spec.rho0, spec.b);
}

double global_s_scale(const Dataset& data, const Eigen::VectorXd& m_ini_values,
                      const ScaleSpec& spec) {
  if (m_ini_values.size() != data.size())
    throw Error(Errc::length_mismatch,
                "initial fits and dataset differ in length");
  return global_s_scale_residuals(data.responses() - m_ini_values, spec);
}

double global_s_scale_residuals(const Eigen::VectorXd& residuals,
                                const ScaleSpec& spec) {
  const Eigen::VectorXd uniform =
      Eigen::VectorXd::Constant(residuals.size(),
                                1.0 / static_cast<double>(residuals.size()));
  return solve_s_scale(residuals, uniform, spec.rho0, spec.b);
}

namespace {

double m_objective(const Eigen::VectorXd& w, const Eigen::VectorXd& y,
                   const RhoSpec& rho1, double m, double sigma) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    acc += w[i] * rho(rho1, (y[i] - m) / sigma);
  return acc;
}

void validate_m_config(const MSmootherConfig& cfg) {
  if (!(cfg.rho1.c > cfg.scale.rho0.c))
    throw Error(Errc::parse_error,
                "the M-step constant c1 must exceed the scale constant c0");
  if (cfg.max_iter < 1 || !(cfg.tol > 0.0))
    throw Error(Errc::parse_error, "invalid IRWLS iteration controls");
}

// Local constant IRWLS given precomputed kernel weights. Convergence
// requires both a small step and the estimating equation
// sum_i w_i psi_c1((y_i - m)/sigma) = 0 within tol.
LocalMFit irwls_constant(const Eigen::VectorXd& w, const Eigen::VectorXd& y,
                         const MSmootherConfig& cfg, double sigma,
                         std::vector<double>* objective_trace) {
  double m = weighted_quantile(w, y, 0.5);
  if (objective_trace)
    objective_trace->push_back(m_objective(w, y, cfg.rho1, m, sigma));
  for (int it = 0; it < cfg.max_iter; ++it) {
    double sw = 0.0;
    double swy = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double wi = w[i] * weight_w(cfg.rho1, (y[i] - m) / sigma);
      sw += wi;
      swy += wi * y[i];
    }
    if (sw <= 0.0) return {m, false};  // every point rejected by the loss
    const double m_new = swy / sw;
    const double score = sw * (m_new - m) / sigma;
    if (std::abs(score) <= cfg.tol &&
        std::abs(m_new - m) <= cfg.tol * (1.0 + std::abs(m)))
      return {m, true};  // certified at the current iterate
    if (objective_trace)
      objective_trace->push_back(m_objective(w, y, cfg.rho1, m_new, sigma));
    m = m_new;
  }
  return {m, false};
}

// Local linear IRWLS given centered regressors Z (rows z_i - q).
LinearMFit irwls_linear(const Eigen::VectorXd& w, const Eigen::VectorXd& y,
                        const Eigen::MatrixXd& Z, const MSmootherConfig& cfg,
                        double sigma) {
  const Eigen::Index n = y.size();
  const Eigen::Index p = Z.cols() + 1;
  Eigen::MatrixXd X(n, p);
  X.col(0).setOnes();
  X.rightCols(Z.cols()) = Z;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  beta[0] = weighted_quantile(w, y, 0.5);

  for (int it = 0; it < cfg.max_iter; ++it) {
    Eigen::VectorXd wr(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = (y[i] - X.row(i).dot(beta)) / sigma;
      wr[i] = w[i] * weight_w(cfg.rho1, r);
    }
    const Eigen::MatrixXd A =
        X.transpose() * wr.asDiagonal() * X;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    const double lo = es.eigenvalues().minCoeff();
    const double hi_ev = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi_ev >= 1e12 * lo)
      throw Error(Errc::singular_design,
                  "weighted design is numerically singular");
    const Eigen::VectorXd rhs = X.transpose() * (wr.asDiagonal() * y);
    const Eigen::VectorXd beta_new = A.llt().solve(rhs);
    const bool done = (beta_new - beta).cwiseAbs().maxCoeff() <=
                      cfg.tol * (1.0 + std::abs(beta[0]));
    beta = beta_new;
    if (done) return {beta[0], beta.tail(p - 1), true};
  }
  return {beta[0], beta.tail(p - 1), false};
}

}  // namespace

LocalMFit fit_local_m_ilr(const KernelSpec& spec, const MSmootherConfig& cfg,
                          const Dataset& data, const Eigen::VectorXd& x_star,
                          double sigma, std::vector<double>* objective_trace) {
  const Eigen::VectorXd w = kernel_weights_ilr(spec, data, x_star);
  return irwls_constant(w, data.responses(), cfg, sigma, objective_trace);
}

LocalMFit fit_local_m(const KernelSpec& spec, const MSmootherConfig& cfg,
                      const Dataset& data, const SimplexPoint& x, double sigma,
                      std::vector<double>* objective_trace) {
  return fit_local_m_ilr(spec, cfg, data, ilr(x), sigma, objective_trace);
}

LinearMFit fit_local_linear_m_ilr(const KernelSpec& spec,
                                  const MSmootherConfig& cfg,
                                  const Dataset& data,
                                  const Eigen::VectorXd& x_star, double sigma) {
  const Eigen::VectorXd w = kernel_weights_ilr(spec, data, x_star);
  const Eigen::MatrixXd Z = data.ilr_coords().rowwise() - x_star.transpose();
  return irwls_linear(w, data.responses(), Z, cfg, sigma);
}

LinearMFit fit_local_linear_m(const KernelSpec& spec, const MSmootherConfig& cfg,
                              const Dataset& data, const SimplexPoint& x,
                              double sigma) {
  return fit_local_linear_m_ilr(spec, cfg, data, ilr(x), sigma);
}

const char* method_name(Method m) {
  switch (m) {
    case Method::cl0: return "cl0";
    case Method::cl1: return "cl1";
    case Method::rob0: return "rob0";
    case Method::rob1: return "rob1";
  }
  return "unknown";
}

Method method_from_name(const std::string& name) {
  if (name == "cl0") return Method::cl0;
  if (name == "cl1") return Method::cl1;
  if (name == "rob0") return Method::rob0;
  if (name == "rob1") return Method::rob1;
  throw Error(Errc::parse_error, "unknown method '" + name + "'");
}

namespace {

struct PointFit {
  double value = kNaN;
  Eigen::VectorXd slope;
  FitFlags flags;
  double local_scale = kNaN;
};

// One query point of the batch driver; errors become flags, not throws.
PointFit fit_one(const KernelSpec& spec, const SurfaceConfig& cfg,
                 const Dataset& data, const Eigen::VectorXd& q,
                 double global_scale) {
  const Eigen::Index d = data.ilr_coords().cols();
  PointFit out;
  out.slope = Eigen::VectorXd::Zero(d);

  Eigen::VectorXd w;
  try {
    w = kernel_weights_ilr(spec, data, q);
  } catch (const Error&) {
    out.flags.failed = true;
    return out;
  }
  const Eigen::VectorXd& y = data.responses();
  const bool robust = cfg.method == Method::rob0 || cfg.method == Method::rob1;

  double sigma = global_scale;
  if (robust && cfg.m.scale.kind != ScaleKind::global_s) {
    const double m0 = weighted_quantile(w, y, 0.5);
    try {
      sigma = cfg.m.scale.kind == ScaleKind::local_mad
                  ? local_mad(w, y, m0)
                  : local_s_scale(w, y, m0, cfg.m.scale);
    } catch (const Error& e) {
      if (e.code() != Errc::zero_scale) {
        out.flags.failed = true;
        return out;
      }
      sigma = global_scale;  // degenerate local scale, patched globally
      out.flags.scale_patched = true;
    }
    out.local_scale = sigma;
  }

  const bool linear = cfg.method == Method::cl1 || cfg.method == Method::rob1;
  const bool thin =
      cfg.fallback_to_constant &&
      kish_ess(w) < static_cast<double>(data.dim());

  const auto constant_fit = [&]() {
    if (robust) {
      const LocalMFit f = irwls_constant(w, y, cfg.m, sigma, nullptr);
      out.value = f.value;
      out.flags.converged = f.converged;
    } else {
      out.value = w.dot(y);
    }
  };

  if (!linear || thin) {
    out.flags.fell_back = linear && thin;
    constant_fit();
    return out;
  }

  try {
    if (robust) {
      const Eigen::MatrixXd Z = data.ilr_coords().rowwise() - q.transpose();
      const LinearMFit f = irwls_linear(w, y, Z, cfg.m, sigma);
      out.value = f.m_hat;
      out.slope = f.slope;
      out.flags.converged = f.converged;
    } else {
      const LinearFit f = fit_local_linear_ls_ilr(spec, data, q);
      out.value = f.m_hat;
      out.slope = f.slope;
    }
  } catch (const Error& e) {
    if (e.code() == Errc::singular_design && cfg.fallback_to_constant) {
      out.flags.fell_back = true;
      constant_fit();
    } else {
      out.flags.failed = true;
    }
  }
  return out;
}

}  // namespace

SmootherFit fit_surface(const KernelSpec& spec, const SurfaceConfig& cfg,
                        const Dataset& data, const Eigen::MatrixXd& query_ilr) {
  if (query_ilr.cols() != data.ilr_coords().cols())
    throw Error(Errc::dimension_mismatch,
                "query ilr coordinates do not match the dataset dimension");

  const Eigen::Index n = data.size();
  const Eigen::Index nq = query_ilr.rows();
  const bool robust = cfg.method == Method::rob0 || cfg.method == Method::rob1;

  SmootherFit fit;
  fit.method = cfg.method;
  fit.bandwidth = spec.bandwidth();
  fit.estimates.resize(nq);
  fit.slopes = Eigen::MatrixXd::Zero(nq, data.ilr_coords().cols());
  fit.flags.resize(static_cast<std::size_t>(nq));
  fit.global_scale = kNaN;

  if (robust) {
    // Initial local medians at the data points anchor the residual scale.
    fit.m_ini.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd w =
          kernel_weights_ilr(spec, data, data.ilr_coords().row(i).transpose());
      fit.m_ini[i] = weighted_quantile(w, data.responses(), 0.5);
    }
    fit.global_scale =
        global_s_scale(data, fit.m_ini, cfg.m.scale);
  }

  const bool local_scale_mode =
      robust && cfg.m.scale.kind != ScaleKind::global_s;
  if (local_scale_mode) fit.local_scales.resize(nq);

  for (Eigen::Index k = 0; k < nq; ++k) {
    PointFit pf = fit_one(spec, cfg, data, query_ilr.row(k).transpose(),
                          fit.global_scale);
    fit.estimates[k] = pf.value;
    fit.slopes.row(k) = pf.slope.transpose();
    fit.flags[static_cast<std::size_t>(k)] = pf.flags;
    if (local_scale_mode) fit.local_scales[k] = pf.local_scale;
  }

  if (cfg.with_residuals) {
    fit.residuals.resize(n);
    fit.data_flags.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      PointFit pf = fit_one(spec, cfg, data, data.ilr_coords().row(i).transpose(),
                            fit.global_scale);
      fit.residuals[i] = data.responses()[i] - pf.value;
      fit.data_flags[static_cast<std::size_t>(i)] = pf.flags;
    }
  }
  return fit;
}

SmootherFit fit_surface(const KernelSpec& spec, const SurfaceConfig& cfg,
                        const Dataset& data,
                        const std::vector<SimplexPoint>& query_points) {
  Eigen::MatrixXd q(static_cast<Eigen::Index>(query_points.size()),
                    data.ilr_coords().cols());
  for (std::size_t i = 0; i < query_points.size(); ++i)
    q.row(static_cast<Eigen::Index>(i)) = ilr(query_points[i]).transpose();
  return fit_surface(spec, cfg, data, q);
}

}  // namespace codareg
