#include "codareg/bandwidth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "codareg/error.hpp"

namespace codareg {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// tau-scale tuning: Tukey c2 = 6.08 and its normal consistency constant
// b2 = E[rho_c2(Z)], Z ~ N(0,1), so tau estimates the SD at the normal.
constexpr double kTauC = 6.08;
constexpr double kTauB = 0.07486562107411134;

double sample_median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
  return 0.5 * (v[mid - 1] + hi);
}

std::vector<double> to_vector(const Eigen::VectorXd& r) {
  return std::vector<double>(r.data(), r.data() + r.size());
}

}  // namespace

const char* dispersion_name(CvDispersion d) {
  switch (d) {
    case CvDispersion::mad: return "mad";
    case CvDispersion::tau_scale: return "tau";
    case CvDispersion::s_scale: return "s";
  }
  return "unknown";
}

CvDispersion dispersion_from_name(const std::string& name) {
  if (name == "mad") return CvDispersion::mad;
  if (name == "tau") return CvDispersion::tau_scale;
  if (name == "s") return CvDispersion::s_scale;
  throw Error(Errc::parse_error, "unknown dispersion '" + name + "'");
}

std::vector<std::vector<Eigen::Index>> make_folds(Eigen::Index n, int folds,
                                                  RngStream rng) {
  if (n < 2)
    throw Error(Errc::fold_too_small, "need at least two observations");
  if (folds == 0) folds = static_cast<int>(n);  // leave-one-out
  if (folds < 2 || folds > n)
    throw Error(Errc::fold_too_small,
                "fold count must be 0 (leave-one-out) or in [2, n]");

  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(
        rng.uniform01() * static_cast<double>(i + 1));
    std::swap(perm[static_cast<std::size_t>(i)],
              perm[static_cast<std::size_t>(j)]);
  }

  std::vector<std::vector<Eigen::Index>> out(static_cast<std::size_t>(folds));
  const Eigen::Index base = n / folds;
  const Eigen::Index rem = n % folds;
  std::size_t pos = 0;
  for (int f = 0; f < folds; ++f) {
    const Eigen::Index len = base + (f < rem ? 1 : 0);
    auto& fold = out[static_cast<std::size_t>(f)];
    fold.assign(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                perm.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += static_cast<std::size_t>(len);
  }
  return out;
}

Eigen::VectorXd cv_residuals(
    const Dataset& data, double h, const SurfaceConfig& estimator_config,
    const std::vector<std::vector<Eigen::Index>>& folds) {
  const Eigen::Index n = data.size();
  const Eigen::Index d = data.ilr_coords().cols();
  const KernelSpec spec = KernelSpec::isotropic(h, d);

  SurfaceConfig cfg = estimator_config;
  cfg.with_residuals = false;

  Eigen::VectorXd out = Eigen::VectorXd::Constant(n, kNaN);
  std::vector<char> seen(static_cast<std::size_t>(n), 0);

  for (const auto& fold : folds) {
    std::vector<char> held(static_cast<std::size_t>(n), 0);
    for (Eigen::Index i : fold) {
      if (i < 0 || i >= n)
        throw Error(Errc::length_mismatch, "fold index out of range");
      held[static_cast<std::size_t>(i)] = 1;
    }
    std::vector<Eigen::Index> train_rows;
    train_rows.reserve(static_cast<std::size_t>(n) - fold.size());
    for (Eigen::Index i = 0; i < n; ++i)
      if (!held[static_cast<std::size_t>(i)]) train_rows.push_back(i);
    if (train_rows.empty())
      throw Error(Errc::fold_too_small, "a fold leaves no training data");

    Eigen::MatrixXd queries(static_cast<Eigen::Index>(fold.size()), d);
    for (std::size_t k = 0; k < fold.size(); ++k)
      queries.row(static_cast<Eigen::Index>(k)) = data.ilr_coords().row(fold[k]);

    try {
      const Dataset train = data.subset(train_rows);
      const SmootherFit fit = fit_surface(spec, cfg, train, queries);
      for (std::size_t k = 0; k < fold.size(); ++k) {
        const auto qi = static_cast<Eigen::Index>(k);
        if (!fit.flags[k].failed && std::isfinite(fit.estimates[qi]))
          out[fold[k]] = data.responses()[fold[k]] - fit.estimates[qi];
      }
    } catch (const Error&) {
      // fold-wide failure (e.g. degenerate training scale): points stay NaN
    }
    for (Eigen::Index i : fold) {
      if (seen[static_cast<std::size_t>(i)])
        throw Error(Errc::length_mismatch, "folds overlap");
      seen[static_cast<std::size_t>(i)] = 1;
    }
  }
  for (Eigen::Index i = 0; i < n; ++i)
    if (!seen[static_cast<std::size_t>(i)])
      throw Error(Errc::length_mismatch, "folds do not cover all indices");
  return out;
}

Eigen::VectorXd cv_residuals(const Dataset& data, double h,
                             const SurfaceConfig& estimator_config, int folds,
                             RngStream rng) {
  return cv_residuals(data, h, estimator_config,
                      make_folds(data.size(), folds, rng));
}

double score_ls(const Eigen::VectorXd& residuals) {
  if (residuals.size() == 0)
    throw Error(Errc::length_mismatch, "empty residual vector");
  return residuals.squaredNorm() / static_cast<double>(residuals.size());
}

double residual_dispersion(const Eigen::VectorXd& residuals,
                           CvDispersion dispersion) {
  const double med = sample_median(to_vector(residuals));
  const Eigen::VectorXd centered = residuals.array() - med;
  switch (dispersion) {
    case CvDispersion::mad:
      return 1.4826 * sample_median(to_vector(centered.cwiseAbs()));
    case CvDispersion::s_scale: {
      try {
        return global_s_scale_residuals(centered, ScaleSpec{});
      } catch (const Error&) {
        return 0.0;  // degenerate residual set: dispersion vanishes
      }
    }
    case CvDispersion::tau_scale: {
      const double s0 =
          1.4826 * sample_median(to_vector(centered.cwiseAbs()));
      if (s0 <= 0.0) return 0.0;
      const RhoSpec rho2{RhoFamily::tukey_bisquare, kTauC};
      double acc = 0.0;
      for (Eigen::Index i = 0; i < centered.size(); ++i)
        acc += rho(rho2, centered[i] / s0);
      acc /= static_cast<double>(centered.size());
      return s0 * std::sqrt(acc / kTauB);
    }
  }
  return 0.0;
}

double score_robust(const Eigen::VectorXd& residuals, CvLocation /*location*/,
                    CvDispersion dispersion) {
  if (residuals.size() == 0)
    throw Error(Errc::length_mismatch, "empty residual vector");
  const double med = sample_median(to_vector(residuals));
  const double s = residual_dispersion(residuals, dispersion);
  return med * med + s * s;
}

namespace {

struct GridEval {
  double score = kNaN;
  double fail_fraction = 1.0;
  bool excluded = true;
  Eigen::VectorXd residuals;
};

GridEval evaluate_h(const Dataset& data, double h, const CvConfig& cfg,
                    const SurfaceConfig& est,
                    const std::vector<std::vector<Eigen::Index>>& folds) {
  GridEval ev;
  ev.residuals = cv_residuals(data, h, est, folds);
  const Eigen::Index n = ev.residuals.size();
  std::vector<double> ok;
  ok.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    if (std::isfinite(ev.residuals[i])) ok.push_back(ev.residuals[i]);
  ev.fail_fraction =
      1.0 - static_cast<double>(ok.size()) / static_cast<double>(n);
  if (ok.empty() || ev.fail_fraction > cfg.max_fail_fraction) return ev;

  Eigen::VectorXd r =
      Eigen::Map<const Eigen::VectorXd>(ok.data(),
                                        static_cast<Eigen::Index>(ok.size()));
  ev.score = cfg.criterion == CvCriterion::ls_cv
                 ? score_ls(r)
                 : score_robust(r, cfg.location, cfg.dispersion);
  ev.excluded = false;
  return ev;
}

}  // namespace

CvResult select_bandwidth(const Dataset& data, const CvConfig& cfg,
                          const SurfaceConfig& estimator_config) {
  if (cfg.grid.empty())
    throw Error(Errc::no_valid_bandwidth, "empty bandwidth grid");
  for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
    if (!(cfg.grid[i] > 0.0))
      throw Error(Errc::no_valid_bandwidth, "bandwidths must be positive");
    if (i > 0 && !(cfg.grid[i] > cfg.grid[i - 1]))
      throw Error(Errc::no_valid_bandwidth,
                  "bandwidth grid must be strictly increasing");
  }

  CvResult res;
  res.grid = cfg.grid;
  res.folds = make_folds(data.size(), cfg.folds, cfg.rng);

  double best = std::numeric_limits<double>::infinity();
  double best_h = kNaN;
  for (double h : cfg.grid) {
    GridEval ev = evaluate_h(data, h, cfg, estimator_config, res.folds);
    res.scores.push_back(ev.score);
    res.fail_fraction.push_back(ev.fail_fraction);
    res.excluded.push_back(ev.excluded ? 1 : 0);
    res.residual_sets.push_back(std::move(ev.residuals));
    if (!ev.excluded && ev.score < best) {  // strict: ties keep smaller h
      best = ev.score;
      best_h = h;
    }
  }
  if (!std::isfinite(best_h))
    throw Error(Errc::no_valid_bandwidth,
                "every candidate bandwidth was excluded");
  res.chosen_h = best_h;

  if (cfg.refine && cfg.refine_step > 0.0 && cfg.refine_radius > 0.0) {
    res.refined = true;
    for (double h = std::max(best_h - cfg.refine_radius, cfg.refine_step);
         h <= best_h + cfg.refine_radius + 1e-12; h += cfg.refine_step) {
      if (std::abs(h - best_h) < 1e-12) continue;  // already scored
      res.refined_grid.push_back(h);
      GridEval ev = evaluate_h(data, h, cfg, estimator_config, res.folds);
      res.refined_scores.push_back(ev.score);
      if (!ev.excluded && ev.score < best) {
        best = ev.score;
        res.chosen_h = h;
      }
    }
  }
  return res;
}

}  // namespace codareg
