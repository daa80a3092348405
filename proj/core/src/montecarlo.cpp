#include "codareg/montecarlo.hpp"

#include <atomic>
#include <optional>
#include <cmath>
#include <limits>
#include <thread>

#include "codareg/error.hpp"
#include "codareg/kernel.hpp"
#include "codareg/rng.hpp"

namespace codareg {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

double true_regression(const SimplexPoint& x, const SimplexPoint& b_comp) {
  return std::sin(aitchison_inner(x, b_comp));
}

Replication generate_replication(const McScenario& sc,
                                 std::uint64_t rep_index) {
  RngStream rng(sc.seed, rep_index);

  std::vector<SimplexPoint> covariates;
  covariates.reserve(static_cast<std::size_t>(sc.n));
  for (Eigen::Index i = 0; i < sc.n; ++i)
    covariates.push_back(dirichlet_sample(sc.alpha, rng));

  Eigen::VectorXd y(sc.n);
  for (Eigen::Index i = 0; i < sc.n; ++i)
    y[i] = true_regression(covariates[i], sc.b_comp) +
           sc.sigma * error_sample(sc.error_law, rng);

  std::vector<SimplexPoint> preds;
  preds.reserve(static_cast<std::size_t>(sc.n_pred));
  for (Eigen::Index s = 0; s < sc.n_pred; ++s)
    preds.push_back(dirichlet_sample(sc.alpha, rng));

  return Replication{Dataset(std::move(covariates), std::move(y)),
                     std::move(preds)};
}

double ise(const Eigen::VectorXd& estimates, const Eigen::VectorXd& truths) {
  if (estimates.size() != truths.size())
    throw Error(Errc::length_mismatch, "estimates and truths differ in length");
  if (estimates.size() == 0)
    throw Error(Errc::length_mismatch, "empty prediction grid");
  return (estimates - truths).squaredNorm() /
         static_cast<double>(estimates.size());
}

double squared_bias(const Eigen::MatrixXd& all_estimates,
                    const Eigen::VectorXd& truths) {
  if (all_estimates.cols() != truths.size())
    throw Error(Errc::length_mismatch, "estimate columns must match the grid");
  if (all_estimates.rows() == 0 || truths.size() == 0)
    throw Error(Errc::length_mismatch, "empty estimate matrix");
  const Eigen::VectorXd mean_est = all_estimates.colwise().mean();
  return (mean_est - truths).squaredNorm() /
         static_cast<double>(truths.size());
}

namespace {

void validate_scenario(const McScenario& sc) {
  if (sc.n < 1 || sc.n_reps < 1 || sc.n_pred < 1)
    throw Error(Errc::length_mismatch, "n, n_reps, and n_pred must be >= 1");
  if (!(sc.bandwidth_h > 0.0))
    throw Error(Errc::singular_bandwidth, "bandwidth must be positive");
  if (sc.estimators.empty())
    throw Error(Errc::length_mismatch, "no estimators requested");
  if (sc.b_comp.dim() != sc.alpha.alpha.size())
    throw Error(Errc::dimension_mismatch,
                "coefficient composition does not match the design dimension");
}

}  // namespace

McReport run_study(const McScenario& sc, int threads) {
  validate_scenario(sc);
  const Eigen::Index N = sc.n_reps;
  const Eigen::Index M = sc.n_pred;
  const auto n_est = static_cast<Eigen::Index>(sc.estimators.size());
  const Eigen::Index d = sc.b_comp.dim() - 1;
  const KernelSpec spec = KernelSpec::isotropic(sc.bandwidth_h, d);

  // Shared prediction grid: the rep-0 stream, so replications 1..N never
  // touch it and Bias2 compares all replications at the same points.
  const Replication rep0 = generate_replication(sc, 0);
  Eigen::MatrixXd grid_ilr(M, d);
  Eigen::VectorXd truths(M);
  for (Eigen::Index s = 0; s < M; ++s) {
    grid_ilr.row(s) = ilr(rep0.prediction_points[static_cast<std::size_t>(s)])
                          .transpose();
    truths[s] = true_regression(
        rep0.prediction_points[static_cast<std::size_t>(s)], sc.b_comp);
  }

  // Per-replication slots, written only by the owning worker.
  std::vector<Eigen::MatrixXd> estimates(
      static_cast<std::size_t>(n_est),
      Eigen::MatrixXd::Constant(N, M, kNaN));
  std::vector<std::vector<char>> failed(
      static_cast<std::size_t>(n_est),
      std::vector<char>(static_cast<std::size_t>(N), 0));
  std::vector<std::vector<char>> unconverged(
      static_cast<std::size_t>(n_est),
      std::vector<char>(static_cast<std::size_t>(N), 0));

  const auto run_rep = [&](Eigen::Index rep) {
    std::optional<Replication> r;
    try {
      r.emplace(generate_replication(sc, static_cast<std::uint64_t>(rep)));
    } catch (const Error&) {
      for (std::size_t e = 0; e < failed.size(); ++e)
        failed[e][static_cast<std::size_t>(rep - 1)] = 1;
      return;
    }
    for (Eigen::Index e = 0; e < n_est; ++e) {
      SurfaceConfig cfg;
      cfg.method = sc.estimators[static_cast<std::size_t>(e)];
      cfg.with_residuals = false;
      const auto ei = static_cast<std::size_t>(e);
      const auto ri = static_cast<std::size_t>(rep - 1);
      try {
        const SmootherFit fit = fit_surface(spec, cfg, r->data, grid_ilr);
        bool any_fail = false;
        bool any_unconv = false;
        for (const FitFlags& f : fit.flags) {
          any_fail = any_fail || f.failed;
          any_unconv = any_unconv || !f.converged;
        }
        if (!fit.estimates.allFinite()) any_fail = true;
        failed[ei][ri] = any_fail ? 1 : 0;
        unconverged[ei][ri] = any_unconv ? 1 : 0;
        if (!any_fail)
          estimates[ei].row(rep - 1) = fit.estimates.transpose();
      } catch (const Error&) {
        failed[ei][ri] = 1;
      }
    }
  };

  const int workers =
      std::max(1, std::min<int>(threads, static_cast<int>(N)));
  if (workers == 1) {
    for (Eigen::Index rep = 1; rep <= N; ++rep) run_rep(rep);
  } else {
    std::atomic<Eigen::Index> next{1};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t)
      pool.emplace_back([&] {
        for (Eigen::Index rep = next.fetch_add(1); rep <= N;
             rep = next.fetch_add(1))
          run_rep(rep);
      });
    for (auto& th : pool) th.join();
  }

  // Ordered reduction: identical for every worker count.
  McReport report;
  report.estimators = sc.estimators;
  report.n_reps = N;
  report.ise = Eigen::MatrixXd::Constant(N, n_est, kNaN);
  for (Eigen::Index e = 0; e < n_est; ++e) {
    const auto ei = static_cast<std::size_t>(e);
    std::vector<Eigen::Index> included;
    for (Eigen::Index rep = 0; rep < N; ++rep) {
      const bool drop = failed[ei][static_cast<std::size_t>(rep)] ||
                        unconverged[ei][static_cast<std::size_t>(rep)];
      if (drop) continue;
      included.push_back(rep);
      report.ise(rep, e) = ise(estimates[ei].row(rep).transpose(), truths);
    }
    double mise = kNaN;
    double b2 = kNaN;
    if (!included.empty()) {
      Eigen::MatrixXd kept(static_cast<Eigen::Index>(included.size()), M);
      double acc = 0.0;
      for (std::size_t k = 0; k < included.size(); ++k) {
        kept.row(static_cast<Eigen::Index>(k)) =
            estimates[ei].row(included[k]);
        acc += report.ise(included[k], e);
      }
      mise = acc / static_cast<double>(included.size());
      b2 = squared_bias(kept, truths);
    }
    report.mise.push_back(mise);
    report.bias2.push_back(b2);
    report.excluded.push_back(N - static_cast<Eigen::Index>(included.size()));
    Eigen::Index unc = 0;
    for (char u : unconverged[ei]) unc += u ? 1 : 0;
    report.nonconverged.push_back(unc);
  }
  return report;
}

}  // namespace codareg
