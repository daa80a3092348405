#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "codareg/models.hpp"
#include "codareg/robust.hpp"

namespace codareg {

//! One simulation scenario: design distribution, regression signal,
//! error law, sizes, fixed bandwidth, estimator set, and master seed.
struct McScenario {
  DirichletParams alpha;
  SimplexPoint b_comp;
  double sigma = 1.0;
  ErrorLaw error_law{};
  Eigen::Index n = 100;        // sample size per replication
  Eigen::Index n_reps = 500;   // replications N
  Eigen::Index n_pred = 100;   // prediction grid size M
  double bandwidth_h = 1.0;    // H = h I on the ilr space
  std::vector<Method> estimators{Method::cl0, Method::cl1, Method::rob0,
                                 Method::rob1};
  std::uint64_t seed = 20260822;
};

//! Aggregates of one study. A replication is excluded from an
//! estimator's aggregates when any of its grid fits failed or did not
//! converge; exclusions never remove the replication for the others.
struct McReport {
  std::vector<Method> estimators;
  Eigen::MatrixXd ise;                     // n_reps x estimators, NaN = excluded
  std::vector<double> mise;                // mean ISE over included reps
  std::vector<double> bias2;               // squared bias on the shared grid
  std::vector<Eigen::Index> excluded;      // reps dropped per estimator
  std::vector<Eigen::Index> nonconverged;  // reps with an unconverged IRWLS fit
  Eigen::Index n_reps = 0;
};

//! m(x) = sin(<x, b>_a).
double true_regression(const SimplexPoint& x, const SimplexPoint& b_comp);

//! One replication keyed by (seed, rep_index): n Dirichlet covariates,
//! then n error draws, then n_pred fresh prediction covariates, all from
//! the same stream so a replication is a pure function of its key.
struct Replication {
  Dataset data;
  std::vector<SimplexPoint> prediction_points;
};
Replication generate_replication(const McScenario& sc,
                                 std::uint64_t rep_index);

//! Integrated squared error over a prediction grid: mean squared gap.
double ise(const Eigen::VectorXd& estimates, const Eigen::VectorXd& truths);

//! Squared bias of the pointwise mean estimate over a shared grid:
//! (1/M) sum_s ( mean_l m_hat_l(x_s) - m(x_s) )^2.
double squared_bias(const Eigen::MatrixXd& all_estimates,
                    const Eigen::VectorXd& truths);

//! Runs the full study. The prediction grid is drawn once from the
//! rep-0 stream and shared by every replication, so Bias2 is well
//! defined; replications 1..N run independently (optionally on worker
//! threads) with per-replication streams, and the aggregation is an
//! ordered reduction, so the report is identical for any thread count.
McReport run_study(const McScenario& sc, int threads = 1);

}  // namespace codareg
