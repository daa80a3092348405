#pragma once

#include <vector>

#include <Eigen/Core>

#include "codareg/kernel.hpp"
#include "codareg/rng.hpp"
#include "codareg/robust.hpp"

namespace codareg {

enum class CvCriterion { ls_cv, robust_cv };
enum class CvLocation { median };
enum class CvDispersion { mad, tau_scale, s_scale };

const char* dispersion_name(CvDispersion d);
CvDispersion dispersion_from_name(const std::string& name);

//! Cross-validation over an isotropic bandwidth grid H = h I.
struct CvConfig {
  std::vector<double> grid;  // positive, strictly increasing
  int folds = 5;             // >= 2, or 0 for leave-one-out
  CvCriterion criterion = CvCriterion::robust_cv;
  CvLocation location = CvLocation::median;
  CvDispersion dispersion = CvDispersion::mad;
  RngStream rng{1234, 0};    // fold shuffling only
  double max_fail_fraction = 0.2;  // an h above this is excluded
  bool refine = false;       // optional second pass around the winner
  double refine_step = 0.02;
  double refine_radius = 0.1;
};

struct CvResult {
  std::vector<double> grid;
  std::vector<double> scores;         // NaN where excluded
  std::vector<double> fail_fraction;  // share of non-finite CV residuals
  std::vector<char> excluded;
  std::vector<Eigen::VectorXd> residual_sets;  // per h, NaN marks failures
  std::vector<std::vector<Eigen::Index>> folds;
  double chosen_h = 0.0;
  bool refined = false;
  std::vector<double> refined_grid;
  std::vector<double> refined_scores;
};

//! Seeded Fisher-Yates shuffle, then contiguous near-equal blocks.
//! folds = 0 yields the leave-one-out partition. Raises FoldTooSmall
//! when folds is 1, negative, or exceeds n.
std::vector<std::vector<Eigen::Index>> make_folds(Eigen::Index n, int folds,
                                                  RngStream rng);

//! Held-out residuals y_i - m_hat^{(-fold(i))}(x_i) in original index
//! order; failed predictions come back as NaN, never as a throw.
Eigen::VectorXd cv_residuals(const Dataset& data, double h,
                             const SurfaceConfig& estimator_config,
                             const std::vector<std::vector<Eigen::Index>>& folds);
Eigen::VectorXd cv_residuals(const Dataset& data, double h,
                             const SurfaceConfig& estimator_config, int folds,
                             RngStream rng);

//! Classical criterion: mean of squared residuals.
double score_ls(const Eigen::VectorXd& residuals);

//! Robust criterion: median(r)^2 + s_n^2 with s_n the configured
//! dispersion of the residuals about their median (MAD scaled by 1.4826,
//! Tukey S-scale, or tau-scale). A degenerate dispersion counts as zero.
double score_robust(const Eigen::VectorXd& residuals, CvLocation location,
                    CvDispersion dispersion);

//! The dispersion component alone (exposed for tests and diagnostics).
double residual_dispersion(const Eigen::VectorXd& residuals,
                           CvDispersion dispersion);

//! Evaluates the criterion at every grid h with one shared fold
//! partition and returns the argmin, ties broken toward smaller h.
//! Raises NoValidBandwidth when every candidate is excluded.
CvResult select_bandwidth(const Dataset& data, const CvConfig& cfg,
                          const SurfaceConfig& estimator_config);

}  // namespace codareg
