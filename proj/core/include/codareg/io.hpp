#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "codareg/bandwidth.hpp"
#include "codareg/error.hpp"
#include "codareg/kernel.hpp"
#include "codareg/montecarlo.hpp"
#include "codareg/robust.hpp"
#include "codareg/simplex.hpp"

namespace codareg {

//! Doubles are serialized with 10 significant digits everywhere.
std::string format_g10(double value);

//! Exit-code category for an error: 2 for data/format problems,
//! 3 for numerical failures (1, usage, is decided by the CLI parser).
int exit_category(Errc code);

//! Dataset CSV: header `x1,...,xD,y`, one datum per row, `#` comments
//! skipped. Rows are re-closed; zero or negative parts are rejected
//! with their line number.
Dataset read_dataset(const std::string& path);

//! Writes a dataset in the same format; `header_lines` are emitted
//! verbatim as leading `# `-prefixed comments.
void write_dataset(const std::string& path, const Dataset& data,
                   const std::vector<std::string>& header_lines = {});

//! Rectangular grid in ilr coordinates, mapped back to the simplex.
struct GridSpec {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::vector<Eigen::Index> counts;  // >= 2 per axis

  //! Equal spacing by step; the upper bound snaps to the last step.
  static GridSpec from_step(const Eigen::VectorXd& lower,
                            const Eigen::VectorXd& upper, double step);
};

struct Grid {
  Eigen::MatrixXd ilr_points;       // rows in lexicographic axis order
  std::vector<SimplexPoint> points; // inv_ilr of each row
};

Grid make_grid(const GridSpec& gs);

//! Quartiles by the median-of-halves (hinge) convention: for odd n the
//! median belongs to both halves.
struct Quartiles {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};
Quartiles tukey_hinges(const Eigen::VectorXd& values);

//! Standard boxplot rule on residuals: fences at Q1 - 1.5 IQR and
//! Q3 + 1.5 IQR; flagged iff strictly outside.
struct OutlierReport {
  std::vector<Eigen::Index> flagged;
  Eigen::VectorXd residuals;
  double q1 = 0.0;
  double q3 = 0.0;
  double lower_fence = 0.0;
  double upper_fence = 0.0;
};
OutlierReport flag_outliers(const Eigen::VectorXd& residuals);

//! Flat key = value configuration document, `#` comments, one pair per
//! line. Typed getters record every resolved value (defaults included)
//! so the full effective configuration can be echoed; keys present in
//! the document but never read are rejected as unknown.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig from_file(const std::string& path);
  static KeyValueConfig from_text(const std::string& text,
                                  const std::string& origin = "<text>");

  bool has(const std::string& key) const;
  //! Inserts or overrides an entry (used for flag overrides).
  void set(const std::string& key, const std::string& value);

  std::string get_string(const std::string& key, const std::string& def);
  double get_double(const std::string& key, double def);
  int get_int(const std::string& key, int def);
  std::uint64_t get_u64(const std::string& key, std::uint64_t def);
  bool get_bool(const std::string& key, bool def);
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& def);

  //! ParseError naming the first document key that was never read.
  void reject_unknown() const;

  //! All resolved key/value pairs in key order.
  std::vector<std::pair<std::string, std::string>> resolved() const;

  //! One `<prefix>key = value` line per resolved entry.
  std::string echo(const std::string& prefix) const;

 private:
  std::string origin_ = "<empty>";
  std::map<std::string, std::string> entries_;
  std::map<std::string, std::string> resolved_;
  std::set<std::string> accessed_;
};

//! Fit output CSV: point_id, x1..xD, ilr1..ilr(D-1), estimate,
//! residual (when available), converged.
void write_fit_csv(const std::string& path,
                   const std::vector<SimplexPoint>& points,
                   const Eigen::MatrixXd& ilr_points,
                   const Eigen::VectorXd& estimates,
                   const Eigen::VectorXd& residuals,  // size 0 to omit
                   const std::vector<FitFlags>& flags,
                   const std::vector<std::string>& header_lines = {});

//! CV summary CSV: pass (0 coarse / 1 refined), h, score, fail_fraction,
//! excluded; the chosen h goes into the header comments.
void write_cv_csv(const std::string& path, const CvResult& result,
                  const std::vector<std::string>& header_lines = {});

//! Study summary CSV: estimator, scenario, mise, bias2, n_excluded,
//! n_unconverged.
void write_mc_csv(const std::string& path, const McReport& report,
                  const std::string& scenario_label,
                  const std::vector<std::string>& header_lines = {});

//! Long-format per-replication ISE CSV: rep, estimator, ise.
void write_ise_csv(const std::string& path, const McReport& report,
                   const std::vector<std::string>& header_lines = {});

//! Outlier CSV: point_id, residual, flagged; fences in the comments.
//! `point_ids` (0-based, written 1-based) relabels rows when the
//! residual vector is a subset of a larger dataset.
void write_outliers_csv(const std::string& path, const OutlierReport& report,
                        const std::vector<std::string>& header_lines = {},
                        const std::vector<Eigen::Index>* point_ids = nullptr);

}  // namespace codareg
