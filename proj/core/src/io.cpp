#include "codareg/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace codareg {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string::size_type start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_double(const std::string& raw, const std::string& where) {
  const std::string tok = trim(raw);
  double value = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last)
    throw Error(Errc::parse_error, where + ": not a number: '" + tok + "'");
  return value;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw Error(Errc::parse_error, "cannot open '" + path + "' for writing");
  return out;
}

void write_comments(std::ofstream& out,
                    const std::vector<std::string>& header_lines) {
  for (const auto& line : header_lines) out << "# " << line << "\n";
}

double sorted_median(const std::vector<double>& v, std::size_t lo,
                     std::size_t hi) {  // half-open [lo, hi) of sorted data
  const std::size_t len = hi - lo;
  const std::size_t mid = lo + len / 2;
  if (len % 2 == 1) return v[mid];
  return 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace

std::string format_g10(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", value);
  return buf;
}

int exit_category(Errc code) {
  switch (code) {
    case Errc::non_positive_part:
    case Errc::dimension_mismatch:
    case Errc::dimension_too_small:
    case Errc::not_in_hyperplane:
    case Errc::length_mismatch:
    case Errc::fold_too_small:
    case Errc::parse_error:
    case Errc::ragged_row:
    case Errc::singular_bandwidth:
      return 2;  // malformed data or configuration
    case Errc::degenerate_draw:
    case Errc::all_weights_zero:
    case Errc::singular_design:
    case Errc::zero_scale:
    case Errc::no_bracket:
    case Errc::no_valid_bandwidth:
      return 3;  // numerical failure at run time
  }
  return 3;
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(Errc::parse_error, "cannot open '" + path + "' for reading");

  std::string line;
  long line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    header = split(t, ',');
    break;
  }
  if (header.empty())
    throw Error(Errc::parse_error, path + ": missing header row");
  if (header.size() < 3)
    throw Error(Errc::parse_error,
                path + ": header needs at least x1,x2,y columns");
  const auto d = static_cast<Eigen::Index>(header.size() - 1);
  for (Eigen::Index j = 0; j < d; ++j) {
    const std::string want = "x" + std::to_string(j + 1);
    if (trim(header[static_cast<std::size_t>(j)]) != want)
      throw Error(Errc::parse_error,
                  path + ": header column " + std::to_string(j + 1) +
                      " must be '" + want + "'");
  }
  if (trim(header.back()) != "y")
    throw Error(Errc::parse_error, path + ": last header column must be 'y'");

  std::vector<SimplexPoint> covariates;
  std::vector<double> responses;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::vector<std::string> cells = split(t, ',');
    const std::string where = path + ":" + std::to_string(line_no);
    if (cells.size() != header.size())
      throw Error(Errc::ragged_row,
                  where + ": expected " + std::to_string(header.size()) +
                      " cells, found " + std::to_string(cells.size()));
    Eigen::VectorXd parts(d);
    for (Eigen::Index j = 0; j < d; ++j)
      parts[j] = parse_double(cells[static_cast<std::size_t>(j)], where);
    const double y = parse_double(cells.back(), where);
    if (!std::isfinite(y))
      throw Error(Errc::parse_error, where + ": non-finite response");
    try {
      covariates.emplace_back(parts);  // validates and re-closes
    } catch (const Error& e) {
      throw Error(e.code(), where + ": " + e.what());
    }
    responses.push_back(y);
  }
  if (covariates.empty())
    throw Error(Errc::parse_error, path + ": no data rows");
  return Dataset(std::move(covariates),
                 Eigen::Map<const Eigen::VectorXd>(
                     responses.data(),
                     static_cast<Eigen::Index>(responses.size())));
}

void write_dataset(const std::string& path, const Dataset& data,
                   const std::vector<std::string>& header_lines) {
  std::ofstream out = open_out(path);
  write_comments(out, header_lines);
  const Eigen::Index d = data.dim();
  for (Eigen::Index j = 0; j < d; ++j) out << "x" << (j + 1) << ",";
  out << "y\n";
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const SimplexPoint& x = data.covariates()[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < d; ++j)
      out << format_g10(x[j]) << ",";
    out << format_g10(data.responses()[i]) << "\n";
  }
}

GridSpec GridSpec::from_step(const Eigen::VectorXd& lower,
                             const Eigen::VectorXd& upper, double step) {
  if (lower.size() != upper.size())
    throw Error(Errc::length_mismatch, "grid bounds differ in length");
  if (!(step > 0.0))
    throw Error(Errc::parse_error, "grid step must be positive");
  GridSpec gs;
  gs.lower = lower;
  gs.upper = upper;
  for (Eigen::Index a = 0; a < lower.size(); ++a) {
    if (!(lower[a] < upper[a]))
      throw Error(Errc::parse_error, "grid lower bound must be below upper");
    const auto count = static_cast<Eigen::Index>(
        std::floor((upper[a] - lower[a]) / step + 1e-9)) + 1;
    if (count < 2)
      throw Error(Errc::parse_error, "grid step exceeds the axis range");
    gs.counts.push_back(count);
    gs.upper[a] = lower[a] + static_cast<double>(count - 1) * step;
  }
  return gs;
}

Grid make_grid(const GridSpec& gs) {
  const auto d = gs.lower.size();
  if (gs.upper.size() != d ||
      static_cast<Eigen::Index>(gs.counts.size()) != d || d < 1)
    throw Error(Errc::length_mismatch, "inconsistent grid specification");
  Eigen::Index total = 1;
  for (Eigen::Index a = 0; a < d; ++a) {
    if (gs.counts[static_cast<std::size_t>(a)] < 2)
      throw Error(Errc::parse_error, "grid needs at least 2 points per axis");
    if (!(gs.lower[a] < gs.upper[a]))
      throw Error(Errc::parse_error, "grid lower bound must be below upper");
    total *= gs.counts[static_cast<std::size_t>(a)];
  }

  Grid grid;
  grid.ilr_points.resize(total, d);
  grid.points.reserve(static_cast<std::size_t>(total));
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(d), 0);
  for (Eigen::Index row = 0; row < total; ++row) {
    Eigen::VectorXd v(d);
    for (Eigen::Index a = 0; a < d; ++a) {
      const Eigen::Index c = gs.counts[static_cast<std::size_t>(a)];
      v[a] = gs.lower[a] + static_cast<double>(idx[static_cast<std::size_t>(a)]) *
                               (gs.upper[a] - gs.lower[a]) /
                               static_cast<double>(c - 1);
    }
    grid.ilr_points.row(row) = v.transpose();
    grid.points.push_back(inv_ilr(v));
    // odometer increment, last axis fastest
    for (Eigen::Index a = d - 1; a >= 0; --a) {
      auto& i = idx[static_cast<std::size_t>(a)];
      if (++i < gs.counts[static_cast<std::size_t>(a)]) break;
      i = 0;
    }
  }
  return grid;
}

Quartiles tukey_hinges(const Eigen::VectorXd& values) {
  if (values.size() == 0)
    throw Error(Errc::length_mismatch, "empty sample");
  std::vector<double> v(values.data(), values.data() + values.size());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  Quartiles q;
  q.median = sorted_median(v, 0, n);
  // hinge halves: an odd-length sample keeps its median in both halves
  const std::size_t half = (n + 1) / 2;
  q.q1 = sorted_median(v, 0, half);
  q.q3 = sorted_median(v, n - half, n);
  return q;
}

OutlierReport flag_outliers(const Eigen::VectorXd& residuals) {
  const Quartiles q = tukey_hinges(residuals);
  OutlierReport report;
  report.residuals = residuals;
  report.q1 = q.q1;
  report.q3 = q.q3;
  const double iqr = q.q3 - q.q1;
  report.lower_fence = q.q1 - 1.5 * iqr;
  report.upper_fence = q.q3 + 1.5 * iqr;
  for (Eigen::Index i = 0; i < residuals.size(); ++i)
    if (residuals[i] < report.lower_fence || residuals[i] > report.upper_fence)
      report.flagged.push_back(i);
  return report;
}

KeyValueConfig KeyValueConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(Errc::parse_error, "cannot open '" + path + "' for reading");
  std::ostringstream text;
  text << in.rdbuf();
  return from_text(text.str(), path);
}

KeyValueConfig KeyValueConfig::from_text(const std::string& text,
                                         const std::string& origin) {
  KeyValueConfig cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    const std::string where = origin + ":" + std::to_string(line_no);
    if (eq == std::string::npos)
      throw Error(Errc::parse_error, where + ": expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw Error(Errc::parse_error, where + ": empty key");
    if (cfg.entries_.count(key))
      throw Error(Errc::parse_error, where + ": duplicate key '" + key + "'");
    cfg.entries_[key] = value;
  }
  // the format is versioned; only schema 1 exists
  if (cfg.entries_.count("schema")) {
    cfg.accessed_.insert("schema");
    cfg.resolved_["schema"] = cfg.entries_["schema"];
    if (cfg.entries_["schema"] != "1")
      throw Error(Errc::parse_error,
                  origin + ": unsupported schema '" + cfg.entries_["schema"] +
                      "' (expected 1)");
  } else {
    cfg.resolved_["schema"] = "1";
  }
  return cfg;
}

bool KeyValueConfig::has(const std::string& key) const {
  return entries_.count(key) > 0;
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  entries_[key] = value;
}

std::string KeyValueConfig::get_string(const std::string& key,
                                       const std::string& def) {
  accessed_.insert(key);
  const auto it = entries_.find(key);
  const std::string value = it == entries_.end() ? def : it->second;
  resolved_[key] = value;
  return value;
}

double KeyValueConfig::get_double(const std::string& key, double def) {
  accessed_.insert(key);
  const auto it = entries_.find(key);
  if (it == entries_.end()) {
    resolved_[key] = format_g10(def);
    return def;
  }
  const double v = parse_double(it->second, origin_ + " key '" + key + "'");
  resolved_[key] = it->second;
  return v;
}

int KeyValueConfig::get_int(const std::string& key, int def) {
  accessed_.insert(key);
  const auto it = entries_.find(key);
  if (it == entries_.end()) {
    resolved_[key] = std::to_string(def);
    return def;
  }
  const std::string tok = trim(it->second);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size())
    throw Error(Errc::parse_error,
                origin_ + " key '" + key + "': not an integer: '" + tok + "'");
  resolved_[key] = it->second;
  return v;
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key,
                                      std::uint64_t def) {
  accessed_.insert(key);
  const auto it = entries_.find(key);
  if (it == entries_.end()) {
    resolved_[key] = std::to_string(def);
    return def;
  }
  const std::string tok = trim(it->second);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size())
    throw Error(Errc::parse_error,
                origin_ + " key '" + key + "': not an unsigned integer: '" +
                    tok + "'");
  resolved_[key] = it->second;
  return v;
}

bool KeyValueConfig::get_bool(const std::string& key, bool def) {
  accessed_.insert(key);
  const auto it = entries_.find(key);
  if (it == entries_.end()) {
    resolved_[key] = def ? "true" : "false";
    return def;
  }
  const std::string tok = trim(it->second);
  resolved_[key] = it->second;
  if (tok == "true" || tok == "1") return true;
  if (tok == "false" || tok == "0") return false;
  throw Error(Errc::parse_error,
              origin_ + " key '" + key + "': not a boolean: '" + tok + "'");
}

std::vector<double> KeyValueConfig::get_double_list(
    const std::string& key, const std::vector<double>& def) {
  accessed_.insert(key);
  const auto it = entries_.find(key);
  const auto join = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ",";
      s += format_g10(v[i]);
    }
    return s;
  };
  if (it == entries_.end()) {
    resolved_[key] = join(def);
    return def;
  }
  std::vector<double> out;
  for (const std::string& cell : split(it->second, ','))
    out.push_back(parse_double(cell, origin_ + " key '" + key + "'"));
  resolved_[key] = it->second;
  return out;
}

void KeyValueConfig::reject_unknown() const {
  for (const auto& [key, value] : entries_)
    if (!accessed_.count(key))
      throw Error(Errc::parse_error,
                  origin_ + ": unknown key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> KeyValueConfig::resolved()
    const {
  return {resolved_.begin(), resolved_.end()};
}

std::string KeyValueConfig::echo(const std::string& prefix) const {
  std::string out;
  for (const auto& [key, value] : resolved_)
    out += prefix + key + " = " + value + "\n";
  return out;
}

void write_fit_csv(const std::string& path,
                   const std::vector<SimplexPoint>& points,
                   const Eigen::MatrixXd& ilr_points,
                   const Eigen::VectorXd& estimates,
                   const Eigen::VectorXd& residuals,
                   const std::vector<FitFlags>& flags,
                   const std::vector<std::string>& header_lines) {
  const auto n = static_cast<Eigen::Index>(points.size());
  if (ilr_points.rows() != n || estimates.size() != n ||
      static_cast<Eigen::Index>(flags.size()) != n ||
      (residuals.size() != 0 && residuals.size() != n))
    throw Error(Errc::length_mismatch, "fit output pieces differ in length");
  const Eigen::Index d = n > 0 ? points.front().dim() : 0;
  const bool with_res = residuals.size() == n && n > 0;

  std::ofstream out = open_out(path);
  write_comments(out, header_lines);
  out << "point_id";
  for (Eigen::Index j = 0; j < d; ++j) out << ",x" << (j + 1);
  for (Eigen::Index j = 0; j + 1 < d; ++j) out << ",ilr" << (j + 1);
  out << ",estimate";
  if (with_res) out << ",residual";
  out << ",converged\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    out << (i + 1);
    const SimplexPoint& x = points[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < d; ++j) out << "," << format_g10(x[j]);
    for (Eigen::Index j = 0; j + 1 < d; ++j)
      out << "," << format_g10(ilr_points(i, j));
    out << "," << format_g10(estimates[i]);
    if (with_res) out << "," << format_g10(residuals[i]);
    const FitFlags& f = flags[static_cast<std::size_t>(i)];
    out << "," << ((f.converged && !f.failed) ? 1 : 0) << "\n";
  }
}

void write_cv_csv(const std::string& path, const CvResult& result,
                  const std::vector<std::string>& header_lines) {
  std::ofstream out = open_out(path);
  write_comments(out, header_lines);
  out << "# chosen_h = " << format_g10(result.chosen_h) << "\n";
  out << "pass,h,score,fail_fraction,excluded\n";
  for (std::size_t i = 0; i < result.grid.size(); ++i)
    out << "0," << format_g10(result.grid[i]) << ","
        << format_g10(result.scores[i]) << ","
        << format_g10(result.fail_fraction[i]) << ","
        << (result.excluded[i] ? 1 : 0) << "\n";
  for (std::size_t i = 0; i < result.refined_grid.size(); ++i)
    out << "1," << format_g10(result.refined_grid[i]) << ","
        << format_g10(result.refined_scores[i]) << ",nan,0\n";
}

void write_mc_csv(const std::string& path, const McReport& report,
                  const std::string& scenario_label,
                  const std::vector<std::string>& header_lines) {
  std::ofstream out = open_out(path);
  write_comments(out, header_lines);
  out << "estimator,scenario,mise,bias2,n_excluded,n_unconverged\n";
  for (std::size_t e = 0; e < report.estimators.size(); ++e)
    out << method_name(report.estimators[e]) << "," << scenario_label << ","
        << format_g10(report.mise[e]) << "," << format_g10(report.bias2[e])
        << "," << report.excluded[e] << "," << report.nonconverged[e] << "\n";
}

void write_ise_csv(const std::string& path, const McReport& report,
                   const std::vector<std::string>& header_lines) {
  std::ofstream out = open_out(path);
  write_comments(out, header_lines);
  out << "# excluded replications appear as nan\n";
  out << "rep,estimator,ise\n";
  for (Eigen::Index rep = 0; rep < report.ise.rows(); ++rep)
    for (std::size_t e = 0; e < report.estimators.size(); ++e)
      out << (rep + 1) << "," << method_name(report.estimators[e]) << ","
          << format_g10(report.ise(rep, static_cast<Eigen::Index>(e))) << "\n";
}

void write_outliers_csv(const std::string& path, const OutlierReport& report,
                        const std::vector<std::string>& header_lines,
                        const std::vector<Eigen::Index>* point_ids) {
  if (point_ids &&
      static_cast<Eigen::Index>(point_ids->size()) != report.residuals.size())
    throw Error(Errc::length_mismatch, "point ids do not match residuals");
  std::ofstream out = open_out(path);
  write_comments(out, header_lines);
  out << "# q1 = " << format_g10(report.q1)
      << ", q3 = " << format_g10(report.q3) << "\n";
  out << "# fences = [" << format_g10(report.lower_fence) << ", "
      << format_g10(report.upper_fence) << "]\n";
  std::vector<char> is_flagged(
      static_cast<std::size_t>(report.residuals.size()), 0);
  for (Eigen::Index i : report.flagged)
    is_flagged[static_cast<std::size_t>(i)] = 1;
  out << "point_id,residual,flagged\n";
  for (Eigen::Index i = 0; i < report.residuals.size(); ++i) {
    const Eigen::Index id =
        point_ids ? (*point_ids)[static_cast<std::size_t>(i)] : i;
    out << (id + 1) << "," << format_g10(report.residuals[i]) << ","
        << (is_flagged[static_cast<std::size_t>(i)] ? 1 : 0) << "\n";
  }
}

}  // namespace codareg
