// codareg: nonparametric regression with compositional covariates.
//
// Subcommands: simulate, fit, cv, predict, mc. Every run resolves its
// configuration from defaults, then an optional --config file, then
// explicit flags, and echoes the result as `# key = value` lines in all
// outputs. Exit codes: 0 success, 1 usage, 2 data/config error,
// 3 numerical failure.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "codareg/bandwidth.hpp"
#include "codareg/error.hpp"
#include "codareg/io.hpp"
#include "codareg/kernel.hpp"
#include "codareg/models.hpp"
#include "codareg/montecarlo.hpp"
#include "codareg/robust.hpp"
#include "codareg/simplex.hpp"

namespace {

using codareg::Errc;
using codareg::Error;
using codareg::KeyValueConfig;

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

KeyValueConfig load_config(const std::string& path) {
  return path.empty() ? KeyValueConfig::from_text("", "<flags>")
                      : KeyValueConfig::from_file(path);
}

// Header comment block: the full resolved configuration minus execution
// details (threads), so outputs are byte-identical across worker counts.
std::vector<std::string> echo_lines(const KeyValueConfig& cfg,
                                    const std::string& subcommand) {
  std::vector<std::string> lines{"codareg " + subcommand};
  for (const auto& [key, value] : cfg.resolved()) {
    if (key == "threads") continue;
    lines.push_back(key + " = " + value);
  }
  return lines;
}

void print_echo(const std::vector<std::string>& lines) {
  for (const auto& line : lines) std::cout << "# " << line << "\n";
}

void save_config_if_asked(const KeyValueConfig& cfg, const std::string& path) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out)
    throw Error(Errc::parse_error, "cannot open '" + path + "' for writing");
  out << "# codareg resolved configuration\n" << cfg.echo("");
}

codareg::ErrorLaw error_law_from(KeyValueConfig& cfg) {
  codareg::ErrorLaw law;
  law.delta = cfg.get_double("delta", 0.0);
  law.mu_shift = cfg.get_double("mu", 0.0);
  law.sd_contam = cfg.get_double("sd_contam", 0.1);
  if (law.delta < 0.0 || law.delta > 1.0)
    throw Error(Errc::parse_error, "key 'delta' must lie in [0, 1]");
  if (!(law.sd_contam > 0.0))
    throw Error(Errc::parse_error, "key 'sd_contam' must be positive");
  return law;
}

codareg::ScaleKind scale_kind_from(const std::string& name) {
  if (name == "global-s") return codareg::ScaleKind::global_s;
  if (name == "mad") return codareg::ScaleKind::local_mad;
  if (name == "local-s") return codareg::ScaleKind::local_s;
  throw Error(Errc::parse_error,
              "key 'scale' must be global-s, mad, or local-s");
}

// Smoother options shared by fit, cv, and predict.
codareg::SurfaceConfig surface_from(KeyValueConfig& cfg, bool with_residuals) {
  codareg::SurfaceConfig sc;
  sc.method = codareg::method_from_name(cfg.get_string("method", "rob1"));
  sc.m.scale.kind = scale_kind_from(cfg.get_string("scale", "global-s"));
  sc.m.scale.rho0.c = cfg.get_double("c0", 1.54764);
  sc.m.scale.b = cfg.get_double("scale_b", 0.5);
  sc.m.rho1.c = cfg.get_double("c1", 4.685);
  sc.m.max_iter = cfg.get_int("max_iter", 100);
  sc.m.tol = cfg.get_double("tol", 1e-8);
  sc.fallback_to_constant = cfg.get_bool("fallback", true);
  sc.with_residuals = with_residuals;
  if (!(sc.m.scale.rho0.c > 0.0) || !(sc.m.rho1.c > 0.0) ||
      !(sc.m.scale.b > 0.0) || sc.m.max_iter < 1 || !(sc.m.tol > 0.0))
    throw Error(Errc::parse_error, "invalid smoother tuning constants");
  return sc;
}

codareg::McScenario scenario_from(KeyValueConfig& cfg) {
  const std::vector<double> alpha =
      cfg.get_double_list("alpha", {5.0, 7.0, 1.0});
  const std::vector<double> b =
      cfg.get_double_list("b", {0.05920067, 0.7193872, 0.2214121});
  codareg::McScenario sc{codareg::DirichletParams(to_eigen(alpha)),
                         codareg::SimplexPoint(to_eigen(b))};
  sc.sigma = cfg.get_double("sigma", 1.0);
  sc.error_law = error_law_from(cfg);
  sc.n = cfg.get_int("n", 100);
  sc.seed = cfg.get_u64("seed", 20260822);
  return sc;
}

// Parses "lo1,hi1,...,lo_{D-1},hi_{D-1},step" into a grid specification.
codareg::GridSpec grid_spec_from(const std::vector<double>& raw,
                                 Eigen::Index d) {
  if (static_cast<Eigen::Index>(raw.size()) != 2 * d + 1)
    throw Error(Errc::parse_error,
                "key 'grid' needs 2*(D-1)+1 = " + std::to_string(2 * d + 1) +
                    " numbers: lo,hi per ilr axis plus a step");
  Eigen::VectorXd lower(d);
  Eigen::VectorXd upper(d);
  for (Eigen::Index a = 0; a < d; ++a) {
    lower[a] = raw[static_cast<std::size_t>(2 * a)];
    upper[a] = raw[static_cast<std::size_t>(2 * a + 1)];
  }
  return codareg::GridSpec::from_step(lower, upper, raw.back());
}

int run_simulate(KeyValueConfig& cfg) {
  codareg::McScenario sc = scenario_from(cfg);
  const auto rep = cfg.get_u64("rep", 1);
  const std::string out = cfg.get_string("out", "data.csv");
  const std::string save = cfg.get_string("save_config", "");
  cfg.get_int("threads", 1);  // accepted everywhere; single-threaded here
  cfg.reject_unknown();

  sc.n_pred = 1;  // replication machinery wants one, grid unused here
  const codareg::Replication r = codareg::generate_replication(sc, rep);
  const auto header = echo_lines(cfg, "simulate");
  codareg::write_dataset(out, r.data, header);
  save_config_if_asked(cfg, save);
  print_echo(header);
  std::cout << "wrote " << r.data.size() << " observations to " << out
            << "\n";
  return 0;
}

int run_fit(KeyValueConfig& cfg) {
  const std::string data_path = cfg.get_string("data", "");
  if (data_path.empty())
    throw Error(Errc::parse_error, "key 'data' is required");
  const double h = cfg.get_double("h", 0.0);
  if (!(h > 0.0))
    throw Error(Errc::parse_error, "key 'h' must be a positive bandwidth");
  codareg::SurfaceConfig sc = surface_from(cfg, true);
  const std::vector<double> grid_raw = cfg.get_double_list("grid", {});
  const std::string out = cfg.get_string("out", "fit_");
  const std::string save = cfg.get_string("save_config", "");
  cfg.get_u64("seed", 20260822);  // accepted everywhere; nothing random here
  cfg.get_int("threads", 1);
  cfg.reject_unknown();

  const codareg::Dataset data = codareg::read_dataset(data_path);
  const Eigen::Index d = data.dim() - 1;
  const codareg::KernelSpec spec = codareg::KernelSpec::isotropic(h, d);
  const auto header = echo_lines(cfg, "fit");

  const codareg::SmootherFit fit =
      codareg::fit_surface(spec, sc, data, data.ilr_coords());
  codareg::write_fit_csv(out + "points.csv", data.covariates(),
                         data.ilr_coords(), fit.estimates, fit.residuals,
                         fit.flags, header);

  // outliers from the finite residuals, ids kept from the dataset
  std::vector<Eigen::Index> ids;
  std::vector<double> finite;
  for (Eigen::Index i = 0; i < fit.residuals.size(); ++i)
    if (std::isfinite(fit.residuals[i])) {
      ids.push_back(i);
      finite.push_back(fit.residuals[i]);
    }
  if (!finite.empty()) {
    const codareg::OutlierReport rep = codareg::flag_outliers(to_eigen(finite));
    codareg::write_outliers_csv(out + "outliers.csv", rep, header, &ids);
    std::cout << "flagged " << rep.flagged.size() << " of " << finite.size()
              << " residuals as atypical\n";
  }

  if (!grid_raw.empty()) {
    const codareg::Grid grid = codareg::make_grid(grid_spec_from(grid_raw, d));
    codareg::SurfaceConfig sc_grid = sc;
    sc_grid.with_residuals = false;
    const codareg::SmootherFit gfit =
        codareg::fit_surface(spec, sc_grid, data, grid.ilr_points);
    codareg::write_fit_csv(out + "grid.csv", grid.points, grid.ilr_points,
                           gfit.estimates, Eigen::VectorXd(), gfit.flags,
                           header);
  }
  save_config_if_asked(cfg, save);
  print_echo(header);
  std::cout << "fit " << codareg::method_name(fit.method) << " at "
            << data.size() << " points, h = " << codareg::format_g10(h)
            << "\n";
  return 0;
}

int run_cv(KeyValueConfig& cfg) {
  const std::string data_path = cfg.get_string("data", "");
  if (data_path.empty())
    throw Error(Errc::parse_error, "key 'data' is required");
  codareg::SurfaceConfig est = surface_from(cfg, false);

  codareg::CvConfig cv;
  cv.grid = cfg.get_double_list("h_grid", {0.25, 0.5, 0.75, 1.0, 1.5, 2.0});
  cv.folds = cfg.get_int("folds", 5);
  const bool robust_method = est.method == codareg::Method::rob0 ||
                             est.method == codareg::Method::rob1;
  const std::string crit =
      cfg.get_string("criterion", robust_method ? "robust" : "ls");
  if (crit == "ls")
    cv.criterion = codareg::CvCriterion::ls_cv;
  else if (crit == "robust")
    cv.criterion = codareg::CvCriterion::robust_cv;
  else
    throw Error(Errc::parse_error, "key 'criterion' must be ls or robust");
  cv.dispersion =
      codareg::dispersion_from_name(cfg.get_string("dispersion", "mad"));
  cv.rng = codareg::RngStream(cfg.get_u64("seed", 20260822), 0);
  cv.max_fail_fraction = cfg.get_double("max_fail_fraction", 0.2);
  cv.refine = cfg.get_bool("refine", false);
  cv.refine_step = cfg.get_double("refine_step", 0.02);
  cv.refine_radius = cfg.get_double("refine_radius", 0.1);
  const std::string out = cfg.get_string("out", "cv.csv");
  const std::string save = cfg.get_string("save_config", "");
  cfg.get_int("threads", 1);
  cfg.reject_unknown();

  const codareg::Dataset data = codareg::read_dataset(data_path);
  const codareg::CvResult result = codareg::select_bandwidth(data, cv, est);
  const auto header = echo_lines(cfg, "cv");
  codareg::write_cv_csv(out, result, header);
  save_config_if_asked(cfg, save);
  print_echo(header);
  std::cout << "chosen_h = " << codareg::format_g10(result.chosen_h) << "\n";
  return 0;
}

int run_predict(KeyValueConfig& cfg) {
  const std::string data_path = cfg.get_string("data", "");
  if (data_path.empty())
    throw Error(Errc::parse_error, "key 'data' is required");
  const double h = cfg.get_double("h", 0.0);
  if (!(h > 0.0))
    throw Error(Errc::parse_error, "key 'h' must be a positive bandwidth");
  codareg::SurfaceConfig sc = surface_from(cfg, false);
  const std::vector<double> grid_raw = cfg.get_double_list("grid", {});
  if (grid_raw.empty())
    throw Error(Errc::parse_error, "key 'grid' is required");
  const std::string out = cfg.get_string("out", "predictions.csv");
  const std::string save = cfg.get_string("save_config", "");
  cfg.get_u64("seed", 20260822);
  cfg.get_int("threads", 1);
  cfg.reject_unknown();

  const codareg::Dataset data = codareg::read_dataset(data_path);
  const Eigen::Index d = data.dim() - 1;
  const codareg::Grid grid = codareg::make_grid(grid_spec_from(grid_raw, d));
  const codareg::KernelSpec spec = codareg::KernelSpec::isotropic(h, d);
  const codareg::SmootherFit fit =
      codareg::fit_surface(spec, sc, data, grid.ilr_points);
  const auto header = echo_lines(cfg, "predict");
  codareg::write_fit_csv(out, grid.points, grid.ilr_points, fit.estimates,
                         Eigen::VectorXd(), fit.flags, header);
  save_config_if_asked(cfg, save);
  print_echo(header);
  std::cout << "predicted " << grid.points.size() << " grid points to " << out
            << "\n";
  return 0;
}

int run_mc(KeyValueConfig& cfg) {
  codareg::McScenario sc = scenario_from(cfg);
  sc.n_reps = cfg.get_int("reps", 500);
  sc.n_pred = cfg.get_int("preds", 100);
  sc.bandwidth_h = cfg.get_double("h", 1.0);
  sc.estimators.clear();
  {
    std::string list = cfg.get_string("estimators", "cl0,cl1,rob0,rob1");
    std::string token;
    for (std::size_t i = 0; i <= list.size(); ++i) {
      if (i == list.size() || list[i] == ',') {
        if (!token.empty()) sc.estimators.push_back(
            codareg::method_from_name(token));
        token.clear();
      } else if (!std::isspace(static_cast<unsigned char>(list[i]))) {
        token.push_back(list[i]);
      }
    }
  }
  std::string label = cfg.get_string("label", "");
  if (label.empty()) {
    label = sc.error_law.delta == 0.0
                ? "C0"
                : "C(1;" + codareg::format_g10(sc.error_law.delta) + ";" +
                      codareg::format_g10(sc.error_law.mu_shift) + ")";
  }
  if (label.find(',') != std::string::npos)
    throw Error(Errc::parse_error, "key 'label' must not contain commas");
  const double max_excl = cfg.get_double("max_exclusion_frac", 0.01);
  const int threads = cfg.get_int("threads", 1);
  const std::string out = cfg.get_string("out", "mc_");
  const std::string save = cfg.get_string("save_config", "");
  cfg.reject_unknown();

  const codareg::McReport report = codareg::run_study(sc, threads);
  const auto header = echo_lines(cfg, "mc");
  codareg::write_mc_csv(out + "mise_bias.csv", report, label, header);
  codareg::write_ise_csv(out + "ise.csv", report, header);
  save_config_if_asked(cfg, save);
  print_echo(header);
  std::cout << "estimator,scenario,mise,bias2,n_excluded,n_unconverged\n";
  for (std::size_t e = 0; e < report.estimators.size(); ++e) {
    std::cout << codareg::method_name(report.estimators[e]) << "," << label
              << "," << codareg::format_g10(report.mise[e]) << ","
              << codareg::format_g10(report.bias2[e]) << ","
              << report.excluded[e] << "," << report.nonconverged[e] << "\n";
    const double frac = static_cast<double>(report.excluded[e]) /
                        static_cast<double>(report.n_reps);
    if (frac > max_excl)
      throw Error(Errc::no_valid_bandwidth,
                  std::string("estimator ") +
                      codareg::method_name(report.estimators[e]) +
                      " excluded " + codareg::format_g10(100.0 * frac) +
                      "% of replications (limit " +
                      codareg::format_g10(100.0 * max_excl) + "%)");
  }
  return 0;
}

struct FlagBinding {
  CLI::Option* option = nullptr;
  std::string key;
  std::string* holder = nullptr;
};

// Registers a string-valued flag that overrides config key `key`.
void bind(std::vector<FlagBinding>& bindings, CLI::App* sub,
          std::vector<std::unique_ptr<std::string>>& storage,
          const std::string& flag, const std::string& key,
          const std::string& help, bool numeric = false) {
  storage.push_back(std::make_unique<std::string>());
  std::string* holder = storage.back().get();
  CLI::Option* opt = sub->add_option(flag, *holder, help);
  if (numeric) opt->check(CLI::Number);
  bindings.push_back(FlagBinding{opt, key, holder});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nonparametric regression with compositional covariates"};
  app.require_subcommand(1);

  std::vector<std::unique_ptr<std::string>> storage;
  std::map<std::string, std::vector<FlagBinding>> bindings;
  std::map<std::string, std::string> config_paths;
  std::map<std::string, CLI::Option*> config_opts;

  const auto common = [&](CLI::App* sub) {
    const std::string name = sub->get_name();
    config_opts[name] = sub->add_option("--config", config_paths[name],
                                        "key = value configuration file");
    bind(bindings[name], sub, storage, "--seed", "seed", "master seed", true);
    bind(bindings[name], sub, storage, "--threads", "threads",
         "worker threads", true);
    bind(bindings[name], sub, storage, "--save-config", "save_config",
         "write the resolved configuration to this path");
    bind(bindings[name], sub, storage, "--out", "out",
         "output path or prefix");
  };

  CLI::App* sim = app.add_subcommand(
      "simulate", "draw a synthetic dataset from a scenario");
  common(sim);
  bind(bindings["simulate"], sim, storage, "--alpha", "alpha",
       "Dirichlet shape parameters, comma separated");
  bind(bindings["simulate"], sim, storage, "--b", "b",
       "regression coefficient composition");
  bind(bindings["simulate"], sim, storage, "--sigma", "sigma",
       "error scale", true);
  bind(bindings["simulate"], sim, storage, "--delta", "delta",
       "contamination fraction", true);
  bind(bindings["simulate"], sim, storage, "--mu", "mu",
       "contamination shift", true);
  bind(bindings["simulate"], sim, storage, "--sd-contam", "sd_contam",
       "contamination SD", true);
  bind(bindings["simulate"], sim, storage, "--n", "n", "sample size", true);
  bind(bindings["simulate"], sim, storage, "--rep", "rep",
       "replication stream index", true);

  const auto smoother_flags = [&](CLI::App* sub) {
    const std::string name = sub->get_name();
    bind(bindings[name], sub, storage, "--data", "data", "dataset CSV path");
    bind(bindings[name], sub, storage, "--method", "method",
         "cl0, cl1, rob0, or rob1");
    bind(bindings[name], sub, storage, "--scale", "scale",
         "global-s, mad, or local-s");
    bind(bindings[name], sub, storage, "--c0", "c0",
         "S-scale tuning constant", true);
    bind(bindings[name], sub, storage, "--c1", "c1",
         "M-step tuning constant", true);
    bind(bindings[name], sub, storage, "--scale-b", "scale_b",
         "S-scale target", true);
    bind(bindings[name], sub, storage, "--max-iter", "max_iter",
         "IRWLS iteration cap", true);
    bind(bindings[name], sub, storage, "--tol", "tol",
         "IRWLS convergence tolerance", true);
    bind(bindings[name], sub, storage, "--fallback", "fallback",
         "true/false: degrade thin local-linear fits to local constant");
  };

  CLI::App* fit = app.add_subcommand(
      "fit", "fit a smoother at the data points (and optionally a grid)");
  common(fit);
  smoother_flags(fit);
  bind(bindings["fit"], fit, storage, "--h", "h", "bandwidth (H = h I)",
       true);
  bind(bindings["fit"], fit, storage, "--grid", "grid",
       "lo,hi per ilr axis plus step, comma separated");

  CLI::App* cv = app.add_subcommand("cv", "bandwidth cross-validation");
  common(cv);
  smoother_flags(cv);
  bind(bindings["cv"], cv, storage, "--h-grid", "h_grid",
       "candidate bandwidths, comma separated");
  bind(bindings["cv"], cv, storage, "--folds", "folds",
       "fold count K (0 = leave-one-out)", true);
  bind(bindings["cv"], cv, storage, "--criterion", "criterion",
       "ls or robust");
  bind(bindings["cv"], cv, storage, "--dispersion", "dispersion",
       "mad, s, or tau");
  bind(bindings["cv"], cv, storage, "--refine", "refine",
       "true/false: refine around the winner");
  bind(bindings["cv"], cv, storage, "--refine-step", "refine_step",
       "refinement step", true);
  bind(bindings["cv"], cv, storage, "--refine-radius", "refine_radius",
       "refinement radius", true);
  bind(bindings["cv"], cv, storage, "--max-fail-fraction",
       "max_fail_fraction", "exclusion threshold per h", true);

  CLI::App* pred = app.add_subcommand(
      "predict", "evaluate a configured smoother on a grid");
  common(pred);
  smoother_flags(pred);
  bind(bindings["predict"], pred, storage, "--h", "h",
       "bandwidth (H = h I)", true);
  bind(bindings["predict"], pred, storage, "--grid", "grid",
       "lo,hi per ilr axis plus step, comma separated");

  CLI::App* mc = app.add_subcommand(
      "mc", "Monte Carlo study: MISE and squared bias per estimator");
  common(mc);
  bind(bindings["mc"], mc, storage, "--alpha", "alpha",
       "Dirichlet shape parameters");
  bind(bindings["mc"], mc, storage, "--b", "b",
       "regression coefficient composition");
  bind(bindings["mc"], mc, storage, "--sigma", "sigma", "error scale", true);
  bind(bindings["mc"], mc, storage, "--delta", "delta",
       "contamination fraction", true);
  bind(bindings["mc"], mc, storage, "--mu", "mu", "contamination shift",
       true);
  bind(bindings["mc"], mc, storage, "--sd-contam", "sd_contam",
       "contamination SD", true);
  bind(bindings["mc"], mc, storage, "--n", "n", "sample size", true);
  bind(bindings["mc"], mc, storage, "--reps", "reps", "replications", true);
  bind(bindings["mc"], mc, storage, "--preds", "preds",
       "prediction grid size", true);
  bind(bindings["mc"], mc, storage, "--h", "h", "bandwidth (H = h I)", true);
  bind(bindings["mc"], mc, storage, "--estimators", "estimators",
       "subset of cl0,cl1,rob0,rob1");
  bind(bindings["mc"], mc, storage, "--label", "label",
       "scenario label for the summary CSV");
  bind(bindings["mc"], mc, storage, "--max-exclusion-frac",
       "max_exclusion_frac", "failure budget per estimator", true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;  // usage error
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  try {
    KeyValueConfig cfg = load_config(config_paths[name]);
    for (const FlagBinding& b : bindings[name])
      if (b.option->count() > 0) cfg.set(b.key, *b.holder);

    if (name == "simulate") return run_simulate(cfg);
    if (name == "fit") return run_fit(cfg);
    if (name == "cv") return run_cv(cfg);
    if (name == "predict") return run_predict(cfg);
    if (name == "mc") return run_mc(cfg);
    std::cerr << "error: unknown subcommand '" << name << "'\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return codareg::exit_category(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
