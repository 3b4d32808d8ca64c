#include "hpo/experiment.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hpo/errors.hpp"
#include "hpo/sampling.hpp"
#include "hpo/serialize.hpp"

namespace hpo {

ProblemConfig desk_ridge_config() {
  const int n_tr = 20, n_val = 10, m = 5;
  Eigen::VectorXd w_true(m);
  w_true << 1.0, -1.0, 0.5, 0.0, 2.0;

  Eigen::MatrixXd x_tr(n_tr, m), x_val(n_val, m);
  for (int i = 0; i < n_tr; ++i) {
    for (int j = 0; j < m; ++j) x_tr(i, j) = std::sin(0.7 * i + 1.3 * j);
  }
  for (int i = 0; i < n_val; ++i) {
    for (int j = 0; j < m; ++j) x_val(i, j) = std::sin(0.7 * (i + 20) + 1.3 * j);
  }
  Eigen::VectorXd y_tr = x_tr * w_true, y_val = x_val * w_true;
  for (int i = 0; i < n_tr; ++i) y_tr(i) += 0.01 * std::cos(3.0 * i);
  for (int i = 0; i < n_val; ++i) y_val(i) += 0.01 * std::cos(3.0 * (i + 20));

  ProblemConfig config;
  config.mode = Mode::supervised;
  config.train = Dataset{x_tr, y_tr};
  config.val = Dataset{x_val, y_val};
  config.model = ModelKind::linear_regression;
  config.penalty = PenaltyKind::scalar_ridge;
  config.lower = Eigen::VectorXd::Constant(1, 1e-6);
  config.upper = Eigen::VectorXd::Constant(1, 10.0);
  return config;
}

BilevelProblem make_desk_ridge() { return assemble_problem(desk_ridge_config()); }

ProblemConfig desk_mean_config() {
  const int n = 30, m = 4;
  Eigen::MatrixXd x(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) x(i, j) = std::cos(0.5 * i + 0.9 * j) + 0.5;
  }
  ProblemConfig config;
  config.mode = Mode::unsupervised_literal;
  config.train = Dataset{x, std::nullopt};
  config.model = ModelKind::mean_estimator;
  config.penalty = PenaltyKind::scalar_ridge;
  config.lower = Eigen::VectorXd::Constant(1, 1e-6);
  config.upper = Eigen::VectorXd::Constant(1, 10.0);
  return config;
}

BilevelProblem make_desk_mean() { return assemble_problem(desk_mean_config()); }

GridResult grid_search(const BilevelProblem& p, const GridConfig& grid_cfg,
                       const InnerConfig& inner_cfg) {
  if (grid_cfg.points < 2) throw ValidationError("grid needs at least 2 points");

  GridResult result;
  result.points = domain_grid(p.domain, grid_cfg.points, grid_cfg.log_scale);
  result.values.reserve(result.points.size());
  const bool exact = has_closed_form(p);
  for (std::size_t k = 0; k < result.points.size(); ++k) {
    const HyperPoint lambda{result.points[k]};
    try {
      result.values.push_back(exact
                                  ? outer_objective(p, closed_form_minimizer(p, lambda))
                                  : response_value(p, lambda, inner_cfg));
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "grid evaluation failed at point " << k << " (lambda_0 = "
          << format_double(result.points[k](0)) << "): " << e.what();
      throw NumericalError(msg.str());
    }
  }

  result.argmin_index = 0;
  for (std::size_t k = 1; k < result.values.size(); ++k) {
    if (result.values[k] < result.values[result.argmin_index]) {
      result.argmin_index = static_cast<int>(k);
    }
  }
  result.argmin = result.points[result.argmin_index];
  result.min_value = result.values[result.argmin_index];
  return result;
}

std::vector<ProbeReport> run_probes(const BilevelProblem& p, const ProbeFlags& flags,
                                    const InnerConfig& inner_cfg) {
  std::vector<ProbeReport> reports;
  const bool exact = has_closed_form(p);
  // Probe J itself through the exact route when the kind has one; the
  // trajectory route is the fallback.
  const ResponseFn response =
      exact ? make_closed_form_response(p) : make_response_evaluator(p, inner_cfg);

  if (flags.convexity) {
    reports.push_back(probe_convexity(response, p.domain, 40, 3));
  }
  if (flags.coercivity && exact) {
    // Rays of the enlarged box need the unrestricted evaluator.
    reports.push_back(probe_coercivity(make_closed_form_response(p, false), p.domain,
                                       {1e2, 1e4, 1e6, 1e8, 1e10}));
  }
  const bool log_scale = (p.domain.lower.array() > 0.0).all();
  if (flags.inner_boundedness) {
    reports.push_back(probe_inner_boundedness(p, domain_grid(p.domain, 20, log_scale), inner_cfg));
  }
  if (flags.singleton_argmin) {
    reports.push_back(
        probe_singleton_argmin(p, domain_grid(p.domain, 20, log_scale), inner_cfg, 3));
  }
  return reports;
}

namespace {

using nlohmann::json;

void check_keys(const json& j, const char* where, std::initializer_list<const char*> allowed) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ValidationError(std::string("unknown key '") + item.key() + "' in " + where);
    }
  }
}

Eigen::VectorXd vector_from(const json& j, const char* what) {
  if (!j.is_array()) throw ValidationError(std::string(what) + " must be an array of numbers");
  Eigen::VectorXd v(j.size());
  Eigen::Index i = 0;
  for (const auto& item : j) v(i++) = item.get<double>();
  return v;
}

Eigen::MatrixXd matrix_from(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) {
    throw ValidationError(std::string(what) + " must be a nonempty array of rows");
  }
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(j.front().size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ValidationError(std::string(what) + " has ragged rows");
    }
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

Dataset dataset_from(const json& j, const char* what) {
  check_keys(j, what, {"features", "targets"});
  Dataset d;
  d.features = matrix_from(j.at("features"), what);
  if (j.contains("targets") && !j.at("targets").is_null()) {
    d.targets = vector_from(j.at("targets"), what);
  }
  return d;
}

Mode mode_from(const std::string& s) {
  if (s == "supervised") return Mode::supervised;
  if (s == "unsupervised-literal") return Mode::unsupervised_literal;
  if (s == "unsupervised-split") return Mode::unsupervised_split;
  throw ValidationError("unknown mode '" + s + "'");
}

ModelKind model_from(const std::string& s) {
  if (s == "linear-regression") return ModelKind::linear_regression;
  if (s == "mean-estimator") return ModelKind::mean_estimator;
  throw ValidationError("unknown model kind '" + s + "'");
}

PenaltyKind penalty_from(const std::string& s) {
  if (s == "scalar-ridge") return PenaltyKind::scalar_ridge;
  if (s == "per-component") return PenaltyKind::per_component;
  throw ValidationError("unknown penalty kind '" + s + "'");
}

HypergradMethod method_from(const std::string& s) {
  if (s == "forward-iterative") return HypergradMethod::forward_iterative;
  if (s == "implicit") return HypergradMethod::implicit;
  if (s == "finite-difference") return HypergradMethod::finite_difference;
  throw ValidationError("unknown hypergrad method '" + s + "'");
}

void parse_problem(const json& j, ExperimentConfig& config) {
  if (j.contains("preset")) {
    check_keys(j, "problem", {"preset"});
    const std::string preset = j.at("preset").get<std::string>();
    if (preset == "desk-ridge") {
      config.problem = desk_ridge_config();
    } else if (preset == "desk-mean") {
      config.problem = desk_mean_config();
    } else {
      throw ValidationError("unknown problem preset '" + preset + "'");
    }
    config.problem_name = preset;
    return;
  }
  check_keys(j, "problem", {"mode", "train", "val", "model", "loss", "penalty", "domain"});
  config.problem_name = "custom";
  config.problem.mode = mode_from(j.at("mode").get<std::string>());
  config.problem.train = dataset_from(j.at("train"), "problem.train");
  if (j.contains("val") && !j.at("val").is_null()) {
    config.problem.val = dataset_from(j.at("val"), "problem.val");
  }
  config.problem.model = model_from(j.at("model").get<std::string>());
  if (j.contains("loss") && j.at("loss").get<std::string>() != "squared-error") {
    throw ValidationError("unknown loss kind");
  }
  config.problem.penalty = penalty_from(j.at("penalty").get<std::string>());
  const json& domain = j.at("domain");
  check_keys(domain, "problem.domain", {"lower", "upper"});
  config.problem.lower = vector_from(domain.at("lower"), "domain.lower");
  config.problem.upper = vector_from(domain.at("upper"), "domain.upper");
}

void parse_outer(const json& j, OuterConfig& outer) {
  check_keys(j, "outer",
             {"alpha", "epsilon", "max_iters", "hypergrad_method", "sufficient_decrease_c",
              "backtracking", "start", "inner"});
  if (j.contains("alpha") && !j.at("alpha").is_null()) outer.alpha = j.at("alpha").get<double>();
  if (j.contains("epsilon")) outer.epsilon = j.at("epsilon").get<double>();
  if (j.contains("max_iters")) outer.max_iters = j.at("max_iters").get<int>();
  if (j.contains("hypergrad_method")) {
    outer.method = method_from(j.at("hypergrad_method").get<std::string>());
  }
  if (j.contains("sufficient_decrease_c")) {
    outer.sufficient_decrease_c = j.at("sufficient_decrease_c").get<double>();
  }
  if (j.contains("backtracking")) outer.backtracking = j.at("backtracking").get<bool>();
  if (j.contains("start") && !j.at("start").is_null()) {
    outer.start = vector_from(j.at("start"), "outer.start");
  }
  if (j.contains("inner")) {
    const json& inner = j.at("inner");
    check_keys(inner, "outer.inner", {"steps", "step_size", "init"});
    if (inner.contains("steps")) outer.inner.steps = inner.at("steps").get<int>();
    if (inner.contains("step_size") && !inner.at("step_size").is_null()) {
      outer.inner.step_size = inner.at("step_size").get<double>();
    }
    if (inner.contains("init") && !inner.at("init").is_null()) {
      outer.inner.init = vector_from(inner.at("init"), "outer.inner.init");
    }
  }
}

void validate_experiment(const ExperimentConfig& config) {
  if (!(std::isfinite(config.outer.epsilon) && config.outer.epsilon > 0.0)) {
    throw ValidationError("outer.epsilon must be positive");
  }
  if (config.outer.max_iters < 1) throw ValidationError("outer.max_iters must be >= 1");
  if (config.outer.alpha && !(*config.outer.alpha > 0.0)) {
    throw ValidationError("outer.alpha must be positive");
  }
  if (config.outer.inner.steps < 1) throw ValidationError("outer.inner.steps must be >= 1");
  if (config.grid.points < 2) throw ValidationError("grid.points must be >= 2");
  if (config.output_dir.empty()) throw ValidationError("output_dir must not be empty");
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigIoError(std::string("config is not valid JSON: ") + e.what());
  }

  try {
    check_keys(j, "config", {"problem", "outer", "grid", "probes", "output_dir", "emit"});
    ExperimentConfig config;
    parse_problem(j.at("problem"), config);
    if (j.contains("outer")) parse_outer(j.at("outer"), config.outer);
    if (j.contains("grid")) {
      const json& grid = j.at("grid");
      check_keys(grid, "grid", {"points", "scale"});
      if (grid.contains("points")) config.grid.points = grid.at("points").get<int>();
      if (grid.contains("scale")) {
        const std::string scale = grid.at("scale").get<std::string>();
        if (scale == "log") {
          config.grid.log_scale = true;
        } else if (scale == "linear") {
          config.grid.log_scale = false;
        } else {
          throw ValidationError("grid.scale must be 'log' or 'linear'");
        }
      }
    }
    if (j.contains("probes")) {
      const json& probes = j.at("probes");
      check_keys(probes, "probes",
                 {"convexity", "coercivity", "inner_boundedness", "singleton_argmin"});
      if (probes.contains("convexity")) config.probes.convexity = probes.at("convexity").get<bool>();
      if (probes.contains("coercivity")) {
        config.probes.coercivity = probes.at("coercivity").get<bool>();
      }
      if (probes.contains("inner_boundedness")) {
        config.probes.inner_boundedness = probes.at("inner_boundedness").get<bool>();
      }
      if (probes.contains("singleton_argmin")) {
        config.probes.singleton_argmin = probes.at("singleton_argmin").get<bool>();
      }
    }
    if (j.contains("output_dir")) config.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("emit")) {
      const json& emit = j.at("emit");
      check_keys(emit, "emit", {"csv", "json"});
      if (emit.contains("csv")) config.emit.csv = emit.at("csv").get<bool>();
      if (emit.contains("json")) config.emit.json = emit.at("json").get<bool>();
    }
    validate_experiment(config);
    return config;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed config value: ") + e.what());
  }
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream stream(path, std::ios::binary);
  if (!stream) throw ConfigIoError("cannot read config file: " + path);
  std::ostringstream text;
  text << stream.rdbuf();
  return parse_experiment_config(text.str());
}

namespace {

struct PreparedExperiment {
  ExperimentConfig config;
  BilevelProblem problem;
};

/// Loads, applies CLI overrides, assembles. Throws ConfigIoError (exit 2)
/// or ValidationError (exit 3).
PreparedExperiment prepare(const std::string& config_path, const ExperimentOverrides& overrides) {
  PreparedExperiment prepared;
  prepared.config = load_experiment_config(config_path);
  if (overrides.output_dir) prepared.config.output_dir = *overrides.output_dir;
  if (overrides.emit) prepared.config.emit = *overrides.emit;
  prepared.problem = assemble_problem(prepared.config.problem);
  return prepared;
}

json grid_to_json(const GridResult& grid) {
  json points = json::array(), values = json::array();
  for (const auto& point : grid.points) points.push_back(to_json(point));
  for (double v : grid.values) values.push_back(v);
  return {{"points", points},
          {"values", values},
          {"argmin_index", grid.argmin_index},
          {"argmin", to_json(grid.argmin)},
          {"min_value", grid.min_value}};
}

std::string grid_to_csv(const GridResult& grid) {
  const Eigen::Index p = grid.points.empty() ? 0 : grid.points.front().size();
  std::ostringstream out;
  for (Eigen::Index i = 0; i < p; ++i) out << (i ? "," : "") << "lambda_" << i;
  out << ",J\n";
  for (std::size_t k = 0; k < grid.points.size(); ++k) {
    for (Eigen::Index i = 0; i < p; ++i) {
      out << (i ? "," : "") << format_double(grid.points[k](i));
    }
    out << ',' << format_double(grid.values[k]) << '\n';
  }
  return out.str();
}

json probes_to_json(const std::vector<ProbeReport>& reports) {
  json arr = json::array();
  for (const auto& report : reports) arr.push_back(to_json(report));
  return {{"reports", arr}};
}

json probe_verdicts(const ProbeFlags& flags, const std::vector<ProbeReport>& reports) {
  json out = {{"convexity", "skipped"},
              {"coercivity", "skipped"},
              {"inner-boundedness", "skipped"},
              {"singleton-argmin", "skipped"}};
  (void)flags;
  for (const auto& report : reports) out[to_string(report.probe)] = to_string(report.verdict);
  return out;
}

void print_probe_table(const std::vector<ProbeReport>& reports) {
  std::cout << "probes:";
  if (reports.empty()) {
    std::cout << " (none)";
  }
  for (const auto& report : reports) {
    std::cout << ' ' << to_string(report.probe) << '=' << to_string(report.verdict);
  }
  std::cout << '\n';
}

json trace_to_json(const OuterTrace& trace, const ExperimentConfig& config) {
  json iterates = json::array(), values = json::array(), hypergrads = json::array(),
       step_norms = json::array(), decrease = json::array();
  for (const auto& it : trace.iterates) iterates.push_back(to_json(it));
  for (double v : trace.values) values.push_back(v);
  for (const auto& h : trace.hypergrads) hypergrads.push_back(to_json(h));
  for (double s : trace.step_norms) step_norms.push_back(s);
  for (bool b : sufficient_decrease_check(trace, config.outer.sufficient_decrease_c)) {
    decrease.push_back(b);
  }
  json out = {{"problem", config.problem_name},
              {"hypergrad_method", to_string(config.outer.method)},
              {"alpha", trace.alpha},
              {"epsilon", config.outer.epsilon},
              {"stop_reason", to_string(trace.stop_reason)},
              {"iterates", iterates},
              {"values", values},
              {"hypergradients", hypergrads},
              {"step_norms", step_norms},
              {"sufficient_decrease_c", config.outer.sufficient_decrease_c},
              {"sufficient_decrease", decrease}};
  out["certificate"] = trace.certificate ? to_json(*trace.certificate) : json(nullptr);
  out["perturbation"] = trace.perturbation ? to_json(*trace.perturbation) : json(nullptr);
  return out;
}

int report_error(const std::exception& e, int code) {
  std::cerr << "error: " << e.what() << '\n';
  return code;
}

}  // namespace

int run_experiment(const std::string& config_path, const ExperimentOverrides& overrides) {
  PreparedExperiment prepared;
  try {
    prepared = prepare(config_path, overrides);
  } catch (const ConfigIoError& e) {
    return report_error(e, 2);
  } catch (const ValidationError& e) {
    return report_error(e, 3);
  }
  const ExperimentConfig& config = prepared.config;
  const BilevelProblem& problem = prepared.problem;

  const std::vector<ProbeReport> reports =
      run_probes(problem, config.probes, config.outer.inner);
  print_probe_table(reports);

  const GridResult grid = grid_search(problem, config.grid, config.outer.inner);
  std::cout << "grid: argmin lambda_0=" << format_double(grid.argmin(0))
            << " J=" << format_double(grid.min_value) << '\n';

  const GridInjection injection{grid.min_value, grid.points};
  const OuterTrace trace = run_hpo(problem, config.outer, injection);
  std::cout << "run: stop=" << to_string(trace.stop_reason)
            << " lambda_final_0=" << format_double(trace.iterates.back()(0))
            << " J_final=" << format_double(trace.values.back()) << '\n';

  const std::filesystem::path out_dir(config.output_dir);
  std::filesystem::create_directories(out_dir);
  if (config.emit.csv) {
    write_file_atomic(out_dir / "trace.csv", trace_to_csv(trace));
    write_file_atomic(out_dir / "grid.csv", grid_to_csv(grid));
  }
  if (config.emit.json) {
    write_file_atomic(out_dir / "trace.json", trace_to_json(trace, config).dump(2) + "\n");
    write_file_atomic(out_dir / "probes.json", probes_to_json(reports).dump(2) + "\n");
  }
  const json summary = {{"problem", config.problem_name},
                        {"stop_reason", to_string(trace.stop_reason)},
                        {"lambda_final", to_json(trace.iterates.back())},
                        {"J_final", trace.values.back()},
                        {"lambda_grid", to_json(grid.argmin)},
                        {"J_grid", grid.min_value},
                        {"certificate", trace.certificate ? to_json(*trace.certificate)
                                                          : json(nullptr)},
                        {"probes", probe_verdicts(config.probes, reports)}};
  write_file_atomic(out_dir / "summary.json", summary.dump(2) + "\n");
  return 0;
}

int run_grid_command(const std::string& config_path, const ExperimentOverrides& overrides) {
  PreparedExperiment prepared;
  try {
    prepared = prepare(config_path, overrides);
  } catch (const ConfigIoError& e) {
    return report_error(e, 2);
  } catch (const ValidationError& e) {
    return report_error(e, 3);
  }
  const GridResult grid =
      grid_search(prepared.problem, prepared.config.grid, prepared.config.outer.inner);
  std::cout << "grid: argmin lambda_0=" << format_double(grid.argmin(0))
            << " J=" << format_double(grid.min_value) << '\n';

  const std::filesystem::path out_dir(prepared.config.output_dir);
  std::filesystem::create_directories(out_dir);
  if (prepared.config.emit.csv) write_file_atomic(out_dir / "grid.csv", grid_to_csv(grid));
  if (prepared.config.emit.json) {
    write_file_atomic(out_dir / "grid.json", grid_to_json(grid).dump(2) + "\n");
  }
  return 0;
}

int run_probe_command(const std::string& config_path, const ExperimentOverrides& overrides) {
  PreparedExperiment prepared;
  try {
    prepared = prepare(config_path, overrides);
  } catch (const ConfigIoError& e) {
    return report_error(e, 2);
  } catch (const ValidationError& e) {
    return report_error(e, 3);
  }
  const std::vector<ProbeReport> reports =
      run_probes(prepared.problem, prepared.config.probes, prepared.config.outer.inner);
  print_probe_table(reports);

  const std::filesystem::path out_dir(prepared.config.output_dir);
  std::filesystem::create_directories(out_dir);
  write_file_atomic(out_dir / "probes.json", probes_to_json(reports).dump(2) + "\n");
  return 0;
}

int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"Penalty-hyperparameter optimization experiments"};
  app.require_subcommand(1);

  std::string config_path, format;
  ExperimentOverrides overrides;
  std::string out_dir;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", config_path, "experiment configuration (JSON)")->required();
    cmd->add_option("--out", out_dir, "override the output directory");
    cmd->add_option("--format", format, "emitted formats: csv|json|both")
        ->check(CLI::IsMember({"csv", "json", "both"}));
  };
  CLI::App* run = app.add_subcommand("run", "probes + grid baseline + HPO run");
  CLI::App* grid = app.add_subcommand("grid", "grid-search baseline only");
  CLI::App* probe = app.add_subcommand("probe", "hypothesis probes only");
  add_common(run);
  add_common(grid);
  add_common(probe);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (!out_dir.empty()) overrides.output_dir = out_dir;
  if (format == "csv") overrides.emit = EmitFlags{true, false};
  if (format == "json") overrides.emit = EmitFlags{false, true};
  if (format == "both") overrides.emit = EmitFlags{true, true};

  try {
    if (run->parsed()) return run_experiment(config_path, overrides);
    if (grid->parsed()) return run_grid_command(config_path, overrides);
    return run_probe_command(config_path, overrides);
  } catch (const std::exception& e) {
    return report_error(e, 3);
  }
}

}  // namespace hpo
