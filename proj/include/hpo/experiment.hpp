#ifndef HPO_EXPERIMENT_HPP
#define HPO_EXPERIMENT_HPP

#include <optional>
#include <string>
#include <vector>

#include "hpo/diagnostics.hpp"
#include "hpo/outer.hpp"
#include "hpo/problem.hpp"

namespace hpo {

/// Unreadable or syntactically broken configuration (CLI exit 2);
/// semantic problems raise ValidationError instead (CLI exit 3).
class ConfigIoError : public std::runtime_error {
 public:
  explicit ConfigIoError(const std::string& what) : std::runtime_error(what) {}
};

struct GridConfig {
  int points = 200;
  bool log_scale = true;
};

struct ProbeFlags {
  bool convexity = true;
  bool coercivity = true;
  bool inner_boundedness = true;
  bool singleton_argmin = true;
};

struct EmitFlags {
  bool csv = true;
  bool json = true;
};

struct ExperimentConfig {
  std::string problem_name = "custom";  // desk-ridge | desk-mean | custom
  ProblemConfig problem;
  OuterConfig outer;
  GridConfig grid;
  ProbeFlags probes;
  std::string output_dir = "out";
  EmitFlags emit;
};

struct GridResult {
  std::vector<Eigen::VectorXd> points;  // sorted ascending along the grid
  std::vector<double> values;           // J per grid point
  int argmin_index = 0;
  Eigen::VectorXd argmin;
  double min_value = 0.0;
};

/// Deterministic supervised ridge desk problem: 20x5 sinusoidal design,
/// 10x5 validation block, domain [1e-6, 10].
BilevelProblem make_desk_ridge();
ProblemConfig desk_ridge_config();

/// Deterministic unsupervised-literal mean problem: 30x4 offset-cosine
/// data (nonzero mean by construction), domain [1e-6, 10].
BilevelProblem make_desk_mean();
ProblemConfig desk_mean_config();

/// Evaluates the response on a grid over the domain, through the exact
/// closed-form inner solution when the problem kind has one and through
/// trajectories otherwise.
GridResult grid_search(const BilevelProblem& p, const GridConfig& grid_cfg,
                       const InnerConfig& inner_cfg);

std::vector<ProbeReport> run_probes(const BilevelProblem& p, const ProbeFlags& flags,
                                    const InnerConfig& inner_cfg);

ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

struct ExperimentOverrides {
  std::optional<std::string> output_dir;
  std::optional<EmitFlags> emit;
};

/// Full experiment: probes, grid baseline, HPO run with the grid minimum
/// injected into the certificate; writes trace.csv/json, grid.csv,
/// probes.json and summary.json into the output directory.
/// Returns the process exit status: 0 done (divergence is a recorded
/// result, not a failure), 2 unreadable config, 3 validation failure.
int run_experiment(const std::string& config_path, const ExperimentOverrides& overrides = {});

/// Grid baseline only (writes grid.csv).
int run_grid_command(const std::string& config_path, const ExperimentOverrides& overrides = {});

/// Probes only (writes probes.json, prints the verdict table).
int run_probe_command(const std::string& config_path, const ExperimentOverrides& overrides = {});

/// Entry point behind the hpo binary; args excludes argv[0].
int cli_main(const std::vector<std::string>& args);

}  // namespace hpo

#endif
