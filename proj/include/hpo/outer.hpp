#ifndef HPO_OUTER_HPP
#define HPO_OUTER_HPP

#include <optional>
#include <vector>

#include "hpo/ekeland.hpp"
#include "hpo/hypergrad.hpp"
#include "hpo/problem.hpp"

namespace hpo {

struct OuterConfig {
  /// Outer step size. Defaults to 0.05 * min_i(upper_i - lower_i) / (1 + ||h_0||),
  /// scaled by the first hypergradient so the first step cannot saturate
  /// the projection.
  std::optional<double> alpha;
  /// Stopping tolerance on the step norm and certificate precision.
  double epsilon = 1e-4;
  /// Maximum number of outer steps (iterate count is one more).
  int max_iters = 500;
  HypergradMethod method = HypergradMethod::forward_iterative;
  InnerConfig inner;
  double sufficient_decrease_c = 0.1;
  /// When set, halve the step until the sufficient-decrease condition
  /// holds (monitoring-only by default).
  bool backtracking = false;
  /// lambda_0; defaults to the box midpoint. lambda_1 is produced by one
  /// outer step from lambda_0.
  std::optional<Eigen::VectorXd> start;
};

enum class StopReason { step_norm, max_iters, divergence };
const char* to_string(StopReason r);

enum class ModelBranch { distinct, stationary, constrained_stationary };
const char* to_string(ModelBranch b);

/// Perturbation-theorem diagnostics attached to the final iterate: the
/// first-order model, its box minimizer, and the witness search. The
/// constrained-stationary branch flags a nonzero gradient pinned by
/// active bounds, which the coincident branch of the theorem does not
/// cover on a box.
struct PerturbationDiagnostics {
  ModelBranch branch = ModelBranch::distinct;
  double smoothness_estimate = 0.0;
  Eigen::VectorXd model_gradient;
  Eigen::VectorXd lambda_plus;
  std::optional<PerturbationBounds> bounds;
  std::optional<WitnessReport> witness;
};

/// Grid-search infimum estimate and candidate set injected into the
/// final certificate (the trace itself is used when absent).
struct GridInjection {
  double inf_estimate = 0.0;
  std::vector<Eigen::VectorXd> candidates;
};

struct OuterTrace {
  std::vector<Eigen::VectorXd> iterates;         // lambda_0..lambda_K
  std::vector<double> values;                    // J(lambda_t)
  std::vector<HypergradientEstimate> hypergrads; // one per iterate
  std::vector<double> step_norms;                // ||lambda_{t+1} - lambda_t||
  StopReason stop_reason = StopReason::max_iters;
  double alpha = 0.0;  // resolved base step size
  std::optional<EkelandCertificate> certificate;
  std::optional<PerturbationDiagnostics> perturbation;
};

/// Projected hypergradient update lambda - alpha * h clamped to the box.
HyperPoint outer_step(const HyperPoint& lambda, const HypergradientEstimate& h, double alpha,
                      const HyperparameterDomain& d);

/// Loop guard: true iff ||current - previous|| <= epsilon. The boundary
/// counts as stopped (the loop continues strictly above epsilon).
bool stopping(const HyperPoint& current, const HyperPoint& previous, double epsilon);

/// Marks step t true iff J(lambda_t) - J(lambda_{t+1}) >= c ||lambda_{t+1} - lambda_t||^2.
std::vector<bool> sufficient_decrease_check(const OuterTrace& trace, double c);

/// Largest sampled curvature of the response over the box (finite
/// difference Hessians at deterministic low-discrepancy points).
double estimate_response_smoothness(const ResponseFn& response, const HyperparameterDomain& d,
                                    int samples = 48);

/// Runs the outer loop until the step norm falls to epsilon or the
/// budget runs out. On a step-norm stop the trace carries an Ekeland
/// certificate (relative to the injected grid estimate or to the trace
/// minimum) and perturbation diagnostics for the final iterate.
/// A response that grows beyond 10x its initial value stops the run with
/// a divergence trace; that is a result, not an exception.
OuterTrace run_hpo(const BilevelProblem& p, const OuterConfig& cfg,
                   const std::optional<GridInjection>& injection = std::nullopt);

}  // namespace hpo

#endif
