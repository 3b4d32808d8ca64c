#ifndef HPO_DIAGNOSTICS_HPP
#define HPO_DIAGNOSTICS_HPP

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hpo/hypergrad.hpp"
#include "hpo/inner.hpp"
#include "hpo/problem.hpp"

namespace hpo {

enum class ProbeKind { convexity, coercivity, inner_boundedness, singleton_argmin };
enum class Verdict { consistent, violated };

const char* to_string(ProbeKind k);
const char* to_string(Verdict v);

struct ConvexityWitness {
  Eigen::VectorXd point_a;
  Eigen::VectorXd point_b;
  double weight = 0.0;        // interpolation weight on point_a
  double interpolated = 0.0;  // J(a*pa + (1-a)*pb)
  double chord = 0.0;         // a*J(pa) + (1-a)*J(pb)
  double tolerance = 0.0;
};

struct CoercivityWitness {
  double radius_prev = 0.0;
  double radius = 0.0;
  double min_prev = 0.0;
  double min_at = 0.0;
  bool saturated = false;  // flat tail rather than a decrease
};

struct BoundednessWitness {
  Eigen::VectorXd lambda;
  double norm = 0.0;
  bool solver_failed = false;
};

struct SingletonWitness {
  Eigen::VectorXd lambda;
  int init_a = 0;
  int init_b = 0;
  double distance = 0.0;
  double tolerance = 0.0;
  bool solver_failed = false;
};

using ProbeWitness =
    std::variant<ConvexityWitness, CoercivityWitness, BoundednessWitness, SingletonWitness>;

/// Falsification-style probe result: "consistent" means no violation was
/// found at the sampled resolution, never a proof. A violated verdict
/// always carries a witness that reproduces the violation in isolation.
struct ProbeReport {
  ProbeKind probe = ProbeKind::convexity;
  Verdict verdict = Verdict::consistent;
  int samples = 0;
  double margin = 0.0;  // worst-case slack (negative on violation)
  std::optional<ProbeWitness> witness;
  std::string note;
};

/// Samples pairs from a deterministic low-discrepancy sequence in the box
/// plus uniform interior interpolation weights, and flags
/// J(a x + (1-a) y) > a J(x) + (1-a) J(y) + 1e-8 * (1 + |J(x)| + |J(y)|).
ProbeReport probe_convexity(const ResponseFn& response, const HyperparameterDomain& d,
                            int n_pairs, int n_interp);

/// Evaluates the response along coordinate and diagonal rays at the given
/// radii (the evaluator must accept points of the enlarged box). Violated
/// on a shell-minimum decrease beyond the first radius, or when the final
/// increment saturates below 1e-6 * (1 + |last min|) -- a bounded response
/// cannot be coercive.
ProbeReport probe_coercivity(const ResponseFn& response, const HyperparameterDomain& d,
                             const std::vector<double>& radii);

/// lambda -> final inner iterate; empty optional marks a failed solve.
using InnerSolveFn = std::function<std::optional<Eigen::VectorXd>(const Eigen::VectorXd&)>;

/// Solves the inner problem across the grid; consistent when every solve
/// converges and max ||w*|| <= 10 * median ||w*||.
ProbeReport probe_inner_boundedness(const InnerSolveFn& solve,
                                    const std::vector<Eigen::VectorXd>& grid);
ProbeReport probe_inner_boundedness(const BilevelProblem& p,
                                    const std::vector<Eigen::VectorXd>& grid,
                                    const InnerConfig& cfg);

/// Deterministic distinct starting points for multi-init solves.
std::vector<Eigen::VectorXd> default_probe_inits(Eigen::Index dim, int n_inits);

/// Runs the inner solve from several initializations per grid point;
/// consistent when all pairwise final distances stay within
/// 1e-6 * (1 + max ||w*||) at every grid point.
ProbeReport probe_singleton_argmin(const BilevelProblem& p,
                                   const std::vector<Eigen::VectorXd>& grid,
                                   const InnerConfig& cfg, int n_inits);
ProbeReport probe_singleton_argmin(const BilevelProblem& p,
                                   const std::vector<Eigen::VectorXd>& grid,
                                   const InnerConfig& cfg,
                                   const std::vector<Eigen::VectorXd>& inits);

}  // namespace hpo

#endif
