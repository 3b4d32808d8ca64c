#ifndef HPO_INNER_HPP
#define HPO_INNER_HPP

#include <optional>
#include <vector>

#include "hpo/problem.hpp"

namespace hpo {

/// Inner optimization dynamics: constant-step gradient descent
/// w_{t+1} = w_t - eta * grad_w L_lambda(w_t).
struct InnerConfig {
  int steps = 2000;
  /// Step size eta. Defaults to 1/(2 L) where L is the smoothness bound
  /// estimated at the domain's upper corner, so one value is safe (and
  /// identical) for every lambda in the box.
  std::optional<double> step_size;
  /// Starting point w_0. Defaults to the zero vector.
  std::optional<Eigen::VectorXd> init;
};

struct InnerTrajectory {
  std::vector<Eigen::VectorXd> iterates;  // w_0..w_T
  std::vector<double> objective_values;   // L_lambda(w_t)

  const Eigen::VectorXd& final_iterate() const { return iterates.back(); }
};

/// Largest curvature of the inner objective over the domain,
/// L = lambda_max of the inner Hessian at the upper corner, estimated
/// with 50 power-iteration steps from a deterministic start.
double smoothness_bound(const BilevelProblem& p);

double resolve_step_size(const BilevelProblem& p, const InnerConfig& cfg);
Eigen::VectorXd resolve_init(const BilevelProblem& p, const InnerConfig& cfg);

/// One step of the iteration map Phi(w, lambda) = w - eta grad_w L_lambda(w),
/// with the gradient evaluated analytically.
Eigen::VectorXd inner_step(const BilevelProblem& p, const Eigen::VectorXd& w,
                           const HyperPoint& lambda, double eta);

/// Runs T steps of inner_step and records the objective along the way.
/// Throws DivergenceError (with the step index) if the objective grows
/// beyond 10x its initial value.
InnerTrajectory solve_inner(const BilevelProblem& p, const HyperPoint& lambda,
                            const InnerConfig& cfg);

bool has_closed_form(const BilevelProblem& p);

/// Exact ridge minimizer (X^T X + diag(lambda))^{-1} X^T y via a dense
/// symmetric solve; the normal-equation residual is checked to 1e-10
/// relative and a singular system is reported.
Eigen::VectorXd ridge_closed_form(const BilevelProblem& p, const HyperPoint& lambda);

/// Exact mean-estimator minimizer, componentwise n/(n + lambda_j) * xbar_j.
Eigen::VectorXd mean_closed_form(const BilevelProblem& p, const HyperPoint& lambda);

/// Dispatch to the closed form matching the problem kind.
Eigen::VectorXd closed_form_minimizer(const BilevelProblem& p, const HyperPoint& lambda);

}  // namespace hpo

#endif
