#ifndef HPO_HYPERGRAD_HPP
#define HPO_HYPERGRAD_HPP

#include <functional>

#include "hpo/inner.hpp"
#include "hpo/problem.hpp"

namespace hpo {

enum class HypergradMethod { forward_iterative, implicit, finite_difference };

const char* to_string(HypergradMethod m);

struct HypergradientEstimate {
  Eigen::VectorXd value;  // length p
  HypergradMethod method = HypergradMethod::forward_iterative;
  int inner_steps_used = 0;
  int evaluations = 0;  // trajectory/objective evaluations consumed
};

/// Response J(lambda) = E(w_T(lambda)): outer objective at the final
/// iterate of the inner dynamics. Deterministic given (p, lambda, cfg).
double response_value(const BilevelProblem& p, const HyperPoint& lambda, const InnerConfig& cfg);

using ResponseFn = std::function<double(const Eigen::VectorXd&)>;

/// Trajectory-backed response evaluator (domain-checked).
ResponseFn make_response_evaluator(const BilevelProblem& p, const InnerConfig& cfg);

/// Exact response through the closed-form inner minimizer. With
/// restrict_to_domain = false the evaluator accepts any nonnegative
/// lambda, which the coercivity probe needs on its enlarged box.
ResponseFn make_closed_form_response(const BilevelProblem& p, bool restrict_to_domain = true);

/// Forward-mode iterative differentiation: runs the coupled recursion
///   w_{t+1} = Phi(w_t, lambda),  S_{t+1} = dPhi/dw * S_t + dPhi/dlambda
/// with S_0 = 0 and returns S_T^T grad_w E(w_T) -- the exact gradient of
/// the truncated response lambda -> E(w_T(lambda)).
HypergradientEstimate hypergradient_forward(const BilevelProblem& p, const HyperPoint& lambda,
                                            const InnerConfig& cfg);

/// Implicit differentiation at the closed-form solution:
/// differentiating the stationarity condition grad_w L(w*, lambda) = 0
/// gives dw*/dlambda = -H^{-1} C with H the inner Hessian and C the
/// lambda-Jacobian of the inner gradient, so
///   dJ/dlambda = -C^T H^{-1} grad_w E(w*).
/// For scalar ridge, C = 2 w* and H = 2 (X^T X + lambda I); the factors
/// of two cancel to -w*^T (X^T X + lambda I)^{-1} grad_w E(w*).
HypergradientEstimate hypergradient_implicit(const BilevelProblem& p, const HyperPoint& lambda);

/// Central finite differences of the response, the oracle for the other
/// two strategies. The actual step in coordinate i is h * max(1, |lambda_i|);
/// every perturbed point must stay inside the domain.
HypergradientEstimate hypergradient_fd(const BilevelProblem& p, const HyperPoint& lambda,
                                       double h, const InnerConfig& cfg);

/// Checked central differences of an arbitrary response evaluator.
Eigen::VectorXd central_difference(const ResponseFn& fn, const Eigen::VectorXd& lambda, double h,
                                   const HyperparameterDomain& d);

HypergradientEstimate compute_hypergradient(const BilevelProblem& p, const HyperPoint& lambda,
                                            HypergradMethod method, const InnerConfig& cfg);

}  // namespace hpo

#endif
