#include "hpo/hypergrad.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <sstream>

#include "hpo/errors.hpp"

namespace hpo {

const char* to_string(HypergradMethod m) {
  switch (m) {
    case HypergradMethod::forward_iterative: return "forward-iterative";
    case HypergradMethod::implicit: return "implicit";
    case HypergradMethod::finite_difference: return "finite-difference";
  }
  return "?";
}

double response_value(const BilevelProblem& p, const HyperPoint& lambda, const InnerConfig& cfg) {
  return outer_objective(p, solve_inner(p, lambda, cfg).final_iterate());
}

ResponseFn make_response_evaluator(const BilevelProblem& p, const InnerConfig& cfg) {
  return [p, cfg](const Eigen::VectorXd& lambda) {
    return response_value(p, HyperPoint{lambda}, cfg);
  };
}

ResponseFn make_closed_form_response(const BilevelProblem& p, bool restrict_to_domain) {
  return [p, restrict_to_domain](const Eigen::VectorXd& lambda) {
    if (restrict_to_domain && !p.domain.contains(lambda)) {
      throw ValidationError("hyperparameter outside the domain box");
    }
    return outer_objective(p, closed_form_minimizer(p, HyperPoint{lambda}));
  };
}

HypergradientEstimate hypergradient_forward(const BilevelProblem& p, const HyperPoint& lambda,
                                            const InnerConfig& cfg) {
  if (cfg.steps < 1) throw ValidationError("forward-mode differentiation needs >= 1 inner step");
  const double eta = resolve_step_size(p, cfg);

  Eigen::VectorXd w = resolve_init(p, cfg);
  // S_t = dw_t/dlambda, r x p. S_0 = 0 because w_0 does not depend on lambda.
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(p.param_dim(), p.hyper_dim());
  const Eigen::MatrixXd H = inner_hessian(p, lambda);  // constant in w for supported kinds

  double objective = inner_objective(p, w, lambda);
  const double guard = 10.0 * objective;
  for (int t = 1; t <= cfg.steps; ++t) {
    const Eigen::MatrixXd C = inner_lambda_jacobian(p, w);
    const Eigen::VectorXd g = inner_gradient(p, w, lambda);
    S -= eta * (H * S + C);
    w -= eta * g;
    if (!S.allFinite()) {
      std::ostringstream msg;
      msg << "sensitivity overflow in forward-mode recursion at step " << t;
      throw NumericalError(msg.str());
    }
    objective = inner_objective(p, w, lambda);
    if (objective > guard) {
      std::ostringstream msg;
      msg << "inner dynamics diverged at step " << t << " during forward-mode differentiation";
      throw DivergenceError(msg.str(), t);
    }
  }

  HypergradientEstimate est;
  est.value = S.transpose() * outer_gradient(p, w);
  est.method = HypergradMethod::forward_iterative;
  est.inner_steps_used = cfg.steps;
  est.evaluations = 1;
  if (!est.value.allFinite()) throw NumericalError("non-finite forward-mode hypergradient");
  return est;
}

HypergradientEstimate hypergradient_implicit(const BilevelProblem& p, const HyperPoint& lambda) {
  const Eigen::VectorXd w = closed_form_minimizer(p, lambda);
  const Eigen::VectorXd gE = outer_gradient(p, w);
  const Eigen::MatrixXd H = inner_hessian(p, lambda);

  const Eigen::VectorXd v = H.ldlt().solve(gE);
  if (!v.allFinite() || (H * v - gE).norm() > 1e-8 * std::max(1.0, gE.norm())) {
    throw NumericalError("singular inner Hessian in implicit differentiation");
  }

  HypergradientEstimate est;
  est.value = -inner_lambda_jacobian(p, w).transpose() * v;
  est.method = HypergradMethod::implicit;
  est.inner_steps_used = 0;
  est.evaluations = 1;
  if (!est.value.allFinite()) throw NumericalError("non-finite implicit hypergradient");
  return est;
}

Eigen::VectorXd central_difference(const ResponseFn& fn, const Eigen::VectorXd& lambda, double h,
                                   const HyperparameterDomain& d) {
  if (!(std::isfinite(h) && h > 0.0)) throw ValidationError("finite-difference h must be positive");
  if (!d.contains(lambda)) throw ValidationError("hyperparameter outside the domain box");

  Eigen::VectorXd grad(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(lambda(i)));
    Eigen::VectorXd hi = lambda, lo = lambda;
    hi(i) += step;
    lo(i) -= step;
    if (!d.contains(hi) || !d.contains(lo)) {
      std::ostringstream msg;
      msg << "finite-difference perturbation of coordinate " << i
          << " leaves the hyperparameter domain";
      throw ValidationError(msg.str());
    }
    grad(i) = (fn(hi) - fn(lo)) / (2.0 * step);
  }
  if (!grad.allFinite()) throw NumericalError("non-finite finite-difference gradient");
  return grad;
}

HypergradientEstimate hypergradient_fd(const BilevelProblem& p, const HyperPoint& lambda,
                                       double h, const InnerConfig& cfg) {
  HypergradientEstimate est;
  est.value = central_difference(make_response_evaluator(p, cfg), lambda.values, h, p.domain);
  est.method = HypergradMethod::finite_difference;
  est.inner_steps_used = cfg.steps;
  est.evaluations = 2 * static_cast<int>(lambda.values.size());
  return est;
}

HypergradientEstimate compute_hypergradient(const BilevelProblem& p, const HyperPoint& lambda,
                                            HypergradMethod method, const InnerConfig& cfg) {
  switch (method) {
    case HypergradMethod::forward_iterative: return hypergradient_forward(p, lambda, cfg);
    case HypergradMethod::implicit: return hypergradient_implicit(p, lambda);
    case HypergradMethod::finite_difference:
      return hypergradient_fd(p, lambda, 1e-5, cfg);
  }
  throw ValidationError("unknown hypergradient method");
}

}  // namespace hpo
