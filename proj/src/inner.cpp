#include "hpo/inner.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <sstream>

#include "hpo/errors.hpp"

namespace hpo {

double smoothness_bound(const BilevelProblem& p) {
  const Eigen::MatrixXd H = inner_hessian(p, HyperPoint{p.domain.upper});
  const Eigen::Index r = H.rows();
  Eigen::VectorXd v = Eigen::VectorXd::Ones(r) / std::sqrt(static_cast<double>(r));
  for (int k = 0; k < 50; ++k) {
    Eigen::VectorXd Hv = H * v;
    const double norm = Hv.norm();
    if (norm == 0.0) return 0.0;  // zero Hessian, any step size descends
    v = Hv / norm;
  }
  return v.dot(H * v);
}

double resolve_step_size(const BilevelProblem& p, const InnerConfig& cfg) {
  if (cfg.step_size) {
    if (!(std::isfinite(*cfg.step_size) && *cfg.step_size > 0.0)) {
      throw ValidationError("inner step size must be positive and finite");
    }
    return *cfg.step_size;
  }
  const double L = smoothness_bound(p);
  if (!(L > 0.0)) throw NumericalError("smoothness bound is not positive");
  return 1.0 / (2.0 * L);
}

Eigen::VectorXd resolve_init(const BilevelProblem& p, const InnerConfig& cfg) {
  if (cfg.init) {
    if (cfg.init->size() != p.param_dim() || !cfg.init->allFinite()) {
      throw ValidationError("inner init has wrong dimension or non-finite entries");
    }
    return *cfg.init;
  }
  return Eigen::VectorXd::Zero(p.param_dim());
}

Eigen::VectorXd inner_step(const BilevelProblem& p, const Eigen::VectorXd& w,
                           const HyperPoint& lambda, double eta) {
  if (!(std::isfinite(eta) && eta > 0.0)) {
    throw ValidationError("inner step size must be positive and finite");
  }
  const Eigen::VectorXd next = w - eta * inner_gradient(p, w, lambda);
  if (!next.allFinite()) throw NumericalError("non-finite inner iterate");
  return next;
}

InnerTrajectory solve_inner(const BilevelProblem& p, const HyperPoint& lambda,
                            const InnerConfig& cfg) {
  if (cfg.steps < 1) throw ValidationError("inner step count must be >= 1");
  const double eta = resolve_step_size(p, cfg);

  InnerTrajectory traj;
  traj.iterates.reserve(cfg.steps + 1);
  traj.objective_values.reserve(cfg.steps + 1);
  traj.iterates.push_back(resolve_init(p, cfg));
  traj.objective_values.push_back(inner_objective(p, traj.iterates.front(), lambda));
  const double guard = 10.0 * traj.objective_values.front();

  for (int t = 1; t <= cfg.steps; ++t) {
    traj.iterates.push_back(inner_step(p, traj.iterates.back(), lambda, eta));
    const double value = inner_objective(p, traj.iterates.back(), lambda);
    if (value > guard) {
      std::ostringstream msg;
      msg << "inner dynamics diverged at step " << t << ": objective " << value
          << " exceeds 10x the initial value " << traj.objective_values.front();
      throw DivergenceError(msg.str(), t);
    }
    traj.objective_values.push_back(value);
  }
  return traj;
}

bool has_closed_form(const BilevelProblem& p) {
  // Every supported kind combination admits an exact minimizer.
  return p.loss.kind == LossKind::squared_error;
}

namespace {

void check_closed_form_lambda(const BilevelProblem& p, const HyperPoint& lambda) {
  if (lambda.values.size() != p.hyper_dim() || !lambda.values.allFinite()) {
    throw ValidationError("hyperparameter has wrong dimension or non-finite entries");
  }
  // The closed forms are algebraic in lambda and remain usable outside the
  // domain box (nonnegativity is all they need), which the enlarged-box
  // coercivity probe relies on.
  if ((lambda.values.array() < 0.0).any()) {
    throw ValidationError("closed forms require a nonnegative penalty coefficient");
  }
}

Eigen::VectorXd penalty_diagonal(const BilevelProblem& p, const HyperPoint& lambda) {
  if (p.penalty.kind == PenaltyKind::scalar_ridge) {
    return Eigen::VectorXd::Constant(p.param_dim(), lambda.values(0));
  }
  return lambda.values;
}

}  // namespace

Eigen::VectorXd ridge_closed_form(const BilevelProblem& p, const HyperPoint& lambda) {
  if (p.model.kind != ModelKind::linear_regression) {
    throw ValidationError("ridge closed form requires the linear-regression model");
  }
  check_closed_form_lambda(p, lambda);

  const Eigen::MatrixXd& X = p.train.features;
  const Eigen::MatrixXd A =
      X.transpose() * X + Eigen::MatrixXd(penalty_diagonal(p, lambda).asDiagonal());
  const Eigen::VectorXd b = X.transpose() * *p.train.targets;
  const Eigen::VectorXd w = A.ldlt().solve(b);

  const double residual = (A * w - b).norm();
  if (!w.allFinite() || residual > 1e-10 * std::max(1.0, b.norm())) {
    throw NumericalError("singular or ill-conditioned normal equations in ridge solve");
  }
  return w;
}

Eigen::VectorXd mean_closed_form(const BilevelProblem& p, const HyperPoint& lambda) {
  if (p.model.kind != ModelKind::mean_estimator) {
    throw ValidationError("mean closed form requires the mean-estimator model");
  }
  check_closed_form_lambda(p, lambda);

  const double n = static_cast<double>(p.train.rows());
  const Eigen::VectorXd xbar = p.train.features.colwise().mean();
  const Eigen::VectorXd diag = penalty_diagonal(p, lambda);
  Eigen::VectorXd w(xbar.size());
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    w(j) = n / (n + diag(j)) * xbar(j);
  }
  return w;
}

Eigen::VectorXd closed_form_minimizer(const BilevelProblem& p, const HyperPoint& lambda) {
  if (!has_closed_form(p)) throw ValidationError("problem kind has no closed-form minimizer");
  return p.model.kind == ModelKind::linear_regression ? ridge_closed_form(p, lambda)
                                                      : mean_closed_form(p, lambda);
}

}  // namespace hpo
