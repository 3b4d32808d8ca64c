#ifndef HPO_PROBLEM_HPP
#define HPO_PROBLEM_HPP

#include <Eigen/Core>
#include <optional>

namespace hpo {

enum class Mode { supervised, unsupervised_literal, unsupervised_split };
enum class ModelKind { linear_regression, mean_estimator };
enum class LossKind { squared_error };
enum class PenaltyKind { scalar_ridge, per_component };

const char* to_string(Mode m);
const char* to_string(ModelKind k);
const char* to_string(LossKind k);
const char* to_string(PenaltyKind k);

struct Dataset {
  Eigen::MatrixXd features;                // n x m
  std::optional<Eigen::VectorXd> targets;  // length n when present

  Eigen::Index rows() const { return features.rows(); }
  Eigen::Index cols() const { return features.cols(); }
};

struct ModelSpec {
  ModelKind kind = ModelKind::linear_regression;
  Eigen::Index param_dim = 0;  // r
};

struct LossSpec {
  LossKind kind = LossKind::squared_error;
};

struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::scalar_ridge;
  Eigen::Index hyper_dim = 1;  // p
};

/// Box of admissible penalty coefficients. Bounds are finite with
/// 0 <= lower[i] < upper[i]; a strictly positive lower bound keeps the
/// ridge-type inner problems strongly convex.
struct HyperparameterDomain {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Eigen::Index dim() const { return lower.size(); }
  bool contains(const Eigen::VectorXd& v) const;
  Eigen::VectorXd midpoint() const { return 0.5 * (lower + upper); }
};

/// A hyperparameter vector. Operations whose contract requires domain
/// membership check it on entry; project_hyperparameter always returns
/// an in-domain point.
struct HyperPoint {
  Eigen::VectorXd values;
};

struct BilevelProblem {
  Mode mode = Mode::supervised;
  Dataset train;
  std::optional<Dataset> val;
  ModelSpec model;
  LossSpec loss;
  PenaltySpec penalty;
  HyperparameterDomain domain;

  Eigen::Index param_dim() const { return model.param_dim; }
  Eigen::Index hyper_dim() const { return penalty.hyper_dim; }
  /// Dataset the outer objective sums over (train in literal mode).
  const Dataset& outer_data() const;
};

/// Raw problem configuration, validated by assemble_problem.
struct ProblemConfig {
  Mode mode = Mode::supervised;
  Dataset train;
  std::optional<Dataset> val;
  ModelKind model = ModelKind::linear_regression;
  std::optional<Eigen::Index> param_dim;  // inferred from the data when absent
  LossKind loss = LossKind::squared_error;
  PenaltyKind penalty = PenaltyKind::scalar_ridge;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

/// Validates a configuration and assembles the evaluable problem.
/// Throws ValidationError on dimension mismatches, empty datasets,
/// invalid domains or mode conflicts.
BilevelProblem assemble_problem(const ProblemConfig& config);

/// Penalized training objective L_lambda(w): empirical loss over the
/// training rows (summed in row order 0..n-1) plus the penalty term.
double inner_objective(const BilevelProblem& p, const Eigen::VectorXd& w, const HyperPoint& lambda);

/// Validation (or, in literal mode, full-data) error of the model at w.
/// Does not depend on the hyperparameter.
double outer_objective(const BilevelProblem& p, const Eigen::VectorXd& w);

/// Componentwise clamp onto the domain box. Idempotent, identity on
/// interior points. Rejects non-finite input.
HyperPoint project_hyperparameter(const Eigen::VectorXd& lambda, const HyperparameterDomain& d);

double penalty_value(const BilevelProblem& p, const Eigen::VectorXd& w, const Eigen::VectorXd& lambda);

// Analytic derivatives of the supported kinds. The inner Hessian is
// constant in w for every supported model/loss/penalty combination.
Eigen::VectorXd inner_gradient(const BilevelProblem& p, const Eigen::VectorXd& w, const HyperPoint& lambda);
Eigen::MatrixXd inner_hessian(const BilevelProblem& p, const HyperPoint& lambda);
/// d/dlambda of grad_w L at w, an r x p matrix.
Eigen::MatrixXd inner_lambda_jacobian(const BilevelProblem& p, const Eigen::VectorXd& w);
Eigen::VectorXd outer_gradient(const BilevelProblem& p, const Eigen::VectorXd& w);

}  // namespace hpo

#endif
