#include "hpo/problem.hpp"

#include <cmath>
#include <sstream>

#include "hpo/errors.hpp"

namespace hpo {

const char* to_string(Mode m) {
  switch (m) {
    case Mode::supervised: return "supervised";
    case Mode::unsupervised_literal: return "unsupervised-literal";
    case Mode::unsupervised_split: return "unsupervised-split";
  }
  return "?";
}

const char* to_string(ModelKind k) {
  return k == ModelKind::linear_regression ? "linear-regression" : "mean-estimator";
}

const char* to_string(LossKind) { return "squared-error"; }

const char* to_string(PenaltyKind k) {
  return k == PenaltyKind::scalar_ridge ? "scalar-ridge" : "per-component";
}

bool HyperparameterDomain::contains(const Eigen::VectorXd& v) const {
  if (v.size() != lower.size()) return false;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!(v(i) >= lower(i) && v(i) <= upper(i))) return false;
  }
  return true;
}

const Dataset& BilevelProblem::outer_data() const {
  return mode == Mode::unsupervised_literal ? train : *val;
}

namespace {

void check_dataset(const Dataset& d, const char* name) {
  if (d.rows() < 1 || d.cols() < 1) {
    throw ValidationError(std::string("empty dataset: ") + name);
  }
  if (!d.features.allFinite()) {
    throw ValidationError(std::string("non-finite feature entries in ") + name);
  }
  if (d.targets) {
    if (d.targets->size() != d.rows()) {
      std::ostringstream msg;
      msg << "dimension mismatch: " << name << " has " << d.rows() << " rows but "
          << d.targets->size() << " targets";
      throw ValidationError(msg.str());
    }
    if (!d.targets->allFinite()) {
      throw ValidationError(std::string("non-finite targets in ") + name);
    }
  }
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw NumericalError(std::string("non-finite value in ") + what);
  }
}

void check_lambda(const BilevelProblem& p, const HyperPoint& lambda) {
  if (lambda.values.size() != p.hyper_dim()) {
    throw ValidationError("hyperparameter has wrong dimension");
  }
  if (!lambda.values.allFinite()) {
    throw ValidationError("non-finite hyperparameter");
  }
  if (!p.domain.contains(lambda.values)) {
    throw ValidationError("hyperparameter outside the domain box");
  }
}

void check_params(const BilevelProblem& p, const Eigen::VectorXd& w) {
  if (w.size() != p.param_dim()) {
    throw ValidationError("parameter vector has wrong dimension");
  }
  if (!w.allFinite()) {
    throw ValidationError("non-finite parameter vector");
  }
}

/// Empirical loss summed in fixed row order, no penalty term.
double empirical_loss(const BilevelProblem& p, const Dataset& data, const Eigen::VectorXd& w) {
  double total = 0.0;
  const Eigen::Index n = data.rows();
  if (p.model.kind == ModelKind::linear_regression) {
    const Eigen::VectorXd& y = *data.targets;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = data.features.row(i).dot(w) - y(i);
      total += r * r;
    }
  } else {  // mean estimator: per-row reconstruction error ||x_i - w||^2
    for (Eigen::Index i = 0; i < n; ++i) {
      total += (data.features.row(i).transpose() - w).squaredNorm();
    }
  }
  require_finite(total, "empirical loss");
  return total;
}

}  // namespace

BilevelProblem assemble_problem(const ProblemConfig& config) {
  check_dataset(config.train, "train");
  if (config.val) check_dataset(*config.val, "val");

  switch (config.mode) {
    case Mode::supervised:
      if (!config.val) throw ValidationError("supervised mode requires a validation dataset");
      if (!config.train.targets || !config.val->targets) {
        throw ValidationError("supervised mode requires targets on train and val");
      }
      if (config.model != ModelKind::linear_regression) {
        throw ValidationError("supervised mode supports the linear-regression model only");
      }
      break;
    case Mode::unsupervised_literal:
      if (config.val) {
        throw ValidationError(
            "mode conflict: unsupervised-literal evaluates the outer objective on the "
            "training data and must not carry a validation dataset");
      }
      [[fallthrough]];
    case Mode::unsupervised_split:
      if (config.mode == Mode::unsupervised_split && !config.val) {
        throw ValidationError("unsupervised-split mode requires a validation dataset");
      }
      if (config.model != ModelKind::mean_estimator) {
        throw ValidationError("unsupervised modes support the mean-estimator model only");
      }
      if (config.train.targets || (config.val && config.val->targets)) {
        throw ValidationError("targets are not used in unsupervised modes");
      }
      break;
  }

  if (config.val && config.val->cols() != config.train.cols()) {
    throw ValidationError("dimension mismatch: train and val feature widths differ");
  }

  // Both supported models parameterize one weight per feature column.
  const Eigen::Index r = config.train.cols();
  if (config.param_dim && *config.param_dim != r) {
    std::ostringstream msg;
    msg << "dimension mismatch: param_dim " << *config.param_dim << " but " << r
        << " feature columns";
    throw ValidationError(msg.str());
  }

  const Eigen::Index p = config.penalty == PenaltyKind::scalar_ridge ? 1 : r;
  if (config.lower.size() != p || config.upper.size() != p) {
    std::ostringstream msg;
    msg << "dimension mismatch: domain bounds must have length " << p << " for penalty kind "
        << to_string(config.penalty);
    throw ValidationError(msg.str());
  }
  if (!config.lower.allFinite() || !config.upper.allFinite()) {
    throw ValidationError("domain bounds must be finite");
  }
  for (Eigen::Index i = 0; i < p; ++i) {
    if (!(config.lower(i) >= 0.0 && config.lower(i) < config.upper(i))) {
      throw ValidationError("invalid domain: need 0 <= lower < upper componentwise");
    }
  }

  BilevelProblem out;
  out.mode = config.mode;
  out.train = config.train;
  out.val = config.val;
  out.model = ModelSpec{config.model, r};
  out.loss = LossSpec{config.loss};
  out.penalty = PenaltySpec{config.penalty, p};
  out.domain = HyperparameterDomain{config.lower, config.upper};
  return out;
}

double penalty_value(const BilevelProblem& p, const Eigen::VectorXd& w, const Eigen::VectorXd& lambda) {
  double total = 0.0;
  if (p.penalty.kind == PenaltyKind::scalar_ridge) {
    total = lambda(0) * w.squaredNorm();
  } else {
    for (Eigen::Index j = 0; j < w.size(); ++j) total += lambda(j) * w(j) * w(j);
  }
  require_finite(total, "penalty");
  return total;
}

double inner_objective(const BilevelProblem& p, const Eigen::VectorXd& w, const HyperPoint& lambda) {
  check_params(p, w);
  check_lambda(p, lambda);
  const double total = empirical_loss(p, p.train, w) + penalty_value(p, w, lambda.values);
  require_finite(total, "inner objective");
  return total;
}

double outer_objective(const BilevelProblem& p, const Eigen::VectorXd& w) {
  check_params(p, w);
  return empirical_loss(p, p.outer_data(), w);
}

HyperPoint project_hyperparameter(const Eigen::VectorXd& lambda, const HyperparameterDomain& d) {
  if (lambda.size() != d.dim()) {
    throw ValidationError("projection input has wrong dimension");
  }
  if (!lambda.allFinite()) {
    throw ValidationError("cannot project a non-finite hyperparameter");
  }
  HyperPoint out{lambda};
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    out.values(i) = std::min(std::max(lambda(i), d.lower(i)), d.upper(i));
  }
  return out;
}

Eigen::VectorXd inner_gradient(const BilevelProblem& p, const Eigen::VectorXd& w, const HyperPoint& lambda) {
  check_params(p, w);
  check_lambda(p, lambda);
  Eigen::VectorXd g(w.size());
  if (p.model.kind == ModelKind::linear_regression) {
    const Eigen::MatrixXd& X = p.train.features;
    g = 2.0 * X.transpose() * (X * w - *p.train.targets);
  } else {
    const Eigen::Index n = p.train.rows();
    const Eigen::VectorXd xbar = p.train.features.colwise().mean();
    g = 2.0 * (static_cast<double>(n) * w - static_cast<double>(n) * xbar);
  }
  if (p.penalty.kind == PenaltyKind::scalar_ridge) {
    g += 2.0 * lambda.values(0) * w;
  } else {
    g += 2.0 * lambda.values.cwiseProduct(w);
  }
  if (!g.allFinite()) throw NumericalError("non-finite inner gradient");
  return g;
}

Eigen::MatrixXd inner_hessian(const BilevelProblem& p, const HyperPoint& lambda) {
  check_lambda(p, lambda);
  const Eigen::Index r = p.param_dim();
  Eigen::MatrixXd H(r, r);
  if (p.model.kind == ModelKind::linear_regression) {
    H = 2.0 * p.train.features.transpose() * p.train.features;
  } else {
    H = 2.0 * static_cast<double>(p.train.rows()) * Eigen::MatrixXd::Identity(r, r);
  }
  if (p.penalty.kind == PenaltyKind::scalar_ridge) {
    H.diagonal().array() += 2.0 * lambda.values(0);
  } else {
    H.diagonal() += 2.0 * lambda.values;
  }
  return H;
}

Eigen::MatrixXd inner_lambda_jacobian(const BilevelProblem& p, const Eigen::VectorXd& w) {
  check_params(p, w);
  const Eigen::Index r = p.param_dim();
  if (p.penalty.kind == PenaltyKind::scalar_ridge) {
    return 2.0 * w;  // r x 1
  }
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(r, r);
  J.diagonal() = 2.0 * w;
  return J;
}

Eigen::VectorXd outer_gradient(const BilevelProblem& p, const Eigen::VectorXd& w) {
  check_params(p, w);
  const Dataset& data = p.outer_data();
  Eigen::VectorXd g(w.size());
  if (p.model.kind == ModelKind::linear_regression) {
    const Eigen::MatrixXd& X = data.features;
    g = 2.0 * X.transpose() * (X * w - *data.targets);
  } else {
    const Eigen::Index n = data.rows();
    const Eigen::VectorXd xbar = data.features.colwise().mean();
    g = 2.0 * static_cast<double>(n) * (w - xbar);
  }
  if (!g.allFinite()) throw NumericalError("non-finite outer gradient");
  return g;
}

}  // namespace hpo
