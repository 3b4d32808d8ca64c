#include "hpo/ekeland.hpp"

#include <cmath>
#include <limits>

#include "hpo/errors.hpp"

namespace hpo {

GrowthFunction growth_from_smoothness(double L) {
  if (!(std::isfinite(L) && L > 0.0)) {
    throw ValidationError("growth function needs a positive smoothness constant");
  }
  return GrowthFunction{0.5 * L};
}

ModelFunction model_function(const ResponseFn& response, const HyperPoint& lambda,
                             const HypergradientEstimate& g) {
  if (g.value.size() != lambda.values.size() || !g.value.allFinite()) {
    throw ValidationError("model gradient has wrong dimension or non-finite entries");
  }
  return ModelFunction{lambda.values, response(lambda.values), g.value};
}

HyperPoint minimize_model(const ModelFunction& m, const HyperparameterDomain& d) {
  if (m.base.size() != d.dim()) throw ValidationError("model/domain dimension mismatch");
  Eigen::VectorXd out(d.dim());
  for (Eigen::Index i = 0; i < d.dim(); ++i) {
    if (m.gradient(i) > 0.0) {
      out(i) = d.lower(i);
    } else if (m.gradient(i) < 0.0) {
      out(i) = d.upper(i);
    } else {
      out(i) = m.base(i);
    }
  }
  return HyperPoint{out};
}

PerturbationBounds perturbation_bounds(const HyperPoint& lambda, const HyperPoint& lambda_plus,
                                       const GrowthFunction& zeta) {
  const double d = (lambda_plus.values - lambda.values).norm();
  if (d == 0.0) {
    throw ValidationError(
        "perturbation bounds need distinct points; the coincident branch asserts a "
        "vanishing gradient instead");
  }
  PerturbationBounds b;
  b.distance = d;
  b.point = 2.0 * zeta.value(d) / zeta.derivative(d);
  b.value = zeta.value(d);
  return b;
}

namespace {

/// Central differences that collapse to one-sided at the box boundary,
/// so the response is never evaluated outside its domain.
Eigen::VectorXd box_fd_gradient(const ResponseFn& fn, const Eigen::VectorXd& x,
                                const HyperparameterDomain& d) {
  Eigen::VectorXd grad(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x(i)));
    Eigen::VectorXd hi = x, lo = x;
    hi(i) = std::min(x(i) + h, d.upper(i));
    lo(i) = std::max(x(i) - h, d.lower(i));
    grad(i) = (fn(hi) - fn(lo)) / (hi(i) - lo(i));
  }
  return grad;
}

}  // namespace

WitnessReport find_perturbation_witness(const ResponseFn& response, const HyperPoint& lambda,
                                        const HyperPoint& lambda_plus, const GrowthFunction& zeta,
                                        const HyperparameterDomain& d) {
  WitnessReport report;
  report.bounds = perturbation_bounds(lambda, lambda_plus, zeta);

  const auto G = [&](const Eigen::VectorXd& gamma) {
    return response(gamma) + zeta.value((gamma - lambda.values).norm());
  };

  Eigen::VectorXd x = lambda_plus.values;
  double Gx = G(x);
  double step = 1.0;
  const int max_iters = 500;
  bool stabilized = false;
  int it = 0;
  for (; it < max_iters; ++it) {
    // grad G = grad J + 2c (x - lambda); the quadratic term is analytic.
    Eigen::VectorXd grad = box_fd_gradient(response, x, d) +
                           2.0 * zeta.coefficient * (x - lambda.values);
    Eigen::VectorXd cand = project_hyperparameter(x - step * grad, d).values;
    const double Gc = G(cand);
    if (Gc <= Gx - 1e-14 * (1.0 + std::abs(Gx))) {
      const double moved = (cand - x).norm();
      x = cand;
      Gx = Gc;
      step *= 1.3;
      if (moved <= 1e-10 * (1.0 + x.norm())) {
        stabilized = true;
        break;
      }
    } else {
      step *= 0.5;
      if (step < 1e-13) {
        stabilized = true;  // no descent direction at this resolution
        break;
      }
    }
  }

  report.lambda_hat = x;
  report.objective_at_hat = response(x);
  report.converged = stabilized;
  report.iterations = it;
  const double dist = (lambda_plus.values - x).norm();
  report.point_residual = report.bounds.point + 1e-8 - dist;
  report.value_residual =
      response(lambda_plus.values) + report.bounds.value + 1e-8 - report.objective_at_hat;
  report.satisfied = report.point_residual >= 0.0 && report.value_residual >= 0.0;
  return report;
}

EkelandCertificate ekeland_certificate(const ResponseFn& response, const HyperPoint& base,
                                       double epsilon, double inf_estimate,
                                       const std::vector<Eigen::VectorXd>& candidates) {
  if (!(std::isfinite(epsilon) && epsilon > 0.0)) {
    throw ValidationError("certificate tolerance epsilon must be positive");
  }
  const double radius = std::sqrt(epsilon);

  EkelandCertificate cert;
  cert.epsilon = epsilon;
  cert.base = base.values;
  cert.base_value = response(base.values);
  cert.inf_estimate = inf_estimate;
  cert.base_gap = cert.base_value - inf_estimate;
  cert.premise_holds = cert.base_gap <= epsilon;
  cert.candidates_checked = static_cast<int>(candidates.size());
  cert.note =
      "inf_estimate is a finite-sample estimate (grid/trace minimum), not the true "
      "infimum; the certificate is relative to it";

  // Witness selection: best candidate within sqrt(eps) of the base whose
  // value does not exceed the base value. Ties prefer the candidate, so a
  // near-duplicate of the base becomes the witness rather than a strict
  // comparison target. The base itself is always feasible (distance 0).
  Eigen::VectorXd witness = base.values;
  double witness_value = cert.base_value;
  std::vector<double> values(candidates.size());
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    values[k] = response(candidates[k]);
    const double dist = (candidates[k] - base.values).norm();
    if (dist <= radius && values[k] <= cert.base_value && values[k] <= witness_value) {
      witness = candidates[k];
      witness_value = values[k];
    }
  }
  cert.witness = witness;
  cert.witness_value = witness_value;
  cert.distance = (witness - base.values).norm();
  cert.value_residual = cert.base_value - witness_value;
  cert.distance_residual = radius - cert.distance;

  // Strict perturbation inequality J(z) < J(c) + sqrt(eps) d(z, c) over the
  // supplied candidates distinct from the witness.
  double strict = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const double dist = (candidates[k] - witness).norm();
    if (dist == 0.0) continue;
    strict = std::min(strict, values[k] + radius * dist - witness_value);
  }
  cert.strict_residual = strict;
  cert.strict_holds = !(strict <= 0.0);
  cert.valid = cert.premise_holds && cert.value_residual >= 0.0 && cert.distance_residual >= 0.0;
  return cert;
}

}  // namespace hpo
