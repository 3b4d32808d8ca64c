#ifndef HPO_EKELAND_HPP
#define HPO_EKELAND_HPP

#include <string>
#include <vector>

#include "hpo/hypergrad.hpp"
#include "hpo/problem.hpp"

namespace hpo {

/// Quadratic growth function zeta(t) = c t^2. Proper by construction:
/// zeta(0) = zeta'(0) = 0, zeta' > 0 on t > 0 and zeta/zeta' = t/2 -> 0.
struct GrowthFunction {
  double coefficient = 0.0;  // c

  double value(double t) const { return coefficient * t * t; }
  double derivative(double t) const { return 2.0 * coefficient * t; }
};

/// Growth function realizing the first-order Taylor remainder of an
/// L-smooth objective: zeta(t) = (L/2) t^2.
GrowthFunction growth_from_smoothness(double L);

/// First-order model of the response at a base point:
/// J_lambda(gamma) = J(lambda) + g . (gamma - lambda).
struct ModelFunction {
  Eigen::VectorXd base;
  double value_at_base = 0.0;
  Eigen::VectorXd gradient;

  double operator()(const Eigen::VectorXd& gamma) const {
    return value_at_base + gradient.dot(gamma - base);
  }
};

ModelFunction model_function(const ResponseFn& response, const HyperPoint& lambda,
                             const HypergradientEstimate& g);

/// Exact minimizer of the affine model over the box: per coordinate the
/// lower bound for a positive slope, the upper bound for a negative one,
/// the base value for a zero slope.
HyperPoint minimize_model(const ModelFunction& m, const HyperparameterDomain& d);

struct PerturbationBounds {
  double distance = 0.0;  // d = ||lambda_plus - lambda||
  double point = 0.0;     // 2 zeta(d) / zeta'(d); equals d for quadratic zeta
  double value = 0.0;     // zeta(d)
};

/// Bounds of the perturbation theorem for the distinct branch
/// (lambda != lambda_plus); throws for coincident points, whose branch
/// asserts |grad J(lambda)| = 0 instead.
PerturbationBounds perturbation_bounds(const HyperPoint& lambda, const HyperPoint& lambda_plus,
                                       const GrowthFunction& zeta);

struct WitnessReport {
  Eigen::VectorXd lambda_hat;
  double objective_at_hat = 0.0;
  double point_residual = 0.0;  // bounds.point + 1e-8 - ||lambda_plus - lambda_hat||
  double value_residual = 0.0;  // J(lambda_plus) + bounds.value + 1e-8 - J(lambda_hat)
  bool satisfied = false;
  bool converged = false;  // search stabilized before the iteration cap
  int iterations = 0;
  PerturbationBounds bounds;
};

/// Searches for the point promised by the perturbation theorem by locally
/// minimizing G(gamma) = J(gamma) + zeta(||gamma - lambda||) over the box,
/// starting from lambda_plus (projected gradient descent, finite-difference
/// gradients of J). Non-convergence is reported, not fatal: the theorem
/// guarantees existence, not findability by this heuristic.
WitnessReport find_perturbation_witness(const ResponseFn& response, const HyperPoint& lambda,
                                        const HyperPoint& lambda_plus, const GrowthFunction& zeta,
                                        const HyperparameterDomain& d);

struct EkelandCertificate {
  double epsilon = 0.0;
  Eigen::VectorXd base;    // lambda tilde
  double base_value = 0.0; // J(lambda tilde)
  double inf_estimate = 0.0;
  double base_gap = 0.0;   // J(lambda tilde) - inf_estimate
  Eigen::VectorXd witness; // z tilde
  double witness_value = 0.0;
  double distance = 0.0;   // d(z tilde, lambda tilde)
  // Slack of the three conclusion inequalities.
  double value_residual = 0.0;     // J(lambda tilde) - J(z tilde)
  double distance_residual = 0.0;  // sqrt(eps) - distance
  double strict_residual = 0.0;    // min over candidates != z of J(c) + sqrt(eps) d(z, c) - J(z)
  int candidates_checked = 0;
  bool premise_holds = false;  // base_gap <= epsilon
  bool strict_holds = false;
  bool valid = false;  // premise and both witness inequalities
  std::string note;
};

/// Checks the sqrt(eps)-specialization of the variational principle at a
/// base point, relative to a supplied infimum estimate, selecting the
/// witness from an explicit candidate set (the base point itself is always
/// a feasible fallback witness).
EkelandCertificate ekeland_certificate(const ResponseFn& response, const HyperPoint& base,
                                       double epsilon, double inf_estimate,
                                       const std::vector<Eigen::VectorXd>& candidates);

}  // namespace hpo

#endif
