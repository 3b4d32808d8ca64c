#include "hpo/outer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hpo/errors.hpp"
#include "hpo/sampling.hpp"

namespace hpo {

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::step_norm: return "step-norm";
    case StopReason::max_iters: return "max-iters";
    case StopReason::divergence: return "divergence";
  }
  return "?";
}

const char* to_string(ModelBranch b) {
  switch (b) {
    case ModelBranch::distinct: return "distinct";
    case ModelBranch::stationary: return "stationary";
    case ModelBranch::constrained_stationary: return "constrained-stationary";
  }
  return "?";
}

HyperPoint outer_step(const HyperPoint& lambda, const HypergradientEstimate& h, double alpha,
                      const HyperparameterDomain& d) {
  if (!(std::isfinite(alpha) && alpha > 0.0)) {
    throw ValidationError("outer step size must be positive and finite");
  }
  if (!h.value.allFinite()) throw ValidationError("non-finite hypergradient in outer step");
  return project_hyperparameter(lambda.values - alpha * h.value, d);
}

bool stopping(const HyperPoint& current, const HyperPoint& previous, double epsilon) {
  return (current.values - previous.values).norm() <= epsilon;
}

std::vector<bool> sufficient_decrease_check(const OuterTrace& trace, double c) {
  if (!(std::isfinite(c) && c >= 0.0)) {
    throw ValidationError("sufficient-decrease constant must be nonnegative");
  }
  if (trace.values.size() < 2) {
    throw ValidationError("sufficient-decrease check needs at least two recorded values");
  }
  std::vector<bool> out(trace.step_norms.size());
  for (std::size_t t = 0; t < trace.step_norms.size(); ++t) {
    out[t] = trace.values[t] - trace.values[t + 1] >= c * trace.step_norms[t] * trace.step_norms[t];
  }
  return out;
}

double estimate_response_smoothness(const ResponseFn& response, const HyperparameterDomain& d,
                                    int samples) {
  if (samples < 1) throw ValidationError("smoothness estimation needs >= 1 sample");
  const Eigen::Index p = d.dim();

  // Keep the central second differences inside the box.
  Eigen::VectorXd margin(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    margin(i) = std::min(1e-4 * std::max(1.0, std::abs(d.upper(i))),
                         0.25 * (d.upper(i) - d.lower(i)));
  }
  const Eigen::VectorXd lo = d.lower + margin;
  const Eigen::VectorXd hi = d.upper - margin;

  double worst = 0.0;
  for (int k = 1; k <= samples; ++k) {
    const Eigen::VectorXd x = halton_in_box(static_cast<unsigned long long>(k), lo, hi);
    Eigen::MatrixXd H(p, p);
    const double fx = response(x);
    for (Eigen::Index i = 0; i < p; ++i) {
      Eigen::VectorXd xp = x, xm = x;
      xp(i) += margin(i);
      xm(i) -= margin(i);
      H(i, i) = (response(xp) - 2.0 * fx + response(xm)) / (margin(i) * margin(i));
      for (Eigen::Index j = i + 1; j < p; ++j) {
        Eigen::VectorXd xpp = x, xpm = x, xmp = x, xmm = x;
        xpp(i) += margin(i); xpp(j) += margin(j);
        xpm(i) += margin(i); xpm(j) -= margin(j);
        xmp(i) -= margin(i); xmp(j) += margin(j);
        xmm(i) -= margin(i); xmm(j) -= margin(j);
        H(i, j) = (response(xpp) - response(xpm) - response(xmp) + response(xmm)) /
                  (4.0 * margin(i) * margin(j));
        H(j, i) = H(i, j);
      }
    }
    // Infinity norm upper-bounds the spectral norm of the symmetric Hessian.
    worst = std::max(worst, H.cwiseAbs().rowwise().sum().maxCoeff());
  }
  return worst;
}

namespace {

double default_alpha(const HyperparameterDomain& d, const HypergradientEstimate& h0) {
  const double range = (d.upper - d.lower).minCoeff();
  return 0.05 * range / (1.0 + h0.value.norm());
}

void validate_outer_config(const BilevelProblem& p, const OuterConfig& cfg) {
  if (!(std::isfinite(cfg.epsilon) && cfg.epsilon > 0.0)) {
    throw ValidationError("outer stopping tolerance epsilon must be positive");
  }
  if (cfg.max_iters < 1) throw ValidationError("outer iteration budget must be >= 1");
  if (cfg.alpha && !(std::isfinite(*cfg.alpha) && *cfg.alpha > 0.0)) {
    throw ValidationError("outer step size alpha must be positive");
  }
  if (!(std::isfinite(cfg.sufficient_decrease_c) && cfg.sufficient_decrease_c >= 0.0)) {
    throw ValidationError("sufficient-decrease constant must be nonnegative");
  }
  if (cfg.start) {
    if (cfg.start->size() != p.hyper_dim() || !p.domain.contains(*cfg.start)) {
      throw ValidationError("outer start point must lie in the hyperparameter domain");
    }
  }
}

}  // namespace

OuterTrace run_hpo(const BilevelProblem& p, const OuterConfig& cfg,
                   const std::optional<GridInjection>& injection) {
  validate_outer_config(p, cfg);

  OuterTrace trace;
  const HyperPoint lambda0{cfg.start ? *cfg.start : p.domain.midpoint()};
  trace.iterates.push_back(lambda0.values);
  trace.values.push_back(response_value(p, lambda0, cfg.inner));
  trace.hypergrads.push_back(compute_hypergradient(p, lambda0, cfg.method, cfg.inner));

  const double alpha = cfg.alpha ? *cfg.alpha : default_alpha(p.domain, trace.hypergrads.front());
  trace.alpha = alpha;

  const auto take_step = [&](const HyperPoint& lam, const HypergradientEstimate& h,
                             double value_at) {
    double a = alpha;
    HyperPoint next = outer_step(lam, h, a, p.domain);
    if (cfg.backtracking) {
      for (int k = 0; k < 30; ++k) {
        const double decrease = value_at - response_value(p, next, cfg.inner);
        const double need =
            cfg.sufficient_decrease_c * (next.values - lam.values).squaredNorm();
        if (decrease >= need) break;
        a *= 0.5;
        next = outer_step(lam, h, a, p.domain);
      }
    }
    return next;
  };

  trace.stop_reason = StopReason::max_iters;
  while (true) {
    const HyperPoint current{trace.iterates.back()};
    const HyperPoint next = take_step(current, trace.hypergrads.back(), trace.values.back());
    trace.step_norms.push_back((next.values - current.values).norm());
    trace.iterates.push_back(next.values);
    trace.values.push_back(response_value(p, next, cfg.inner));

    if (trace.values.back() > 10.0 * trace.values.front()) {
      trace.stop_reason = StopReason::divergence;
      break;
    }
    if (stopping(next, current, cfg.epsilon)) {
      trace.stop_reason = StopReason::step_norm;
      break;
    }
    if (static_cast<int>(trace.step_norms.size()) >= cfg.max_iters) {
      trace.stop_reason = StopReason::max_iters;
      break;
    }
    trace.hypergrads.push_back(compute_hypergradient(p, next, cfg.method, cfg.inner));
  }

  // Hypergradient at the final iterate, informational and reused by the
  // model diagnostics; a failure here must not lose the trace.
  try {
    trace.hypergrads.push_back(
        compute_hypergradient(p, HyperPoint{trace.iterates.back()}, cfg.method, cfg.inner));
  } catch (const std::exception&) {
    HypergradientEstimate nan;
    nan.value = Eigen::VectorXd::Constant(p.hyper_dim(), std::numeric_limits<double>::quiet_NaN());
    nan.method = cfg.method;
    trace.hypergrads.push_back(nan);
  }

  if (trace.stop_reason == StopReason::step_norm) {
    const ResponseFn response = make_response_evaluator(p, cfg.inner);
    const HyperPoint final_point{trace.iterates.back()};

    double inf_estimate;
    std::vector<Eigen::VectorXd> candidates;
    if (injection) {
      inf_estimate = injection->inf_estimate;
      candidates = injection->candidates;
    } else {
      inf_estimate = *std::min_element(trace.values.begin(), trace.values.end());
      candidates = trace.iterates;
    }
    trace.certificate =
        ekeland_certificate(response, final_point, cfg.epsilon, inf_estimate, candidates);

    const HypergradientEstimate& hf = trace.hypergrads.back();
    if (hf.value.allFinite()) {
      PerturbationDiagnostics diag;
      diag.smoothness_estimate = std::max(estimate_response_smoothness(response, p.domain), 1e-12);
      diag.model_gradient = hf.value;
      const GrowthFunction zeta = growth_from_smoothness(diag.smoothness_estimate);
      const ModelFunction model = model_function(response, final_point, hf);
      const HyperPoint lambda_plus = minimize_model(model, p.domain);
      diag.lambda_plus = lambda_plus.values;
      if ((lambda_plus.values.array() == final_point.values.array()).all()) {
        diag.branch = hf.value.norm() == 0.0 ? ModelBranch::stationary
                                             : ModelBranch::constrained_stationary;
      } else {
        diag.branch = ModelBranch::distinct;
        diag.witness = find_perturbation_witness(response, final_point, lambda_plus, zeta, p.domain);
        diag.bounds = diag.witness->bounds;
      }
      trace.perturbation = diag;
    }
  }
  return trace;
}

}  // namespace hpo
