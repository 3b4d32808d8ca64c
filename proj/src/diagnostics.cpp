#include "hpo/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hpo/errors.hpp"
#include "hpo/sampling.hpp"

namespace hpo {

const char* to_string(ProbeKind k) {
  switch (k) {
    case ProbeKind::convexity: return "convexity";
    case ProbeKind::coercivity: return "coercivity";
    case ProbeKind::inner_boundedness: return "inner-boundedness";
    case ProbeKind::singleton_argmin: return "singleton-argmin";
  }
  return "?";
}

const char* to_string(Verdict v) { return v == Verdict::consistent ? "consistent" : "violated"; }

namespace {

constexpr const char* kConsistentNote =
    "no violation found at the sampled resolution (falsification probe, not a proof)";

double eval_at(const ResponseFn& fn, const Eigen::VectorXd& x, const char* probe) {
  try {
    return fn(x);
  } catch (const std::exception& e) {
    std::ostringstream msg;
    msg << probe << " probe: evaluator failed at sample [";
    for (Eigen::Index i = 0; i < x.size(); ++i) msg << (i ? ", " : "") << x(i);
    msg << "]: " << e.what();
    throw NumericalError(msg.str());
  }
}

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

ProbeReport probe_convexity(const ResponseFn& response, const HyperparameterDomain& d,
                            int n_pairs, int n_interp) {
  if (n_pairs < 1 || n_interp < 1) throw ValidationError("convexity probe needs >= 1 sample");
  const int p = static_cast<int>(d.dim());

  ProbeReport report;
  report.probe = ProbeKind::convexity;
  report.samples = n_pairs * n_interp;
  report.margin = std::numeric_limits<double>::infinity();

  for (int k = 1; k <= n_pairs; ++k) {
    // One 2p-dimensional low-discrepancy point yields a pair.
    const Eigen::VectorXd u = halton_point(static_cast<unsigned long long>(k), 2 * p);
    Eigen::VectorXd a(p), b(p);
    for (int i = 0; i < p; ++i) {
      a(i) = d.lower(i) + u(i) * (d.upper(i) - d.lower(i));
      b(i) = d.lower(i) + u(p + i) * (d.upper(i) - d.lower(i));
    }
    const double Ja = eval_at(response, a, "convexity");
    const double Jb = eval_at(response, b, "convexity");
    const double tol = 1e-8 * (1.0 + std::abs(Ja) + std::abs(Jb));
    for (int j = 1; j <= n_interp; ++j) {
      const double weight = static_cast<double>(j) / (n_interp + 1);
      const Eigen::VectorXd mid = weight * a + (1.0 - weight) * b;
      const double interpolated = eval_at(response, mid, "convexity");
      const double chord = weight * Ja + (1.0 - weight) * Jb;
      const double slack = chord + tol - interpolated;
      if (slack < report.margin) {
        report.margin = slack;
        if (slack < 0.0) {
          report.witness = ConvexityWitness{a, b, weight, interpolated, chord, tol};
        }
      }
    }
  }
  report.verdict = report.margin < 0.0 ? Verdict::violated : Verdict::consistent;
  report.note = report.verdict == Verdict::consistent
                    ? kConsistentNote
                    : "midpoint lies above the chord beyond tolerance";
  return report;
}

ProbeReport probe_coercivity(const ResponseFn& response, const HyperparameterDomain& d,
                             const std::vector<double>& radii) {
  if (radii.size() < 2) throw ValidationError("coercivity probe needs >= 2 radii");
  for (std::size_t j = 0; j < radii.size(); ++j) {
    if (!(radii[j] > 0.0) || (j > 0 && !(radii[j] > radii[j - 1]))) {
      throw ValidationError("coercivity radii must be positive and increasing");
    }
  }
  const Eigen::Index p = d.dim();

  // Coordinate rays plus the box diagonal (identical for p = 1).
  std::vector<Eigen::VectorXd> directions;
  for (Eigen::Index i = 0; p > 1 && i < p; ++i) {
    directions.push_back(Eigen::VectorXd::Unit(p, i));
  }
  directions.push_back(Eigen::VectorXd::Constant(p, 1.0 / std::sqrt(static_cast<double>(p))));

  std::vector<double> shell_min(radii.size());
  for (std::size_t j = 0; j < radii.size(); ++j) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& dir : directions) {
      m = std::min(m, eval_at(response, radii[j] * dir, "coercivity"));
    }
    shell_min[j] = m;
  }

  ProbeReport report;
  report.probe = ProbeKind::coercivity;
  report.samples = static_cast<int>(radii.size() * directions.size());
  report.margin = std::numeric_limits<double>::infinity();

  // Shell minima must not decrease beyond the first radius ...
  for (std::size_t j = 2; j < radii.size(); ++j) {
    const double slack = shell_min[j] - shell_min[j - 1];
    if (slack < report.margin) report.margin = slack;
    if (slack < 0.0 && !report.witness) {
      report.witness =
          CoercivityWitness{radii[j - 1], radii[j], shell_min[j - 1], shell_min[j], false};
    }
  }
  // ... and must keep growing at the tail: a saturating sequence signals a
  // bounded response, which cannot be coercive.
  const std::size_t last = radii.size() - 1;
  const double tail = shell_min[last] - shell_min[last - 1];
  const double saturation_tol = 1e-6 * (1.0 + std::abs(shell_min[last]));
  if (tail <= saturation_tol && !report.witness) {
    report.witness =
        CoercivityWitness{radii[last - 1], radii[last], shell_min[last - 1], shell_min[last], true};
    report.margin = std::min(report.margin, tail - saturation_tol);
  }

  report.verdict = report.witness ? Verdict::violated : Verdict::consistent;
  report.note = report.verdict == Verdict::consistent
                    ? kConsistentNote
                    : "shell minima stop growing along the sampled rays";
  return report;
}

ProbeReport probe_inner_boundedness(const InnerSolveFn& solve,
                                    const std::vector<Eigen::VectorXd>& grid) {
  if (grid.empty()) throw ValidationError("boundedness probe needs a nonempty grid");

  ProbeReport report;
  report.probe = ProbeKind::inner_boundedness;
  report.samples = static_cast<int>(grid.size());

  std::vector<double> norms;
  norms.reserve(grid.size());
  double worst_norm = -1.0;
  Eigen::VectorXd worst_lambda;
  for (const auto& lambda : grid) {
    const auto w = solve(lambda);
    if (!w) {
      report.verdict = Verdict::violated;
      report.witness = BoundednessWitness{lambda, 0.0, true};
      report.margin = -std::numeric_limits<double>::infinity();
      report.note = "inner solve failed on the grid";
      return report;
    }
    norms.push_back(w->norm());
    if (norms.back() > worst_norm) {
      worst_norm = norms.back();
      worst_lambda = lambda;
    }
  }

  const double med = median_of(norms);
  report.margin = 10.0 * med - worst_norm;
  if (report.margin < 0.0) {
    report.verdict = Verdict::violated;
    report.witness = BoundednessWitness{worst_lambda, worst_norm, false};
    report.note = "minimizer norm spread exceeds 10x the median across the grid";
  } else {
    report.verdict = Verdict::consistent;
    report.note = kConsistentNote;
  }
  return report;
}

ProbeReport probe_inner_boundedness(const BilevelProblem& p,
                                    const std::vector<Eigen::VectorXd>& grid,
                                    const InnerConfig& cfg) {
  const InnerSolveFn solve = [&p, &cfg](const Eigen::VectorXd& lambda)
      -> std::optional<Eigen::VectorXd> {
    try {
      return solve_inner(p, HyperPoint{lambda}, cfg).final_iterate();
    } catch (const DivergenceError&) {
      return std::nullopt;
    }
  };
  return probe_inner_boundedness(solve, grid);
}

std::vector<Eigen::VectorXd> default_probe_inits(Eigen::Index dim, int n_inits) {
  std::vector<Eigen::VectorXd> inits;
  inits.reserve(n_inits);
  for (int k = 0; k < n_inits; ++k) {
    Eigen::VectorXd w0(dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
      w0(j) = (1.0 + k) * std::sin(0.5 * static_cast<double>(j) + k);
    }
    inits.push_back(w0);
  }
  return inits;
}

ProbeReport probe_singleton_argmin(const BilevelProblem& p,
                                   const std::vector<Eigen::VectorXd>& grid,
                                   const InnerConfig& cfg, int n_inits) {
  if (n_inits < 2) throw ValidationError("singleton probe needs >= 2 initializations");
  return probe_singleton_argmin(p, grid, cfg, default_probe_inits(p.param_dim(), n_inits));
}

ProbeReport probe_singleton_argmin(const BilevelProblem& p,
                                   const std::vector<Eigen::VectorXd>& grid,
                                   const InnerConfig& cfg,
                                   const std::vector<Eigen::VectorXd>& inits) {
  if (grid.empty()) throw ValidationError("singleton probe needs a nonempty grid");
  if (inits.size() < 2) throw ValidationError("singleton probe needs >= 2 initializations");

  ProbeReport report;
  report.probe = ProbeKind::singleton_argmin;
  report.samples = static_cast<int>(grid.size() * inits.size());
  report.margin = std::numeric_limits<double>::infinity();

  bool degenerate = false;
  for (std::size_t a = 0; a + 1 < inits.size() && !degenerate; ++a) {
    for (std::size_t b = a + 1; b < inits.size(); ++b) {
      if ((inits[a] - inits[b]).norm() == 0.0) {
        degenerate = true;
        break;
      }
    }
  }

  for (const auto& lambda : grid) {
    std::vector<Eigen::VectorXd> finals;
    finals.reserve(inits.size());
    double max_norm = 0.0;
    for (std::size_t k = 0; k < inits.size(); ++k) {
      InnerConfig run = cfg;
      run.init = inits[k];
      try {
        finals.push_back(solve_inner(p, HyperPoint{lambda}, run).final_iterate());
      } catch (const DivergenceError&) {
        report.verdict = Verdict::violated;
        report.witness = SingletonWitness{lambda, static_cast<int>(k), static_cast<int>(k),
                                          0.0, 0.0, true};
        report.margin = -std::numeric_limits<double>::infinity();
        report.note = "inner solve diverged on the grid";
        return report;
      }
      max_norm = std::max(max_norm, finals.back().norm());
    }
    const double tol = 1e-6 * (1.0 + max_norm);
    for (std::size_t a = 0; a + 1 < finals.size(); ++a) {
      for (std::size_t b = a + 1; b < finals.size(); ++b) {
        const double dist = (finals[a] - finals[b]).norm();
        const double slack = tol - dist;
        if (slack < report.margin) {
          report.margin = slack;
          if (slack < 0.0) {
            report.witness = SingletonWitness{lambda, static_cast<int>(a), static_cast<int>(b),
                                              dist, tol, false};
          }
        }
      }
    }
  }

  report.verdict = report.margin < 0.0 ? Verdict::violated : Verdict::consistent;
  report.note = report.verdict == Verdict::consistent
                    ? (degenerate ? std::string(kConsistentNote) +
                                        "; degenerate input: duplicate initializations supplied"
                                  : kConsistentNote)
                    : "distinct initializations reached distinct limits";
  return report;
}

}  // namespace hpo
