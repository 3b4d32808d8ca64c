#include "hpo/serialize.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hpo/errors.hpp"

namespace hpo {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

nlohmann::json to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

nlohmann::json to_json(const HypergradientEstimate& est) {
  return {{"value", to_json(est.value)},
          {"method", to_string(est.method)},
          {"inner_steps_used", est.inner_steps_used},
          {"evaluations", est.evaluations}};
}

nlohmann::json to_json(const PerturbationBounds& b) {
  return {{"distance", b.distance}, {"point", b.point}, {"value", b.value}};
}

nlohmann::json to_json(const WitnessReport& report) {
  return {{"lambda_hat", to_json(report.lambda_hat)},
          {"objective_at_hat", report.objective_at_hat},
          {"point_residual", report.point_residual},
          {"value_residual", report.value_residual},
          {"satisfied", report.satisfied},
          {"converged", report.converged},
          {"iterations", report.iterations},
          {"bounds", to_json(report.bounds)}};
}

nlohmann::json to_json(const EkelandCertificate& cert) {
  return {{"epsilon", cert.epsilon},
          {"base", to_json(cert.base)},
          {"base_value", cert.base_value},
          {"inf_estimate", cert.inf_estimate},
          {"base_gap", cert.base_gap},
          {"witness", to_json(cert.witness)},
          {"witness_value", cert.witness_value},
          {"distance", cert.distance},
          {"value_residual", cert.value_residual},
          {"distance_residual", cert.distance_residual},
          {"strict_residual", cert.strict_residual},
          {"candidates_checked", cert.candidates_checked},
          {"premise_holds", cert.premise_holds},
          {"strict_holds", cert.strict_holds},
          {"valid", cert.valid},
          {"note", cert.note}};
}

nlohmann::json to_json(const PerturbationDiagnostics& diag) {
  nlohmann::json out = {{"branch", to_string(diag.branch)},
                        {"smoothness_estimate", diag.smoothness_estimate},
                        {"model_gradient", to_json(diag.model_gradient)},
                        {"lambda_plus", to_json(diag.lambda_plus)}};
  out["bounds"] = diag.bounds ? to_json(*diag.bounds) : nlohmann::json(nullptr);
  out["witness"] = diag.witness ? to_json(*diag.witness) : nlohmann::json(nullptr);
  return out;
}

namespace {

nlohmann::json witness_to_json(const ProbeWitness& witness) {
  if (const auto* w = std::get_if<ConvexityWitness>(&witness)) {
    return {{"kind", "convexity"},
            {"point_a", to_json(w->point_a)},
            {"point_b", to_json(w->point_b)},
            {"weight", w->weight},
            {"interpolated", w->interpolated},
            {"chord", w->chord},
            {"tolerance", w->tolerance}};
  }
  if (const auto* w = std::get_if<CoercivityWitness>(&witness)) {
    return {{"kind", "coercivity"},
            {"radius_prev", w->radius_prev},
            {"radius", w->radius},
            {"min_prev", w->min_prev},
            {"min_at", w->min_at},
            {"saturated", w->saturated}};
  }
  if (const auto* w = std::get_if<BoundednessWitness>(&witness)) {
    return {{"kind", "inner-boundedness"},
            {"lambda", to_json(w->lambda)},
            {"norm", w->norm},
            {"solver_failed", w->solver_failed}};
  }
  const auto& w = std::get<SingletonWitness>(witness);
  return {{"kind", "singleton-argmin"},
          {"lambda", to_json(w.lambda)},
          {"init_a", w.init_a},
          {"init_b", w.init_b},
          {"distance", w.distance},
          {"tolerance", w.tolerance},
          {"solver_failed", w.solver_failed}};
}

}  // namespace

nlohmann::json to_json(const ProbeReport& report) {
  nlohmann::json out = {{"probe", to_string(report.probe)},
                        {"verdict", to_string(report.verdict)},
                        {"samples", report.samples},
                        {"margin", report.margin},
                        {"note", report.note}};
  out["witness"] = report.witness ? witness_to_json(*report.witness) : nlohmann::json(nullptr);
  return out;
}

std::string trace_to_csv(const OuterTrace& trace) {
  const Eigen::Index p = trace.iterates.empty() ? 0 : trace.iterates.front().size();
  std::ostringstream out;
  out << "iter";
  for (Eigen::Index i = 0; i < p; ++i) out << ",lambda_" << i;
  out << ",J";
  for (Eigen::Index i = 0; i < p; ++i) out << ",h_" << i;
  out << ",step_norm\n";
  for (std::size_t t = 0; t < trace.iterates.size(); ++t) {
    out << t;
    for (Eigen::Index i = 0; i < p; ++i) out << ',' << format_double(trace.iterates[t](i));
    out << ',' << format_double(trace.values[t]);
    for (Eigen::Index i = 0; i < p; ++i) {
      out << ',';
      if (t < trace.hypergrads.size()) out << format_double(trace.hypergrads[t].value(i));
    }
    out << ',';
    if (t < trace.step_norms.size()) out << format_double(trace.step_norms[t]);
    out << '\n';
  }
  return out.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream stream(tmp, std::ios::binary | std::ios::trunc);
    if (!stream) throw NumericalError("cannot open " + tmp.string() + " for writing");
    stream << content;
    if (!stream.good()) throw NumericalError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace hpo
