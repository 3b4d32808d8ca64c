#ifndef HPO_SERIALIZE_HPP
#define HPO_SERIALIZE_HPP

#include <filesystem>
#include <string>

#include <json.hpp>

#include "hpo/diagnostics.hpp"
#include "hpo/ekeland.hpp"
#include "hpo/outer.hpp"

namespace hpo {

/// Shortest round-trip decimal form of a double (deterministic).
std::string format_double(double v);

nlohmann::json to_json(const Eigen::VectorXd& v);
nlohmann::json to_json(const HypergradientEstimate& est);
nlohmann::json to_json(const PerturbationBounds& b);
nlohmann::json to_json(const WitnessReport& report);
nlohmann::json to_json(const EkelandCertificate& cert);
nlohmann::json to_json(const PerturbationDiagnostics& diag);
nlohmann::json to_json(const ProbeReport& report);

/// trace.csv: one row per iterate with columns
/// iter, lambda_0..lambda_{p-1}, J, h_0..h_{p-1}, step_norm
/// (step_norm is empty on the final row).
std::string trace_to_csv(const OuterTrace& trace);

/// Write-to-temp-then-rename so partial files never appear.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace hpo

#endif
