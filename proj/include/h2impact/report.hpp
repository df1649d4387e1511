#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "h2impact/bounds.hpp"
#include "h2impact/h2.hpp"
#include "h2impact/lmi.hpp"
#include "h2impact/search.hpp"

namespace h2impact {

// FNV-1a 64-bit hash; used to fingerprint the canonicalized config document.
std::uint64_t fnv1a64(const std::string& data);

// Lossless shortest-exact decimal formatting ("%.17g").
std::string format_double(double v);

// JSON building blocks. Non-finite values are encoded as the strings
// "inf" / "-inf" / "nan" so documents stay valid JSON.
nlohmann::json json_number(double v);
nlohmann::json to_json(const Eigen::MatrixXd& M);
nlohmann::json to_json(const ImpactReport& rep);
nlohmann::json to_json(const TrajectoryPoint& pt);
nlohmann::json to_json(const MonteCarloResult& mc);
nlohmann::json to_json(const SweepGrid& grid);
nlohmann::json to_json(const SearchResult& res);
nlohmann::json to_json(const H2Certificate& cert);
nlohmann::json to_json(const CertificateVerification& ver);
nlohmann::json to_json(const AlphaCertificate& cert);
nlohmann::json to_json(const RatioBisectionResult& res);
nlohmann::json to_json(const PerturbationBoundReport& rep);
nlohmann::json to_json(const SemigroupBoundReport& rep);
nlohmann::json to_json(const StealthDiagnostic& diag);

// Envelope written by every CLI command:
// {command, config_digest, results, tool: {name, version}, wall_time_s}.
nlohmann::json make_report(const std::string& command,
                           const std::string& config_digest,
                           nlohmann::json results, double wall_time_s);

// Gridded surfaces as CSV with the fixed header
// R11,R22,stable,ratio,h2_perf_sq,h2_resid_sq (unstable cells leave the
// numeric fields empty).
std::string sweep_to_csv(const SweepGrid& grid);
SweepGrid sweep_from_csv(const std::string& csv);

std::string trajectory_to_csv(const std::vector<TrajectoryPoint>& traj);

}  // namespace h2impact
