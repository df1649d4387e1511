#include "h2impact/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <sstream>

#include "h2impact/version.hpp"

namespace h2impact {

using nlohmann::json;

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json json_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

json to_json(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(json_number(M(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const ImpactReport& rep) {
  return json{{"h2_performance_sq", json_number(rep.h2_performance_sq)},
              {"h2_residual_sq", json_number(rep.h2_residual_sq)},
              {"ratio", json_number(rep.ratio)},
              {"spectral_abscissa", json_number(rep.spectral_abscissa)},
              {"R", to_json(rep.R)}};
}

json to_json(const TrajectoryPoint& pt) {
  return json{{"T", json_number(pt.T)},
              {"ratio", json_number(pt.ratio)},
              {"h2_performance_sq", json_number(pt.h2_performance_sq)},
              {"h2_residual_sq", json_number(pt.h2_residual_sq)}};
}

json to_json(const MonteCarloResult& mc) {
  return json{{"performance_energy", json_number(mc.performance_energy)},
              {"residual_energy", json_number(mc.residual_energy)},
              {"performance_se", json_number(mc.performance_se)},
              {"residual_se", json_number(mc.residual_se)},
              {"num_paths", mc.trace.num_paths},
              {"noise_seed", mc.trace.noise_seed}};
}

json to_json(const SweepGrid& grid) {
  json cells = json::array();
  for (const auto& c : grid.cells) {
    json cell{{"R11", json_number(c.R11)},
              {"R22", json_number(c.R22)},
              {"stable", c.stable}};
    if (c.stable) {
      cell["ratio"] = json_number(c.ratio);
      cell["h2_perf_sq"] = json_number(c.h2_perf_sq);
      cell["h2_resid_sq"] = json_number(c.h2_resid_sq);
    }
    cells.push_back(std::move(cell));
  }
  json out{{"min", json_number(grid.min)},
           {"max", json_number(grid.max)},
           {"step", json_number(grid.step)},
           {"points_per_axis", grid.points_per_axis},
           {"cells", std::move(cells)}};
  if (grid.maximizer_index >= 0) {
    const auto& m = grid.cells[grid.maximizer_index];
    out["maximizer"] = json{{"R11", json_number(m.R11)},
                            {"R22", json_number(m.R22)},
                            {"ratio", json_number(m.ratio)}};
  }
  return out;
}

json to_json(const SearchResult& res) {
  json constraint;
  if (res.constraint.active) {
    constraint = json{{"epsilon_tr", json_number(res.constraint.epsilon_tr)}};
  } else {
    constraint = nullptr;
  }
  return json{
      {"best_R", to_json(res.best_R)},
      {"best_ratio", json_number(res.best_ratio)},
      {"performance_energy", json_number(res.performance_energy)},
      {"residual_energy", json_number(res.residual_energy)},
      {"spectral_abscissa", json_number(res.spectral_abscissa)},
      {"constraint", std::move(constraint)},
      {"nominal_residual_energy", json_number(res.nominal_residual_energy)},
      {"objective", res.objective == StealthyObjective::MaxRatio
                        ? "max_ratio"
                        : "max_performance"},
      {"evaluations", res.evaluations},
      {"restarts", res.restarts},
      {"converged", res.converged}};
}

namespace {

json checks_to_json(const std::vector<CertificateCheck>& checks) {
  json arr = json::array();
  for (const auto& c : checks) {
    arr.push_back(json{{"name", c.name},
                       {"margin", json_number(c.margin)},
                       {"pass", c.pass}});
  }
  return arr;
}

}  // namespace

json to_json(const H2Certificate& cert) {
  return json{{"X", to_json(cert.X)},
              {"Z", to_json(cert.Z)},
              {"gamma", json_number(cert.gamma)},
              {"epsilon", json_number(cert.epsilon)},
              {"channel", cert.channel == OutputChannel::Performance
                              ? "performance"
                              : "residual"},
              {"checks", checks_to_json(cert.checks)}};
}

json to_json(const CertificateVerification& ver) {
  return json{{"pass", ver.pass}, {"checks", checks_to_json(ver.checks)}};
}

json to_json(const AlphaCertificate& cert) {
  return json{{"alpha", json_number(cert.alpha)},
              {"trace_slack", json_number(cert.trace_slack)},
              {"feasible", cert.feasible}};
}

json to_json(const RatioBisectionResult& res) {
  return json{{"alpha_star", json_number(res.alpha_star)},
              {"iterations", res.iterations},
              {"bracket_lo", json_number(res.bracket_lo)},
              {"bracket_hi", json_number(res.bracket_hi)}};
}

json to_json(const PerturbationBoundReport& rep) {
  return json{{"kappa_P", json_number(rep.kappa_P)},
              {"H_norm", json_number(rep.H_norm)},
              {"delta_A_norm", json_number(rep.delta_A_norm)},
              {"delta_R", json_number(rep.delta_R)},
              {"admissible", rep.admissible},
              {"bound", json_number(rep.bound)},
              {"norm_E_R_F_sq", json_number(rep.norm_E_R_F_sq)},
              {"norm_Cr_F_sq", json_number(rep.norm_Cr_F_sq)},
              {"norm_Cp_F_sq", json_number(rep.norm_Cp_F_sq)}};
}

json to_json(const SemigroupBoundReport& rep) {
  return json{{"alpha_star", json_number(rep.alpha_star)},
              {"M_star", json_number(rep.M_star)},
              {"A_R_norm", json_number(rep.A_R_norm)},
              {"B_norm", json_number(rep.B_norm)},
              {"sigma_min_B", json_number(rep.sigma_min_B)},
              {"bound", json_number(rep.bound)},
              {"norm_E_R_F_sq", json_number(rep.norm_E_R_F_sq)},
              {"norm_Cr_F_sq", json_number(rep.norm_Cr_F_sq)},
              {"norm_Cp_F_sq", json_number(rep.norm_Cp_F_sq)}};
}

json to_json(const StealthDiagnostic& diag) {
  json modes = json::array();
  for (const auto& m : diag.modes) {
    modes.push_back(json{{"eigenvalue_re", json_number(m.eigenvalue.real())},
                         {"eigenvalue_im", json_number(m.eigenvalue.imag())},
                         {"residual_visibility", json_number(m.residual_visibility)},
                         {"performance_visibility",
                          json_number(m.performance_visibility)},
                         {"score", json_number(m.score)}});
  }
  return json{{"modes", std::move(modes)},
              {"stealth_score", json_number(diag.stealth_score)},
              {"eta", json_number(diag.eta)}};
}

json make_report(const std::string& command, const std::string& config_digest,
                 json results, double wall_time_s) {
  return json{{"command", command},
              {"config_digest", config_digest},
              {"results", std::move(results)},
              {"tool", json{{"name", "h2impact"}, {"version", H2IMPACT_VERSION}}},
              {"wall_time_s", json_number(wall_time_s)}};
}

std::string sweep_to_csv(const SweepGrid& grid) {
  std::string out = "R11,R22,stable,ratio,h2_perf_sq,h2_resid_sq\n";
  for (const auto& c : grid.cells) {
    out += format_double(c.R11);
    out += ',';
    out += format_double(c.R22);
    out += ',';
    out += c.stable ? '1' : '0';
    if (c.stable) {
      out += ',';
      out += format_double(c.ratio);
      out += ',';
      out += format_double(c.h2_perf_sq);
      out += ',';
      out += format_double(c.h2_resid_sq);
    } else {
      out += ",,,";
    }
    out += '\n';
  }
  return out;
}

SweepGrid sweep_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) ||
      line != "R11,R22,stable,ratio,h2_perf_sq,h2_resid_sq") {
    throw PreconditionError("sweep CSV header mismatch");
  }
  SweepGrid grid;
  grid.maximizer_index = -1;
  double best = -std::numeric_limits<double>::infinity();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string::size_type pos = 0;
    while (true) {
      const auto next = line.find(',', pos);
      fields.push_back(line.substr(pos, next - pos));
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    if (fields.size() != 6) {
      throw PreconditionError("sweep CSV row must have 6 fields");
    }
    SweepCell c;
    c.R11 = std::stod(fields[0]);
    c.R22 = std::stod(fields[1]);
    c.stable = fields[2] == "1";
    c.ratio = c.h2_perf_sq = c.h2_resid_sq =
        std::numeric_limits<double>::quiet_NaN();
    if (c.stable) {
      c.ratio = std::stod(fields[3]);
      c.h2_perf_sq = std::stod(fields[4]);
      c.h2_resid_sq = std::stod(fields[5]);
      if (c.ratio > best) {
        best = c.ratio;
        grid.maximizer_index = static_cast<int>(grid.cells.size());
      }
    }
    grid.cells.push_back(c);
  }
  // Axis metadata is reconstructed from the cell coordinates.
  grid.min = grid.max = grid.cells.empty() ? 0.0 : grid.cells.front().R11;
  for (const auto& c : grid.cells) {
    grid.min = std::min({grid.min, c.R11, c.R22});
    grid.max = std::max({grid.max, c.R11, c.R22});
  }
  const int total = static_cast<int>(grid.cells.size());
  grid.points_per_axis = static_cast<int>(std::lround(std::sqrt(double(total))));
  grid.step = grid.points_per_axis > 1
                  ? (grid.max - grid.min) / (grid.points_per_axis - 1)
                  : 0.0;
  return grid;
}

std::string trajectory_to_csv(const std::vector<TrajectoryPoint>& traj) {
  std::string out = "T,ratio,h2_perf_sq,h2_resid_sq\n";
  for (const auto& pt : traj) {
    out += format_double(pt.T);
    out += ',';
    out += format_double(pt.ratio);
    out += ',';
    out += format_double(pt.h2_performance_sq);
    out += ',';
    out += format_double(pt.h2_residual_sq);
    out += '\n';
  }
  return out;
}

}  // namespace h2impact
