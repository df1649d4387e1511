#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "h2impact/ncs.hpp"

namespace h2impact {

struct AnalysisDefaults {
  double epsilon = 1e-6;  // certificate slack
  double eta = 1e-9;      // stealth-score regularizer
  double margin = 0.0;    // stability margin for classification
  std::uint64_t seed = 0;
};

// Parsed, validated analysis configuration. Construction guarantees the
// plant/controller dimensions are consistent, (A_p, B_p) is controllable,
// (A_p, C_mo) is observable, B_what is nonsingular, and both gain matrices
// are stabilizing.
struct AnalysisConfig {
  PlantModel plant;
  ControllerDesign controller;
  AnalysisDefaults defaults;
  std::optional<double> epsilon_tr;  // detector threshold, if configured
};

// Strict-schema JSON parser: unknown keys are rejected and every error
// message carries the JSON path of the offending field. `source` names the
// document in error messages.
AnalysisConfig parse_config(const std::string& text,
                            const std::string& source = "<config>");

AnalysisConfig load_config(const std::string& path);

}  // namespace h2impact
