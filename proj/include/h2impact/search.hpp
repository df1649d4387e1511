#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "h2impact/errors.hpp"
#include "h2impact/h2.hpp"
#include "h2impact/ncs.hpp"

namespace h2impact {

struct SweepCell {
  double R11;
  double R22;
  bool stable;
  double ratio;          // meaningful only when stable
  double h2_perf_sq;
  double h2_resid_sq;
};

struct SweepGrid {
  double min;
  double max;
  double step;
  std::vector<SweepCell> cells;  // row-major over (R11, R22)
  int points_per_axis;
  int maximizer_index;  // -1 when no stable cell exists
};

enum class StealthyObjective {
  MaxRatio,        // maximize performance/residual under the cap
  MaxPerformance,  // maximize the performance trace under the cap
};

struct SearchOptions {
  int restarts = 32;
  std::uint64_t seed = 0;
  int max_evals = 2000;  // per restart
  double margin = 0.0;   // required stability margin during evaluation
  std::optional<RoutingMatrix> warm_start;
};

struct ResidualCap {
  bool active = false;
  double epsilon_tr = 0.0;
};

struct SearchResult {
  RoutingMatrix best_R;
  double best_ratio;
  double performance_energy;
  double residual_energy;
  double spectral_abscissa;
  ResidualCap constraint;
  double nominal_residual_energy;  // residual energy at R = I
  StealthyObjective objective;
  long evaluations;
  int restarts;
  bool converged;
};

// Stability map and ratio surface over diagonal R = diag(R11, R22).
// Requires n_y = 2. Unstable cells are recorded, not errored.
SweepGrid diagonal_sweep(const PlantModel& model,
                         const ControllerDesign& controller, double min,
                         double max, double step);

// Multi-start Nelder-Mead maximization of the impact ratio over all n_y^2
// entries of R; unstable iterates are rejected by penalty. Deterministic for
// a fixed seed. Start points: warm start (if any), R = I, the diagonal-sweep
// maximizer (when n_y = 2), then Gaussian perturbations of I with spread 0.3.
SearchResult worst_case_search(const PlantModel& model,
                               const ControllerDesign& controller,
                               const SearchOptions& options = {});

// Same engine with the residual-energy cap tr{C_rR P C_rR^T} <= epsilon_tr
// enforced by an escalating exterior penalty; the returned point always
// satisfies the cap (hard post-check on the exact residual). Throws
// PreconditionError reporting the minimum achieved residual energy when no
// sampled point satisfies the cap.
SearchResult stealthy_search(const PlantModel& model,
                             const ControllerDesign& controller,
                             double epsilon_tr,
                             const SearchOptions& options = {},
                             StealthyObjective objective = StealthyObjective::MaxRatio);

}  // namespace h2impact
