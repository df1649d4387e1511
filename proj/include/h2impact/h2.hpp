#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "h2impact/errors.hpp"
#include "h2impact/ncs.hpp"

namespace h2impact {

struct GramianHorizon {
  bool infinite;
  double T;  // valid when !infinite

  static GramianHorizon Infinite() { return {true, 0.0}; }
  static GramianHorizon Finite(double T) { return {false, T}; }
};

enum class GramianMethod {
  Lyapunov,
  VanLoanBlockExp,
  Quadrature,
};

struct GramianResult {
  Eigen::MatrixXd P;  // symmetric PSD controllability Gramian
  GramianHorizon horizon;
  GramianMethod method;
};

struct ImpactReport {
  double h2_performance_sq;  // tr{C_p P C_p^T}
  double h2_residual_sq;     // tr{C_rR P C_rR^T}
  double ratio;
  double spectral_abscissa;
  RoutingMatrix R;
};

// Decimated single-path realization retained for inspection; not all paths
// are stored (the estimator aggregates across paths internally).
struct SimulationTrace {
  std::vector<double> time_grid;
  std::vector<Eigen::VectorXd> states;  // x = (x_p, e) samples of path 0
  std::vector<Eigen::VectorXd> y_p;
  std::vector<Eigen::VectorXd> y_r;
  std::uint64_t noise_seed;
  int num_paths;
};

struct MonteCarloResult {
  double performance_energy;  // time-and-path average of y_p^T y_p
  double residual_energy;     // time-and-path average of y_r^T y_r
  double performance_se;      // standard error across paths
  double residual_se;
  SimulationTrace trace;
};

// Controllability Gramian of (A, B):
//   infinite horizon -> Lyapunov solve of A P + P A^T + B B^T = 0 (A Hurwitz),
//   finite horizon   -> Van Loan block-exponential of [[-A, BB^T], [0, A^T]].
// For stable A with ||A||_2 * T beyond the range where the block exponential
// keeps full accuracy, the finite-horizon value switches to the remainder
// identity P(T) = P_inf - e^{AT} P_inf e^{A^T T}, which is exact for any T.
GramianResult gramian(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                      const GramianHorizon& horizon);
GramianResult gramian(const ClosedLoopSystem& sys,
                      const GramianHorizon& horizon);

// Exact H2 energies and their ratio from the infinite-horizon Gramian.
// Throws StabilityError when sys is unstable and a degenerate-residual
// PreconditionError when tr{C_rR P C_rR^T} <= 1e-14 (a numerically perfect
// stealth direction, the ratio is unbounded there).
ImpactReport impact(const ClosedLoopSystem& sys, const RoutingMatrix& R);
ImpactReport impact(const PlantModel& model, const ControllerDesign& controller,
                    const RoutingMatrix& R);

struct TrajectoryPoint {
  double T;
  double ratio;
  double h2_performance_sq;
  double h2_residual_sq;
};

// Finite-horizon ratio curve over a strictly increasing positive time grid.
// On a stable system the curve converges to impact(...).ratio as T grows.
std::vector<TrajectoryPoint> ratio_trajectory(const ClosedLoopSystem& sys,
                                              const RoutingMatrix& R,
                                              const std::vector<double>& time_grid);

// Euler-Maruyama simulation of dx = A_R x dt + B dW with unit-intensity
// white noise (noise covariance (1/step) I per sample). Returns stationary
// output energies averaged over the second half of [0, T_end] and all paths.
// Noise is generated from counter-based streams keyed by (seed, path index,
// step, component), so results are independent of scheduling and bitwise
// reproducible for a fixed seed.
MonteCarloResult monte_carlo_energy(const ClosedLoopSystem& sys, double step,
                                    double T_end, int num_paths,
                                    std::uint64_t seed);

}  // namespace h2impact
