#pragma once

#include <Eigen/Dense>

#include "h2impact/errors.hpp"

namespace h2impact {

// Open-loop plant driven by unit-intensity white noise:
//   x_p' = A_p x_p + B_p u + B_w w,   y_m = C_mo x_p,   y_p = C_po x_p + D_po u.
struct PlantModel {
  Eigen::MatrixXd A_p;   // n_x x n_x
  Eigen::MatrixXd B_p;   // n_x x n_u
  Eigen::MatrixXd B_w;   // n_x x n_x
  Eigen::MatrixXd C_mo;  // n_y x n_x
  Eigen::MatrixXd C_po;  // n_yp x n_x
  Eigen::MatrixXd D_po;  // n_yp x n_u

  int n_x() const { return static_cast<int>(A_p.rows()); }
  int n_u() const { return static_cast<int>(B_p.cols()); }
  int n_y() const { return static_cast<int>(C_mo.rows()); }
  int n_yp() const { return static_cast<int>(C_po.rows()); }
};

// Observer-based output feedback u = L x_hat, x_hat' = A_p x_hat + B_p u
// + K (y_routed - C_mo x_hat) + B_what w_hat.
struct ControllerDesign {
  Eigen::MatrixXd L;       // n_u x n_x
  Eigen::MatrixXd K;       // n_x x n_y
  Eigen::MatrixXd B_what;  // n_x x n_x, nonsingular
};

// Sensor routing attack: the measurement vector y_m is replaced by R y_m.
using RoutingMatrix = Eigen::MatrixXd;

// Closed loop in (x_p, e) coordinates with e = x_p - x_hat:
//   A_R = [[A_p + B_p L, -B_p L], [K (I - R) C_mo, A_p - K C_mo]]
//   B   = [[B_w, 0], [B_w, -B_what]]
//   C_rR = [(R - I) C_mo, C_mo]      (residual map)
//   C_p  = [C_po + D_po L, -D_po L]  (performance map)
struct ClosedLoopSystem {
  Eigen::MatrixXd A_R;   // 2n_x x 2n_x
  Eigen::MatrixXd B;     // 2n_x x 2n_x
  Eigen::MatrixXd C_rR;  // n_y x 2n_x
  Eigen::MatrixXd C_p;   // n_yp x 2n_x
  double spectral_abscissa;

  int state_dim() const { return static_cast<int>(A_R.rows()); }
};

// Decomposition of the attacked loop around the nominal one:
// A_R(R) = A_R(I) + Delta_A_R and C_rR = C_r_nominal + Delta_C_rR.
struct AttackPerturbation {
  Eigen::MatrixXd E_R;          // n_y x n_x, (I - R) C_mo
  Eigen::MatrixXd Delta_A_R;    // 2n_x x 2n_x, K E_R in the lower-left block
  Eigen::MatrixXd Delta_C_rR;   // n_y x 2n_x, [-E_R, 0]
  Eigen::MatrixXd C_r_nominal;  // n_y x 2n_x, [0, C_mo]
};

struct StabilityVerdict {
  bool stable;      // spectral_abscissa < -margin
  double abscissa;  // max real part over eig(A_R)
  double margin;
};

// Throws PreconditionError naming the offending matrix pair on dimension
// mismatch.
void validate_dimensions(const PlantModel& model,
                         const ControllerDesign& controller);

// True iff A_p + B_p L and A_p - K C_mo are both Hurwitz (the premise under
// which R = I always yields a stable loop).
bool gains_stabilizing(const PlantModel& model,
                       const ControllerDesign& controller);

// Rank tests with singular-value threshold sigma_min/sigma_max < 1e-10.
bool is_controllable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);
bool is_observable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C);

ClosedLoopSystem assemble_closed_loop(const PlantModel& model,
                                      const ControllerDesign& controller,
                                      const RoutingMatrix& R);

AttackPerturbation attack_perturbation(const PlantModel& model,
                                       const ControllerDesign& controller,
                                       const RoutingMatrix& R);

StabilityVerdict classify_stability(const ClosedLoopSystem& sys,
                                    double margin = 0.0);

}  // namespace h2impact
