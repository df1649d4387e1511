#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "h2impact/errors.hpp"
#include "h2impact/ncs.hpp"

namespace h2impact {

// Worst-case ratio bound from nominal-Gramian conditioning plus a relative
// Gramian perturbation level delta_R. The bound is only claimed when the
// perturbation is small enough for the delta_R construction to be valid.
struct PerturbationBoundReport {
  double kappa_P;          // condition number of the nominal Gramian
  double H_norm;           // ||H||_2 with A H + H A^T = -I at R = I
  double delta_A_norm;     // ||Delta_A_R||_2
  double delta_R;          // relative Gramian perturbation bound
  bool admissible;         // smallness condition and delta_R * kappa_P < 1
  double bound;            // +inf when not admissible
  double norm_E_R_F_sq;
  double norm_Cr_F_sq;
  double norm_Cp_F_sq;
};

struct SemigroupSample {
  double t;
  double norm_expAt;  // ||e^{At}||_2
  double envelope;    // M_star * e^{-alpha_star * t}
};

struct SemigroupEstimate {
  double M_star;      // >= 1, includes a 1.05 safety factor
  double alpha_star;
  std::vector<SemigroupSample> certificate_samples;
};

// Worst-case ratio bound from an exponential-decay envelope with margin
// alpha_star; finite whenever B has full column rank and the loop decays
// at least at rate alpha_star.
struct SemigroupBoundReport {
  double alpha_star;
  double M_star;
  double A_R_norm;
  double B_norm;
  double sigma_min_B;
  double bound;
  double norm_E_R_F_sq;
  double norm_Cr_F_sq;
  double norm_Cp_F_sq;
};

struct StealthMode {
  std::complex<double> eigenvalue;
  double residual_visibility;     // ||C_rR v||_2, unit eigenvector v
  double performance_visibility;  // ||C_p v||_2
  double score;                   // performance / (residual + eta)
};

struct StealthDiagnostic {
  std::vector<StealthMode> modes;  // one entry per conjugate pair, sorted by score
  double stealth_score;            // max over modes
  double eta;
};

// Ratio bound built from kappa(P) at R = I and the Gramian perturbation
// induced by Delta_A_R; delta_R is derived from the Lyapunov perturbation
// estimate delta_R = 2||H|| ||dA|| / (1 - 2||H|| ||dA||), admissible iff
// ||dA|| <= 1/(2||H||(1 + kappa)) and delta_R * kappa < 1.
PerturbationBoundReport gramian_perturbation_bound(
    const PlantModel& model, const ControllerDesign& controller,
    const RoutingMatrix& R);

// Same bound with a caller-supplied delta_R, bypassing the smallness-based
// construction (admissibility then reduces to delta_R * kappa < 1).
PerturbationBoundReport gramian_perturbation_bound(
    const PlantModel& model, const ControllerDesign& controller,
    const RoutingMatrix& R, double given_delta_R);

// Smallest M_star with ||e^{At}||_2 <= M_star e^{-alpha_star t} over a probe
// grid spanning [0, 20/alpha_star], refined around the maximizer and padded
// by a 1.05 safety factor. Requires spectral abscissa < -alpha_star.
SemigroupEstimate estimate_semigroup(const Eigen::MatrixXd& A,
                                     double alpha_star,
                                     std::vector<double> probe_grid = {});
SemigroupEstimate estimate_semigroup(const ClosedLoopSystem& sys,
                                     double alpha_star,
                                     std::vector<double> probe_grid = {});

SemigroupBoundReport semigroup_margin_bound(const PlantModel& model,
                                            const ControllerDesign& controller,
                                            const RoutingMatrix& R,
                                            double alpha_star);

// Per-eigenmode visibility of the closed loop through the residual and
// performance maps; large scores flag directions the performance output
// sees but the residual nearly misses.
StealthDiagnostic stealth_diagnostic(const ClosedLoopSystem& sys,
                                     double eta = 1e-9);

}  // namespace h2impact
