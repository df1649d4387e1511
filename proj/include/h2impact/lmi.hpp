#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "h2impact/errors.hpp"
#include "h2impact/ncs.hpp"

namespace h2impact {

enum class OutputChannel {
  Performance,  // y_p = C_p x
  Residual,     // y_r = C_rR x
};

struct CertificateCheck {
  std::string name;
  double margin;  // min eigenvalue for >-constraints, -max for <-constraints
  bool pass;
};

// Feasible point of the H2-norm semidefinite program, built analytically
// from a slacked Lyapunov solution: gamma upper-bounds the squared H2 norm
// and converges to it as epsilon -> 0.
struct H2Certificate {
  Eigen::MatrixXd X;  // 2n_x x 2n_x, symmetric positive definite
  Eigen::MatrixXd Z;  // output-dim square
  double gamma;
  double epsilon;
  OutputChannel channel;
  std::vector<CertificateCheck> checks;
};

struct CertificateVerification {
  bool pass;
  std::vector<CertificateCheck> checks;
};

// Feasibility of the trace condition tr{X (C_p^T C_p - alpha C_rR^T C_rR)} >= 0
// with X the stationary Lyapunov solution; feasible exactly up to the impact
// ratio.
struct AlphaCertificate {
  double alpha;
  Eigen::MatrixXd X;
  double trace_slack;
  bool feasible;
};

struct RatioBisectionResult {
  double alpha_star;  // recovered ratio
  int iterations;
  double bracket_lo;
  double bracket_hi;
};

H2Certificate build_h2_certificate(const ClosedLoopSystem& sys,
                                   OutputChannel channel, double epsilon);

// Re-evaluates every constraint spectrally; never trusts stored results.
CertificateVerification verify_h2_certificate(const ClosedLoopSystem& sys,
                                              const H2Certificate& cert);

AlphaCertificate alpha_feasibility(const ClosedLoopSystem& sys, double alpha);

// Bisection over alpha_feasibility; recovers impact(...).ratio.
RatioBisectionResult ratio_bisection(const ClosedLoopSystem& sys,
                                     double tolerance = 1e-8);

}  // namespace h2impact
