#include "h2impact/lmi.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "h2impact/numerics.hpp"

namespace h2impact {

namespace {

const Eigen::MatrixXd& channel_matrix(const ClosedLoopSystem& sys,
                                      OutputChannel channel) {
  return channel == OutputChannel::Performance ? sys.C_p : sys.C_rR;
}

void require_stable(const ClosedLoopSystem& sys, const char* op) {
  if (sys.spectral_abscissa >= 0.0) {
    throw StabilityError(std::string(op) +
                             " requires a stable closed loop; spectral "
                             "abscissa = " +
                             detail::fmt(sys.spectral_abscissa),
                         sys.spectral_abscissa);
  }
}

// Eigenvalue test with a per-block relative tolerance. For >-constraints the
// margin is lambda_min and must not dip below -tol; for <-constraints the
// margin is -lambda_max.
CertificateCheck spectral_check(const std::string& name,
                                const Eigen::MatrixXd& block, bool positive) {
  const Eigen::MatrixXd S = 0.5 * (block + block.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success) {
    throw NumericError("eigendecomposition failed during certificate check");
  }
  const double tol = 1e-9 * std::max(1.0, spectral_norm(S));
  CertificateCheck c;
  c.name = name;
  c.margin = positive ? es.eigenvalues().minCoeff() : -es.eigenvalues().maxCoeff();
  c.pass = c.margin >= -tol;
  return c;
}

std::vector<CertificateCheck> evaluate_checks(const ClosedLoopSystem& sys,
                                              const Eigen::MatrixXd& X,
                                              const Eigen::MatrixXd& Z,
                                              double gamma,
                                              OutputChannel channel) {
  const Eigen::MatrixXd& C = channel_matrix(sys, channel);
  const Eigen::Index m = X.rows();
  const Eigen::Index p = C.rows();
  std::vector<CertificateCheck> checks;

  CertificateCheck tr;
  tr.name = "trace(Z) < gamma";
  tr.margin = gamma - Z.trace();
  tr.pass = tr.margin >= -1e-9 * std::max(1.0, std::abs(gamma));
  checks.push_back(tr);

  checks.push_back(spectral_check("X > 0", X, true));

  Eigen::MatrixXd blk1(p + m, p + m);
  blk1.topLeftCorner(p, p) = Z;
  blk1.topRightCorner(p, m) = C * X;
  blk1.bottomLeftCorner(m, p) = X * C.transpose();
  blk1.bottomRightCorner(m, m) = X;
  checks.push_back(spectral_check("[[Z, CX], [XC', X]] > 0", blk1, true));

  Eigen::MatrixXd blk2(2 * m, 2 * m);
  blk2.topLeftCorner(m, m) =
      X * sys.A_R.transpose() + sys.A_R * X;
  blk2.topRightCorner(m, m) = sys.B;
  blk2.bottomLeftCorner(m, m) = sys.B.transpose();
  blk2.bottomRightCorner(m, m) = -Eigen::MatrixXd::Identity(m, m);
  checks.push_back(spectral_check("[[XA' + AX, B], [B', -I]] < 0", blk2, false));

  return checks;
}

}  // namespace

H2Certificate build_h2_certificate(const ClosedLoopSystem& sys,
                                   OutputChannel channel, double epsilon) {
  require_stable(sys, "build_h2_certificate");
  if (!(epsilon > 0.0)) {
    throw PreconditionError("certificate slack epsilon must be > 0");
  }
  const Eigen::Index m = sys.A_R.rows();
  const Eigen::MatrixXd& C = channel_matrix(sys, channel);

  // X solves A X + X A' + BB' + eps I = 0, i.e. the Gramian plus eps times
  // the solution of A H + H A' + I = 0; strict feasibility of every block
  // follows from the slack.
  const Eigen::MatrixXd Q =
      sys.B * sys.B.transpose() + epsilon * Eigen::MatrixXd::Identity(m, m);
  H2Certificate cert;
  cert.X = solve_lyapunov(sys.A_R, Q).X;
  cert.Z = C * cert.X * C.transpose() +
           epsilon * Eigen::MatrixXd::Identity(C.rows(), C.rows());
  cert.gamma = cert.Z.trace() + epsilon;
  cert.epsilon = epsilon;
  cert.channel = channel;
  cert.checks = evaluate_checks(sys, cert.X, cert.Z, cert.gamma, channel);
  return cert;
}

CertificateVerification verify_h2_certificate(const ClosedLoopSystem& sys,
                                              const H2Certificate& cert) {
  if (cert.X.rows() != sys.A_R.rows() || cert.X.cols() != sys.A_R.cols()) {
    throw PreconditionError("certificate X does not match the system dimension");
  }
  const Eigen::MatrixXd& C = channel_matrix(sys, cert.channel);
  if (cert.Z.rows() != C.rows() || cert.Z.cols() != C.rows()) {
    throw PreconditionError("certificate Z does not match the output dimension");
  }
  CertificateVerification v;
  v.checks = evaluate_checks(sys, cert.X, cert.Z, cert.gamma, cert.channel);
  v.pass = true;
  for (const auto& c : v.checks) v.pass = v.pass && c.pass;
  return v;
}

AlphaCertificate alpha_feasibility(const ClosedLoopSystem& sys, double alpha) {
  require_stable(sys, "alpha_feasibility");
  if (alpha < 0.0) throw PreconditionError("alpha must be >= 0");

  AlphaCertificate cert;
  cert.alpha = alpha;
  cert.X = solve_lyapunov(sys.A_R, sys.B * sys.B.transpose()).X;
  const Eigen::MatrixXd W =
      sys.C_p.transpose() * sys.C_p - alpha * sys.C_rR.transpose() * sys.C_rR;
  cert.trace_slack = (cert.X * W).trace();
  const double tol = 1e-10 * cert.X.norm() *
                     (sys.C_p.squaredNorm() + alpha * sys.C_rR.squaredNorm());
  cert.feasible = cert.trace_slack >= -tol;
  return cert;
}

RatioBisectionResult ratio_bisection(const ClosedLoopSystem& sys,
                                     double tolerance) {
  require_stable(sys, "ratio_bisection");
  if (!(tolerance > 0.0)) throw PreconditionError("tolerance must be > 0");

  const Eigen::MatrixXd P = solve_lyapunov(sys.A_R, sys.B * sys.B.transpose()).X;
  const double perf = (sys.C_p * P * sys.C_p.transpose()).trace();
  const double resid = (sys.C_rR * P * sys.C_rR.transpose()).trace();

  RatioBisectionResult r;
  r.bracket_lo = 0.0;
  r.bracket_hi = perf / std::max(resid, 1e-14) + 1.0;
  r.iterations = 0;

  double lo = r.bracket_lo, hi = r.bracket_hi;
  // lo stays feasible, hi infeasible; the boundary is the impact ratio.
  for (int it = 0; it < 200 && (hi - lo) > tolerance; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (alpha_feasibility(sys, mid).feasible) {
      lo = mid;
    } else {
      hi = mid;
    }
    r.iterations = it + 1;
  }
  r.alpha_star = lo;
  return r;
}

}  // namespace h2impact
