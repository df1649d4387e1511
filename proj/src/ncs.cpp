#include "h2impact/ncs.hpp"

#include <string>

#include <Eigen/SVD>

#include "h2impact/numerics.hpp"

namespace h2impact {

namespace {

void check_pair(bool ok, const char* lhs, const char* rhs) {
  if (!ok) {
    throw PreconditionError(std::string("dimension mismatch between ") + lhs +
                            " and " + rhs);
  }
}

bool full_row_space(const Eigen::MatrixXd& M) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& s = svd.singularValues();
  if (s(0) <= 0) return false;
  return s(s.size() - 1) / s(0) >= 1e-10;
}

}  // namespace

void validate_dimensions(const PlantModel& model,
                         const ControllerDesign& controller) {
  const auto& m = model;
  check_pair(m.A_p.rows() == m.A_p.cols() && m.A_p.rows() >= 1, "A_p", "A_p");
  check_pair(m.B_p.rows() == m.A_p.rows() && m.B_p.cols() >= 1, "A_p", "B_p");
  check_pair(m.B_w.rows() == m.A_p.rows() && m.B_w.cols() == m.A_p.rows(),
             "A_p", "B_w");
  check_pair(m.C_mo.cols() == m.A_p.rows() && m.C_mo.rows() >= 1, "A_p", "C_mo");
  check_pair(m.C_po.cols() == m.A_p.rows() && m.C_po.rows() >= 1, "A_p", "C_po");
  check_pair(m.D_po.rows() == m.C_po.rows() && m.D_po.cols() == m.B_p.cols(),
             "C_po", "D_po");
  check_pair(controller.L.rows() == m.B_p.cols() &&
                 controller.L.cols() == m.A_p.rows(),
             "B_p", "L");
  check_pair(controller.K.rows() == m.A_p.rows() &&
                 controller.K.cols() == m.C_mo.rows(),
             "C_mo", "K");
  check_pair(controller.B_what.rows() == m.A_p.rows() &&
                 controller.B_what.cols() == m.A_p.rows(),
             "A_p", "B_what");
}

bool gains_stabilizing(const PlantModel& model,
                       const ControllerDesign& controller) {
  validate_dimensions(model, controller);
  const double a1 = spectral_abscissa(model.A_p + model.B_p * controller.L);
  const double a2 = spectral_abscissa(model.A_p - controller.K * model.C_mo);
  return a1 < 0.0 && a2 < 0.0;
}

bool is_controllable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const Eigen::Index n = A.rows();
  Eigen::MatrixXd ctrb(n, n * B.cols());
  Eigen::MatrixXd blk = B;
  for (Eigen::Index k = 0; k < n; ++k) {
    ctrb.middleCols(k * B.cols(), B.cols()) = blk;
    blk = A * blk;
  }
  return full_row_space(ctrb);
}

bool is_observable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C) {
  return is_controllable(A.transpose(), C.transpose());
}

ClosedLoopSystem assemble_closed_loop(const PlantModel& model,
                                      const ControllerDesign& controller,
                                      const RoutingMatrix& R) {
  validate_dimensions(model, controller);
  const int n = model.n_x();
  const int ny = model.n_y();
  if (R.rows() != ny || R.cols() != ny) {
    throw PreconditionError("dimension mismatch between C_mo and R: R must be " +
                            std::to_string(ny) + "x" + std::to_string(ny) +
                            ", got " + std::to_string(R.rows()) + "x" +
                            std::to_string(R.cols()));
  }
  const Eigen::MatrixXd I_y = Eigen::MatrixXd::Identity(ny, ny);

  ClosedLoopSystem sys;
  sys.A_R.resize(2 * n, 2 * n);
  sys.A_R.topLeftCorner(n, n) = model.A_p + model.B_p * controller.L;
  sys.A_R.topRightCorner(n, n) = -model.B_p * controller.L;
  sys.A_R.bottomLeftCorner(n, n) = controller.K * (I_y - R) * model.C_mo;
  sys.A_R.bottomRightCorner(n, n) = model.A_p - controller.K * model.C_mo;

  sys.B.resize(2 * n, 2 * n);
  sys.B.topLeftCorner(n, n) = model.B_w;
  sys.B.topRightCorner(n, n).setZero();
  sys.B.bottomLeftCorner(n, n) = model.B_w;
  sys.B.bottomRightCorner(n, n) = -controller.B_what;

  sys.C_rR.resize(ny, 2 * n);
  sys.C_rR.leftCols(n) = (R - I_y) * model.C_mo;
  sys.C_rR.rightCols(n) = model.C_mo;

  sys.C_p.resize(model.n_yp(), 2 * n);
  sys.C_p.leftCols(n) = model.C_po + model.D_po * controller.L;
  sys.C_p.rightCols(n) = -model.D_po * controller.L;

  sys.spectral_abscissa = spectral_abscissa(sys.A_R);
  return sys;
}

AttackPerturbation attack_perturbation(const PlantModel& model,
                                       const ControllerDesign& controller,
                                       const RoutingMatrix& R) {
  validate_dimensions(model, controller);
  const int n = model.n_x();
  const int ny = model.n_y();
  if (R.rows() != ny || R.cols() != ny) {
    throw PreconditionError("dimension mismatch between C_mo and R");
  }
  const Eigen::MatrixXd I_y = Eigen::MatrixXd::Identity(ny, ny);

  AttackPerturbation p;
  p.E_R = (I_y - R) * model.C_mo;
  p.Delta_A_R = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  p.Delta_A_R.bottomLeftCorner(n, n) = controller.K * p.E_R;
  p.Delta_C_rR.resize(ny, 2 * n);
  p.Delta_C_rR.leftCols(n) = -p.E_R;
  p.Delta_C_rR.rightCols(n).setZero();
  p.C_r_nominal.resize(ny, 2 * n);
  p.C_r_nominal.leftCols(n).setZero();
  p.C_r_nominal.rightCols(n) = model.C_mo;
  return p;
}

StabilityVerdict classify_stability(const ClosedLoopSystem& sys,
                                    double margin) {
  if (margin < 0) throw PreconditionError("stability margin must be >= 0");
  StabilityVerdict v;
  v.abscissa = sys.spectral_abscissa;
  v.margin = margin;
  v.stable = v.abscissa < -margin;
  return v;
}

}  // namespace h2impact
