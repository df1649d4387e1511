#include "h2impact/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace h2impact {

namespace {

void require_square(const Eigen::MatrixXd& M, const char* name) {
  if (M.rows() != M.cols() || M.rows() == 0) {
    throw PreconditionError(std::string(name) + " must be square and nonempty, got " +
                            std::to_string(M.rows()) + "x" + std::to_string(M.cols()));
  }
}

void require_finite(const Eigen::MatrixXd& M, const char* name) {
  if (!M.allFinite()) {
    throw PreconditionError(std::string(name) + " contains non-finite entries");
  }
}

}  // namespace

Eigen::MatrixXd kronecker(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  Eigen::MatrixXd K(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    }
  }
  return K;
}

LyapunovSolution solve_lyapunov(const Eigen::MatrixXd& A,
                                const Eigen::MatrixXd& Q) {
  require_square(A, "A");
  require_square(Q, "Q");
  require_finite(A, "A");
  require_finite(Q, "Q");
  const Eigen::Index m = A.rows();
  if (Q.rows() != m) {
    throw PreconditionError("Q must match A: got " + std::to_string(Q.rows()) +
                            "x" + std::to_string(Q.cols()) + " vs A " +
                            std::to_string(m) + "x" + std::to_string(m));
  }
  const double q_scale = std::max(1.0, Q.norm());
  if ((Q - Q.transpose()).norm() > 1e-10 * q_scale) {
    throw PreconditionError("Q must be symmetric");
  }

  // The vectorized operator is singular iff lambda_i + lambda_j = 0 for some
  // eigenvalue pair of A; reject before solving so failure is diagnosable.
  Eigen::EigenSolver<Eigen::MatrixXd> es(A);
  if (es.info() != Eigen::Success) {
    throw NumericError("eigenvalue computation failed for Lyapunov operand");
  }
  const auto& lam = es.eigenvalues();
  const double a_scale = std::max(1.0, A.norm());
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (std::abs(lam(i) + lam(j)) < 1e-12 * a_scale) {
        throw NumericError(
            "Lyapunov operator is singular: eigenvalue pair sums to ~0 "
            "(lambda_i + lambda_j = " +
            detail::fmt(std::abs(lam(i) + lam(j))) + ")");
      }
    }
  }

  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m, m);
  Eigen::MatrixXd op = kronecker(I, A) + kronecker(A, I);
  Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(Q.data(), m * m);
  Eigen::VectorXd vec_x = op.partialPivLu().solve(rhs);

  LyapunovSolution sol;
  sol.X = Eigen::Map<const Eigen::MatrixXd>(vec_x.data(), m, m);
  sol.X = 0.5 * (sol.X + sol.X.transpose()).eval();  // kill asymmetric round-off
  sol.residual_norm = (A * sol.X + sol.X * A.transpose() + Q).norm();
  sol.method = LyapunovMethod::KroneckerVectorized;

  const double res_budget =
      1e-10 * (A.norm() * sol.X.norm() + Q.norm()) + 1e-300;
  if (!sol.X.allFinite() || sol.residual_norm > std::max(res_budget, 1e-12)) {
    throw NumericError("Lyapunov solve residual too large: " +
                       detail::fmt(sol.residual_norm));
  }
  return sol;
}

Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& A) {
  require_square(A, "A");
  require_finite(A, "A");
  const Eigen::Index m = A.rows();

  // Higham's 2005 degree-13 Pade coefficients.
  static const double b[14] = {64764752532480000.0, 32382376266240000.0,
                               7771770303897600.0,  1187353796428800.0,
                               129060195264000.0,   10559470521600.0,
                               670442572800.0,      33522128640.0,
                               1323241920.0,        40840800.0,
                               960960.0,            16380.0,
                               182.0,               1.0};
  const double theta13 = 5.371920351148152;

  const double norm1 = A.cwiseAbs().colwise().sum().maxCoeff();
  if (!std::isfinite(norm1) || norm1 > 1e8) {
    throw NumericError("matrix_exponential: norm too large for reliable "
                       "scaling-and-squaring (" + std::to_string(norm1) + ")");
  }
  int squarings = 0;
  Eigen::MatrixXd As = A;
  if (norm1 > theta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
    As /= std::ldexp(1.0, squarings);
  }

  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m, m);
  const Eigen::MatrixXd A2 = As * As;
  const Eigen::MatrixXd A4 = A2 * A2;
  const Eigen::MatrixXd A6 = A2 * A4;
  Eigen::MatrixXd U =
      As * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 +
            b[5] * A4 + b[3] * A2 + b[1] * I);
  Eigen::MatrixXd V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 +
                      b[4] * A4 + b[2] * A2 + b[0] * I;

  Eigen::MatrixXd F = (V - U).partialPivLu().solve(V + U);
  for (int s = 0; s < squarings; ++s) F = (F * F).eval();
  if (!F.allFinite()) {
    throw NumericError("matrix_exponential overflowed during squaring");
  }
  return F;
}

DefinitenessVerdict definiteness(const Eigen::MatrixXd& M, double tolerance) {
  require_square(M, "M");
  require_finite(M, "M");
  if (tolerance < 0) throw PreconditionError("tolerance must be >= 0");
  const double scale = std::max(1.0, M.norm());
  if ((M - M.transpose()).norm() > 1e-12 * scale) {
    throw PreconditionError("definiteness: input asymmetry exceeds 1e-12 relative");
  }
  Eigen::MatrixXd S = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success) {
    throw NumericError("symmetric eigendecomposition failed");
  }
  DefinitenessVerdict v;
  v.min_eigenvalue = es.eigenvalues().minCoeff();
  v.max_eigenvalue = es.eigenvalues().maxCoeff();
  v.tolerance = tolerance;
  if (v.min_eigenvalue > tolerance) {
    v.verdict = Definiteness::PositiveDefinite;
  } else if (v.max_eigenvalue < -tolerance) {
    v.verdict = Definiteness::NegativeDefinite;
  } else if (v.min_eigenvalue < -tolerance && v.max_eigenvalue > tolerance) {
    v.verdict = Definiteness::Indefinite;
  } else {
    v.verdict = Definiteness::Semidefinite;
  }
  return v;
}

NormsReport norms_and_condition(const Eigen::MatrixXd& M) {
  require_finite(M, "M");
  if (M.size() == 0) throw PreconditionError("M must be nonempty");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  NormsReport r;
  r.frobenius = M.norm();
  r.spectral = svd.singularValues()(0);
  r.sigma_min = svd.singularValues()(svd.singularValues().size() - 1);
  r.condition_number = (r.sigma_min < 1e-300)
                           ? std::numeric_limits<double>::infinity()
                           : r.spectral / r.sigma_min;
  return r;
}

double spectral_abscissa(const Eigen::MatrixXd& A) {
  require_square(A, "A");
  require_finite(A, "A");
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw NumericError("eigenvalue computation did not converge");
  }
  return es.eigenvalues().real().maxCoeff();
}

double spectral_norm(const Eigen::MatrixXd& M) {
  require_finite(M, "M");
  if (M.size() == 0) throw PreconditionError("M must be nonempty");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  return svd.singularValues()(0);
}

}  // namespace h2impact
