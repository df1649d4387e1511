#pragma once

#include <Eigen/Dense>

#include "h2impact/errors.hpp"

namespace h2impact {

enum class LyapunovMethod {
  KroneckerVectorized,
  SchurBartelsStewart,
};

// Solution of A*X + X*A^T + Q = 0 with diagnostics.
struct LyapunovSolution {
  Eigen::MatrixXd X;     // symmetric
  double residual_norm;  // ||A*X + X*A^T + Q||_F after the solve
  LyapunovMethod method;
};

enum class Definiteness {
  PositiveDefinite,
  NegativeDefinite,
  Indefinite,
  Semidefinite,
};

struct DefinitenessVerdict {
  double min_eigenvalue;
  double max_eigenvalue;
  Definiteness verdict;
  double tolerance;
};

struct NormsReport {
  double frobenius;
  double spectral;          // largest singular value
  double sigma_min;         // smallest singular value
  double condition_number;  // sigma_max/sigma_min, +inf when sigma_min < 1e-300
};

// Solves A*X + X*A^T + Q = 0 by vectorizing to the m^2 x m^2 system
// (I (x) A + A (x) I) vec(X) = -vec(Q). All in-scope systems are small
// (m <= ~20), so the dense Kronecker solve is exact enough and avoids a
// Schur decomposition dependency. The result is symmetrized.
//
// Requires Q symmetric. Fails when the spectrum pairing of A contains a
// near-zero sum lambda_i + lambda_j (singular Lyapunov operator).
LyapunovSolution solve_lyapunov(const Eigen::MatrixXd& A,
                                const Eigen::MatrixXd& Q);

// Pade order-13 scaling-and-squaring approximation of exp(A).
// Accuracy target 1e-12 relative for ||A||_2 <= 10.
Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& A);

// Spectral classification of a symmetric matrix. Inputs with relative
// asymmetry below 1e-12 are symmetrized; anything worse is rejected.
DefinitenessVerdict definiteness(const Eigen::MatrixXd& M, double tolerance);

// Frobenius/spectral/minimum singular values and condition number via SVD.
NormsReport norms_and_condition(const Eigen::MatrixXd& M);

// Max real part over eigenvalues of a general real square matrix.
double spectral_abscissa(const Eigen::MatrixXd& A);

// Largest singular value.
double spectral_norm(const Eigen::MatrixXd& M);

// Kronecker product, column-major vec convention: vec(AXB) = (B^T (x) A) vec(X).
Eigen::MatrixXd kronecker(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

}  // namespace h2impact
