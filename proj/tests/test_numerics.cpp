#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "h2impact/numerics.hpp"
#include "oracles.hpp"

using namespace h2impact;

namespace {

// Shipped example model; used where a realistic 6x6 closed loop is needed.
PlantModel example_plant() {
  PlantModel p;
  p.A_p.resize(3, 3);
  p.A_p << 1, -2, -1, 0, -0.5, 0, 0, 0, -0.1;
  p.B_p.resize(3, 1);
  p.B_p << 0, 1, 1;
  p.B_w = Eigen::MatrixXd::Identity(3, 3);
  p.C_mo.resize(2, 3);
  p.C_mo << 1, 0, 0, 0, 0, 1;
  p.C_po.resize(1, 3);
  p.C_po << 0, 1, 0;
  p.D_po = Eigen::MatrixXd::Zero(1, 1);
  return p;
}

ControllerDesign example_controller(double sigma = 0.01) {
  ControllerDesign c;
  c.L.resize(1, 3);
  c.L << 2.43, -3.24, -0.66;
  c.K.resize(3, 2);
  c.K << 3, -1, 0, 0, 0, 0.9;
  c.B_what = sigma * Eigen::MatrixXd::Identity(3, 3);
  return c;
}

}  // namespace

TEST_CASE("solve_lyapunov scalar and diagonal closed forms") {
  Eigen::MatrixXd a(1, 1), q(1, 1);
  a << -1.0;
  q << 1.0;
  const auto sol = solve_lyapunov(a, q);
  CHECK(sol.X(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(sol.method == LyapunovMethod::KroneckerVectorized);

  const Eigen::MatrixXd A = -Eigen::MatrixXd::Identity(2, 2);
  const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(2, 2);
  const auto sol2 = solve_lyapunov(A, Q);
  CHECK((sol2.X - 0.5 * Q).norm() < 1e-14);
}

TEST_CASE("solve_lyapunov matches the Gramian quadrature oracle on the "
          "example closed loop") {
  const auto plant = example_plant();
  const auto ctl = example_controller();
  const auto sys = assemble_closed_loop(
      plant, ctl, Eigen::MatrixXd::Identity(2, 2));
  const Eigen::MatrixXd Q = sys.B * sys.B.transpose();
  const auto sol = solve_lyapunov(sys.A_R, Q);

  // The loop decays at rate 0.5, so T = 100 leaves a tail below e^{-100}.
  const Eigen::MatrixXd P_quad =
      oracle::gramian_quadrature(sys.A_R, sys.B, 100.0);
  CHECK((sol.X - P_quad).norm() / P_quad.norm() < 1e-6);
}

TEST_CASE("solve_lyapunov residuals and PSD property on random stable systems") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 2 + static_cast<int>(rng() % 9);  // 2..10
    const Eigen::MatrixXd A = oracle::random_stable(rng, m);
    const Eigen::MatrixXd B = oracle::gaussian(rng, m, m);
    const Eigen::MatrixXd Q = B * B.transpose();
    const auto sol = solve_lyapunov(A, Q);
    CHECK((sol.X - sol.X.transpose()).norm() <=
          1e-12 * std::max(1.0, sol.X.norm()));
    const double res = (A * sol.X + sol.X * A.transpose() + Q).norm();
    CHECK(res <= 1e-10 * (A.norm() * sol.X.norm() + Q.norm()) + 1e-12);
    CHECK(res == sol.residual_norm);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sol.X);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
  }
}

TEST_CASE("solve_lyapunov rejects singular operators and asymmetric Q") {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, 2);
  A(0, 0) = 1.0;
  A(1, 1) = -1.0;  // lambda_1 + lambda_2 = 0
  CHECK_THROWS_AS(solve_lyapunov(A, Eigen::MatrixXd::Identity(2, 2)),
                  NumericError);

  Eigen::MatrixXd Q(2, 2);
  Q << 1, 0.5, -0.5, 1;
  CHECK_THROWS_AS(solve_lyapunov(-Eigen::MatrixXd::Identity(2, 2), Q),
                  PreconditionError);
  CHECK_THROWS_AS(
      solve_lyapunov(-Eigen::MatrixXd::Identity(2, 2),
                     Eigen::MatrixXd::Identity(3, 3)),
      PreconditionError);
}

TEST_CASE("matrix_exponential closed forms") {
  CHECK((matrix_exponential(Eigen::MatrixXd::Zero(3, 3)) -
         Eigen::MatrixXd::Identity(3, 3))
            .norm() <= 1e-15);

  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(2, 2);
  D(0, 0) = -1.0;
  D(1, 1) = -2.0;
  const Eigen::MatrixXd E = matrix_exponential(D);
  CHECK(E(0, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(E(1, 1) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
  CHECK(std::abs(E(0, 1)) + std::abs(E(1, 0)) == 0.0);
}

TEST_CASE("matrix_exponential inverse identity, semigroup property, and "
          "Taylor-oracle agreement") {
  std::mt19937 rng(22);
  std::uniform_real_distribution<double> U(0.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd A = oracle::gaussian(rng, 4, 4);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(4, 4);
    CHECK((matrix_exponential(A) * matrix_exponential(-A) - I).norm() < 1e-10);

    const Eigen::MatrixXd S = oracle::random_stable(rng, 4);
    const double s = U(rng), t = U(rng);
    const Eigen::MatrixXd lhs = matrix_exponential(S * (s + t));
    const Eigen::MatrixXd rhs =
        matrix_exponential(S * s) * matrix_exponential(S * t);
    CHECK((lhs - rhs).norm() <= 1e-9 * std::max(1.0, lhs.norm()));

    const Eigen::MatrixXd ours = matrix_exponential(S);
    const Eigen::MatrixXd ref = oracle::expm_taylor(S);
    CHECK((ours - ref).norm() <= 1e-11 * std::max(1.0, ref.norm()));
  }
}

TEST_CASE("matrix_exponential rejects extreme norms instead of overflowing") {
  CHECK_THROWS_AS(matrix_exponential(1e9 * Eigen::MatrixXd::Identity(2, 2)),
                  NumericError);
}

TEST_CASE("definiteness verdicts") {
  const auto pd = definiteness(Eigen::MatrixXd::Identity(3, 3), 1e-9);
  CHECK(pd.verdict == Definiteness::PositiveDefinite);
  CHECK(pd.min_eigenvalue == doctest::Approx(1.0));
  CHECK(pd.tolerance == 1e-9);

  Eigen::MatrixXd ind = Eigen::MatrixXd::Zero(2, 2);
  ind(0, 0) = 1.0;
  ind(1, 1) = -1.0;
  CHECK(definiteness(ind, 1e-9).verdict == Definiteness::Indefinite);
  CHECK(definiteness(-Eigen::MatrixXd::Identity(2, 2), 1e-9).verdict ==
        Definiteness::NegativeDefinite);

  // Rank-1 Gram matrix of the example performance map: PSD with lambda_min 0.
  const auto plant = example_plant();
  const auto ctl = example_controller();
  const auto sys =
      assemble_closed_loop(plant, ctl, Eigen::MatrixXd::Identity(2, 2));
  const Eigen::MatrixXd G = sys.C_p.transpose() * sys.C_p;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(G);
  CHECK((svd.singularValues().array() > 1e-10).count() == 1);  // rank 1
  CHECK(definiteness(G, 1e-9).verdict == Definiteness::Semidefinite);

  Eigen::MatrixXd asym(2, 2);
  asym << 1, 1, -1, 1;
  CHECK_THROWS_AS(definiteness(asym, 1e-9), PreconditionError);
}

TEST_CASE("norms_and_condition closed forms and Gram-matrix oracle") {
  const auto id = norms_and_condition(Eigen::MatrixXd::Identity(4, 4));
  CHECK(id.frobenius == doctest::Approx(2.0));
  CHECK(id.spectral == doctest::Approx(1.0));
  CHECK(id.sigma_min == doctest::Approx(1.0));
  CHECK(id.condition_number == doctest::Approx(1.0));

  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(2, 2);
  D(0, 0) = 2.0;
  D(1, 1) = 1.0;
  const auto d = norms_and_condition(D);
  CHECK(d.spectral == doctest::Approx(2.0));
  CHECK(d.sigma_min == doctest::Approx(1.0));
  CHECK(d.condition_number == doctest::Approx(2.0));

  CHECK(std::isinf(
      norms_and_condition(Eigen::MatrixXd::Zero(3, 3)).condition_number));

  // sigma_min(B) for the example noise map, cross-checked against eig(B^T B).
  const auto plant = example_plant();
  const auto ctl = example_controller();
  const auto sys =
      assemble_closed_loop(plant, ctl, Eigen::MatrixXd::Identity(2, 2));
  const auto rep = norms_and_condition(sys.B);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sys.B.transpose() * sys.B);
  CHECK(rep.sigma_min ==
        doctest::Approx(std::sqrt(es.eigenvalues().minCoeff())).epsilon(1e-10));
  CHECK(rep.sigma_min > 0.0);
}

TEST_CASE("kronecker satisfies the vec identity") {
  std::mt19937 rng(33);
  const Eigen::MatrixXd A = oracle::gaussian(rng, 3, 4);
  const Eigen::MatrixXd X = oracle::gaussian(rng, 4, 2);
  const Eigen::MatrixXd B = oracle::gaussian(rng, 2, 5);
  const Eigen::MatrixXd left = A * X * B;
  const Eigen::VectorXd vec_left =
      Eigen::Map<const Eigen::VectorXd>(left.data(), left.size());
  const Eigen::VectorXd vec_x =
      Eigen::Map<const Eigen::VectorXd>(X.data(), X.size());
  const Eigen::VectorXd rhs = kronecker(B.transpose(), A) * vec_x;
  CHECK((vec_left - rhs).norm() < 1e-12);
}

TEST_CASE("spectral_abscissa agrees with the power-growth oracle") {
  std::mt19937 rng(44);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd A = oracle::gaussian(rng, 5, 5, 0.8);
    if (trial % 2 == 0) A = oracle::random_stable(rng, 5, 0.5);
    const double exact = spectral_abscissa(A);
    const double est = oracle::abscissa_power_oracle(A);
    CHECK(std::abs(exact - est) < 1e-6 * std::max(1.0, std::abs(exact)));
  }
}
