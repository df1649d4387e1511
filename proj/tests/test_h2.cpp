#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "h2impact/h2.hpp"
#include "h2impact/numerics.hpp"
#include "oracles.hpp"

using namespace h2impact;

namespace {

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

ControllerDesign example_controller() {
  ControllerDesign c;
  c.L.resize(1, 3);
  c.L << 2.43, -3.24, -0.66;
  c.K.resize(3, 2);
  c.K << 3, -1, 0, 0, 0, 0.9;
  c.B_what = 0.01 * Eigen::MatrixXd::Identity(3, 3);
  return c;
}

// Reference values computed with an independent Lyapunov route
// (SciPy solve_lyapunov on the same matrices, B_what = 0.01 I).
constexpr double kRatioNominal = 1.7409320361209866;
constexpr double kPerfNominal = 2.698714500453128;
constexpr double kResidNominal = 1.5501550000000002;
constexpr double kRatioDiag = 5.180542235175033;     // R = diag(0.685, 0.56)
constexpr double kRatioGeneral = 5.224002197148444;  // R = [[0.7,0.2],[0.02,0.68]]
constexpr double kResidGeneral = 3.16454148578229;

}  // namespace

TEST_CASE("impact reproduces independently computed ratios on the example") {
  const auto plant = example_plant();
  const auto ctl = example_controller();

  const auto nominal =
      impact(plant, ctl, Eigen::MatrixXd::Identity(2, 2));
  CHECK(nominal.ratio == doctest::Approx(kRatioNominal).epsilon(1e-9));
  CHECK(nominal.h2_performance_sq == doctest::Approx(kPerfNominal).epsilon(1e-9));
  CHECK(nominal.h2_residual_sq == doctest::Approx(kResidNominal).epsilon(1e-9));
  CHECK(nominal.ratio ==
        doctest::Approx(nominal.h2_performance_sq / nominal.h2_residual_sq));
  CHECK(nominal.spectral_abscissa == doctest::Approx(-0.5).epsilon(1e-9));

  RoutingMatrix Rd = Eigen::MatrixXd::Zero(2, 2);
  Rd(0, 0) = 0.685;
  Rd(1, 1) = 0.56;
  CHECK(impact(plant, ctl, Rd).ratio ==
        doctest::Approx(kRatioDiag).epsilon(1e-9));

  RoutingMatrix Rg(2, 2);
  Rg << 0.7, 0.2, 0.02, 0.68;
  const auto general = impact(plant, ctl, Rg);
  CHECK(general.ratio == doctest::Approx(kRatioGeneral).epsilon(1e-9));
  CHECK(general.h2_residual_sq == doctest::Approx(kResidGeneral).epsilon(1e-9));
  CHECK((general.R - Rg).norm() == 0.0);
}

TEST_CASE("impact refuses unstable loops, carrying the abscissa") {
  const auto plant = example_plant();
  const auto ctl = example_controller();
  try {
    impact(plant, ctl, Eigen::MatrixXd::Zero(2, 2));
    FAIL("expected StabilityError");
  } catch (const StabilityError& e) {
    CHECK(e.abscissa() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(e.code() == ExitCode::Unstable);
  }
}

TEST_CASE("impact rejects a numerically perfect stealth direction") {
  // Stable loop whose residual map is identically zero: C_mo = 0 with a
  // plant that is already Hurwitz and zero gains.
  PlantModel plant;
  plant.A_p = -Eigen::MatrixXd::Identity(2, 2);
  plant.B_p = Eigen::MatrixXd::Ones(2, 1);
  plant.B_w = Eigen::MatrixXd::Identity(2, 2);
  plant.C_mo = Eigen::MatrixXd::Zero(1, 2);
  plant.C_po = Eigen::MatrixXd::Ones(1, 2);
  plant.D_po = Eigen::MatrixXd::Zero(1, 1);
  ControllerDesign ctl;
  ctl.L = Eigen::MatrixXd::Zero(1, 2);
  ctl.K = Eigen::MatrixXd::Zero(2, 1);
  ctl.B_what = Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(impact(plant, ctl, Eigen::MatrixXd::Identity(1, 1)),
                  PreconditionError);
}

TEST_CASE("infinite-horizon gramian equals the Lyapunov solution") {
  const auto plant = example_plant();
  const auto ctl = example_controller();
  const auto sys =
      assemble_closed_loop(plant, ctl, Eigen::MatrixXd::Identity(2, 2));
  const auto res = gramian(sys, GramianHorizon::Infinite());
  CHECK(res.method == GramianMethod::Lyapunov);
  CHECK(res.horizon.infinite);
  const auto sol = solve_lyapunov(sys.A_R, sys.B * sys.B.transpose());
  CHECK((res.P - sol.X).norm() <= 1e-12 * std::max(1.0, sol.X.norm()));
}

TEST_CASE("finite-horizon gramian: scalar closed forms on both code paths") {
  Eigen::MatrixXd a(1, 1), b(1, 1);
  a << -1.0;
  b << 1.0;
  // Block-exponential regime (||A|| T well under the switch point).
  const auto small = gramian(a, b, GramianHorizon::Finite(1.0));
  CHECK(small.method == GramianMethod::VanLoanBlockExp);
  CHECK(small.P(0, 0) ==
        doctest::Approx(0.5 * (1.0 - std::exp(-2.0))).epsilon(1e-13));
  // Stable remainder regime (||A|| T = 40 exceeds the switch point).
  const auto large = gramian(a, b, GramianHorizon::Finite(40.0));
  CHECK(large.method == GramianMethod::VanLoanBlockExp);
  CHECK(large.P(0, 0) ==
        doctest::Approx(0.5 * (1.0 - std::exp(-80.0))).epsilon(1e-13));
  CHECK_FALSE(large.horizon.infinite);
  CHECK(large.horizon.T == 40.0);

  // Unstable scalar: Van Loan still applies while ||A|| T is moderate.
  a << 0.2;
  const auto grow = gramian(a, b, GramianHorizon::Finite(10.0));
  CHECK(grow.P(0, 0) ==
        doctest::Approx((std::exp(4.0) - 1.0) / 0.4).epsilon(1e-12));
  // ... but an unstable system beyond the block-exponential range must fail
  // loudly rather than return garbage.
  CHECK_THROWS_AS(gramian(a, b, GramianHorizon::Finite(200.0)), NumericError);
}

TEST_CASE("finite-horizon gramian matches the quadrature oracle") {
  std::mt19937 rng(5);
  const auto inst = oracle::random_instance(rng, 3, 1, 2, 1);
  const auto sys = assemble_closed_loop(inst.plant, inst.controller,
                                        Eigen::MatrixXd::Identity(2, 2));
  for (const double T : {0.5, 4.0}) {
    const auto res = gramian(sys.A_R, sys.B, GramianHorizon::Finite(T));
    const Eigen::MatrixXd ref = oracle::gramian_quadrature(sys.A_R, sys.B, T);
    CHECK((res.P - ref).norm() <= 1e-8 * ref.norm());
  }
  // Long horizon on the example loop: exercises the stable remainder path.
  const auto plant = example_plant();
  const auto ctl = example_controller();
  const auto ex =
      assemble_closed_loop(plant, ctl, Eigen::MatrixXd::Identity(2, 2));
  const double T_long = 12.0;
  REQUIRE(spectral_norm(ex.A_R) * T_long > 35.0);
  const auto res = gramian(ex.A_R, ex.B, GramianHorizon::Finite(T_long));
  const Eigen::MatrixXd ref = oracle::gramian_quadrature(ex.A_R, ex.B, T_long);
  CHECK((res.P - ref).norm() <= 1e-8 * ref.norm());

  CHECK_THROWS_AS(gramian(ex.A_R, ex.B, GramianHorizon::Finite(-1.0)),
                  PreconditionError);
}

TEST_CASE("ratio_trajectory is defined on increasing grids and converges") {
  const auto plant = example_plant();
  const auto ctl = example_controller();
  RoutingMatrix Rg(2, 2);
  Rg << 0.7, 0.2, 0.02, 0.68;
  const auto sys = assemble_closed_loop(plant, ctl, Rg);

  const auto curve = ratio_trajectory(sys, Rg, {1.0, 5.0, 20.0, 60.0});
  REQUIRE(curve.size() == 4);
  CHECK(curve[0].T == 1.0);
  for (const auto& pt : curve) {
    CHECK(pt.ratio == doctest::Approx(pt.h2_performance_sq / pt.h2_residual_sq));
  }
  // Energies accumulate monotonically in T.
  CHECK(curve[1].h2_performance_sq > curve[0].h2_performance_sq);
  CHECK(curve[3].ratio == doctest::Approx(kRatioGeneral).epsilon(1e-3));

  CHECK_THROWS_AS(ratio_trajectory(sys, Rg, {2.0, 1.0}), PreconditionError);
  CHECK_THROWS_AS(ratio_trajectory(sys, Rg, {0.0, 1.0}), PreconditionError);
  CHECK_THROWS_AS(ratio_trajectory(sys, Rg, {}), PreconditionError);
}

TEST_CASE("monte_carlo_energy approximates the trace formula and is "
          "seed-deterministic") {
  const auto plant = example_plant();
  const auto ctl = example_controller();
  RoutingMatrix Rg(2, 2);
  Rg << 0.7, 0.2, 0.02, 0.68;
  const auto sys = assemble_closed_loop(plant, ctl, Rg);
  const auto exact = impact(sys, Rg);

  const auto mc = monte_carlo_energy(sys, 0.01, 40.0, 1500, 123);
  CHECK(std::abs(mc.performance_energy - exact.h2_performance_sq) <
        0.05 * exact.h2_performance_sq);
  CHECK(std::abs(mc.residual_energy - exact.h2_residual_sq) <
        0.05 * exact.h2_residual_sq);
  CHECK(mc.performance_se > 0.0);
  CHECK(mc.performance_se < 0.05 * exact.h2_performance_sq);

  const auto mc2 = monte_carlo_energy(sys, 0.01, 40.0, 1500, 123);
  CHECK(mc2.performance_energy == mc.performance_energy);  // bitwise
  CHECK(mc2.residual_energy == mc.residual_energy);
  const auto mc3 = monte_carlo_energy(sys, 0.01, 40.0, 1500, 124);
  CHECK(mc3.performance_energy != mc.performance_energy);

  // The kept realization is a decimated single path.
  CHECK(mc.trace.num_paths == 1500);
  CHECK(mc.trace.noise_seed == 123);
  CHECK(mc.trace.time_grid.size() <= 1001);
  CHECK(mc.trace.states.size() == mc.trace.time_grid.size());
  CHECK(mc.trace.y_p.size() == mc.trace.time_grid.size());
}

TEST_CASE("monte_carlo_energy guards its domain") {
  const auto plant = example_plant();
  const auto ctl = example_controller();
  const auto sys =
      assemble_closed_loop(plant, ctl, Eigen::MatrixXd::Identity(2, 2));
  CHECK_THROWS_AS(monte_carlo_energy(sys, -0.01, 10.0, 10, 0),
                  PreconditionError);
  CHECK_THROWS_AS(monte_carlo_energy(sys, 1.0, 10.0, 10, 0),
                  PreconditionError);  // step * ||A_R|| >= 0.1
  CHECK_THROWS_AS(monte_carlo_energy(sys, 0.01, 10.0, 0, 0),
                  PreconditionError);

  const auto unstable =
      assemble_closed_loop(plant, ctl, Eigen::MatrixXd::Zero(2, 2));
  CHECK_THROWS_AS(monte_carlo_energy(unstable, 0.01, 10.0, 10, 0),
                  StabilityError);
}
