#include "h2impact/h2.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>
#include <vector>

#include "h2impact/numerics.hpp"

namespace h2impact {

namespace {

// Beyond this value of ||A||_2 * T the block exponential loses too many
// digits to guarantee the 1e-8 finite-horizon accuracy target; stable
// systems switch to the exact remainder identity instead.
constexpr double kVanLoanNormCap = 35.0;

Eigen::MatrixXd van_loan_gramian(const Eigen::MatrixXd& A,
                                 const Eigen::MatrixXd& Q, double T) {
  const Eigen::Index m = A.rows();
  Eigen::MatrixXd blk = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  blk.topLeftCorner(m, m) = -A;
  blk.topRightCorner(m, m) = Q;
  blk.bottomRightCorner(m, m) = A.transpose();
  Eigen::MatrixXd F = matrix_exponential(blk * T);
  // exp of the block matrix is [[e^{-AT}, e^{-AT} P(T)], [0, e^{A^T T}]],
  // so P(T) = (F22)^T F12.
  Eigen::MatrixXd P =
      F.bottomRightCorner(m, m).transpose() * F.topRightCorner(m, m);
  return 0.5 * (P + P.transpose());
}

// splitmix64 finalizer; used as a counter-based generator out = mix(key + j*gamma).
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline double counter_uniform(std::uint64_t key, std::uint64_t j) {
  const std::uint64_t v = mix64(key + j * 0x9E3779B97F4A7C15ull);
  return (static_cast<double>(v >> 11) + 0.5) * 0x1.0p-53;  // in (0,1)
}

}  // namespace

GramianResult gramian(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                      const GramianHorizon& horizon) {
  if (A.rows() != A.cols() || B.rows() != A.rows()) {
    throw PreconditionError("gramian: A must be square and B row-conformant");
  }
  const Eigen::MatrixXd Q = B * B.transpose();
  GramianResult res;
  res.horizon = horizon;

  if (horizon.infinite) {
    const double abscissa = spectral_abscissa(A);
    if (abscissa >= 0.0) {
      throw StabilityError(
          "infinite-horizon Gramian requires a Hurwitz matrix; spectral "
          "abscissa = " + detail::fmt(abscissa),
          abscissa);
    }
    res.P = solve_lyapunov(A, Q).X;
    res.method = GramianMethod::Lyapunov;
    return res;
  }

  if (!(horizon.T > 0.0)) {
    throw PreconditionError("finite-horizon Gramian requires T > 0");
  }
  const double normT = spectral_norm(A) * horizon.T;
  if (normT <= kVanLoanNormCap) {
    res.P = van_loan_gramian(A, Q, horizon.T);
  } else {
    const double abscissa = spectral_abscissa(A);
    if (abscissa >= 0.0) {
      throw NumericError(
          "finite-horizon Gramian: ||A||*T = " + std::to_string(normT) +
          " exceeds the accuracy range of the block exponential and the "
          "system is unstable, so no remainder identity applies");
    }
    const Eigen::MatrixXd Pinf = solve_lyapunov(A, Q).X;
    const Eigen::MatrixXd E = matrix_exponential(A * horizon.T);
    Eigen::MatrixXd P = Pinf - E * Pinf * E.transpose();
    res.P = 0.5 * (P + P.transpose());
  }
  res.method = GramianMethod::VanLoanBlockExp;
  return res;
}

GramianResult gramian(const ClosedLoopSystem& sys,
                      const GramianHorizon& horizon) {
  if (horizon.infinite && sys.spectral_abscissa >= 0.0) {
    throw StabilityError(
        "infinite-horizon Gramian requires a stable closed loop; spectral "
        "abscissa = " + detail::fmt(sys.spectral_abscissa),
        sys.spectral_abscissa);
  }
  return gramian(sys.A_R, sys.B, horizon);
}

ImpactReport impact(const ClosedLoopSystem& sys, const RoutingMatrix& R) {
  if (sys.spectral_abscissa >= 0.0) {
    throw StabilityError("impact requires a stable closed loop; spectral "
                         "abscissa = " + detail::fmt(sys.spectral_abscissa),
                         sys.spectral_abscissa);
  }
  const Eigen::MatrixXd P = gramian(sys, GramianHorizon::Infinite()).P;
  ImpactReport rep;
  rep.h2_performance_sq = (sys.C_p * P * sys.C_p.transpose()).trace();
  rep.h2_residual_sq = (sys.C_rR * P * sys.C_rR.transpose()).trace();
  rep.spectral_abscissa = sys.spectral_abscissa;
  rep.R = R;
  if (rep.h2_residual_sq <= 1e-14) {
    throw PreconditionError(
        "degenerate residual energy (" + detail::fmt(rep.h2_residual_sq) +
        " <= 1e-14): the ratio is unbounded along this routing");
  }
  rep.ratio = rep.h2_performance_sq / rep.h2_residual_sq;
  return rep;
}

ImpactReport impact(const PlantModel& model, const ControllerDesign& controller,
                    const RoutingMatrix& R) {
  return impact(assemble_closed_loop(model, controller, R), R);
}

std::vector<TrajectoryPoint> ratio_trajectory(
    const ClosedLoopSystem& sys, const RoutingMatrix& R,
    const std::vector<double>& time_grid) {
  (void)R;
  if (time_grid.empty()) {
    throw PreconditionError("ratio_trajectory requires a nonempty time grid");
  }
  double prev = 0.0;
  for (double t : time_grid) {
    if (!(t > prev)) {
      throw PreconditionError(
          "ratio_trajectory time grid must be strictly increasing and positive");
    }
    prev = t;
  }
  std::vector<TrajectoryPoint> out;
  out.reserve(time_grid.size());
  for (double T : time_grid) {
    const Eigen::MatrixXd P = gramian(sys, GramianHorizon::Finite(T)).P;
    TrajectoryPoint pt;
    pt.T = T;
    pt.h2_performance_sq = (sys.C_p * P * sys.C_p.transpose()).trace();
    pt.h2_residual_sq = (sys.C_rR * P * sys.C_rR.transpose()).trace();
    if (pt.h2_residual_sq < 1e-300) {
      throw NumericError("ratio_trajectory: residual energy vanished at T = " +
                         detail::fmt(T));
    }
    pt.ratio = pt.h2_performance_sq / pt.h2_residual_sq;
    out.push_back(pt);
  }
  return out;
}

MonteCarloResult monte_carlo_energy(const ClosedLoopSystem& sys, double step,
                                    double T_end, int num_paths,
                                    std::uint64_t seed) {
  if (sys.spectral_abscissa >= 0.0) {
    throw StabilityError("monte_carlo_energy requires a stable closed loop",
                         sys.spectral_abscissa);
  }
  if (!(step > 0.0)) throw PreconditionError("step must be positive");
  if (step * spectral_norm(sys.A_R) >= 0.1) {
    throw PreconditionError("step too large: step * ||A_R||_2 must be < 0.1");
  }
  if (!(T_end > 0.0) || num_paths < 1) {
    throw PreconditionError("T_end must be positive and num_paths >= 1");
  }
  const int m = sys.state_dim();
  const long total_steps = std::max<long>(4, std::lround(T_end / step));
  const long burn = total_steps / 2;  // conservative stationarity burn-in
  const long window = total_steps - burn;
  const int m_even = m + (m & 1);

  const Eigen::MatrixXd step_A =
      Eigen::MatrixXd::Identity(m, m) + step * sys.A_R;
  const Eigen::MatrixXd noise_B = std::sqrt(step) * sys.B;

  std::vector<double> perf_mean(num_paths, 0.0), resid_mean(num_paths, 0.0);

  // Path-0 realization kept at a decimated grid for inspection.
  const long stride = std::max<long>(1, total_steps / 1000);
  SimulationTrace trace;
  trace.noise_seed = seed;
  trace.num_paths = num_paths;

  const int batch = 256;
  auto run_paths = [&](int p_begin, int p_end) {
    Eigen::MatrixXd X(m, batch), Xi(m, batch), Yp, Yr;
    for (int b0 = p_begin; b0 < p_end; b0 += batch) {
      const int nb = std::min(batch, p_end - b0);
      X.setZero();
      std::vector<std::uint64_t> keys(nb);
      for (int c = 0; c < nb; ++c) {
        keys[c] = mix64(mix64(seed) ^
                        (0x9E3779B97F4A7C15ull * (std::uint64_t(b0 + c) + 1)));
      }
      for (long k = 0; k < total_steps; ++k) {
        if (b0 == 0 && k % stride == 0) {
          trace.time_grid.push_back(k * step);
          trace.states.push_back(X.col(0));
          trace.y_p.push_back(sys.C_p * X.col(0));
          trace.y_r.push_back(sys.C_rR * X.col(0));
        }
        if (k >= burn) {
          Yp.noalias() = sys.C_p * X.leftCols(nb);
          Yr.noalias() = sys.C_rR * X.leftCols(nb);
          for (int c = 0; c < nb; ++c) {
            perf_mean[b0 + c] += Yp.col(c).squaredNorm();
            resid_mean[b0 + c] += Yr.col(c).squaredNorm();
          }
        }
        for (int c = 0; c < nb; ++c) {
          const std::uint64_t base = std::uint64_t(k) * m_even;
          for (int i = 0; i < m; i += 2) {
            const double u1 = counter_uniform(keys[c], base + i);
            const double u2 = counter_uniform(keys[c], base + i + 1);
            const double r = std::sqrt(-2.0 * std::log(u1));
            const double th = 6.283185307179586476925286766559 * u2;
            Xi(i, c) = r * std::cos(th);
            if (i + 1 < m) Xi(i + 1, c) = r * std::sin(th);
          }
        }
        X.leftCols(nb) =
            (step_A * X.leftCols(nb) + noise_B * Xi.leftCols(nb)).eval();
      }
    }
  };

  // Per-path accumulators make the reduction order-free, so splitting the
  // path range across threads cannot change the result.
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int nthreads =
      static_cast<int>(std::min<unsigned>(hw, (num_paths + batch - 1) / batch));
  if (nthreads <= 1) {
    run_paths(0, num_paths);
  } else {
    std::vector<std::thread> pool;
    const int chunk =
        ((num_paths + nthreads - 1) / nthreads + batch - 1) / batch * batch;
    for (int t = 0; t < nthreads; ++t) {
      const int lo = t * chunk;
      const int hi = std::min(num_paths, lo + chunk);
      if (lo < hi) pool.emplace_back(run_paths, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  MonteCarloResult out;
  out.trace = std::move(trace);
  double pm = 0.0, rm = 0.0;
  for (int p = 0; p < num_paths; ++p) {
    perf_mean[p] /= static_cast<double>(window);
    resid_mean[p] /= static_cast<double>(window);
    pm += perf_mean[p];
    rm += resid_mean[p];
  }
  pm /= num_paths;
  rm /= num_paths;
  double pv = 0.0, rv = 0.0;
  for (int p = 0; p < num_paths; ++p) {
    pv += (perf_mean[p] - pm) * (perf_mean[p] - pm);
    rv += (resid_mean[p] - rm) * (resid_mean[p] - rm);
  }
  const double denom = std::max(1, num_paths - 1) * double(num_paths);
  out.performance_energy = pm;
  out.residual_energy = rm;
  out.performance_se = std::sqrt(pv / denom);
  out.residual_se = std::sqrt(rv / denom);
  return out;
}

}  // namespace h2impact
