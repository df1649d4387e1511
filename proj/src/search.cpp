#include "h2impact/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "h2impact/numerics.hpp"

namespace h2impact {

namespace {

constexpr double kInvalid = -1e300;  // ordering-only sentinel, never reported
constexpr double kInf = std::numeric_limits<double>::infinity();

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline double counter_normal(std::uint64_t key, std::uint64_t j) {
  const auto u = [key](std::uint64_t i) {
    return (static_cast<double>(mix64(key + i * 0x9E3779B97F4A7C15ull) >> 11) +
            0.5) *
           0x1.0p-53;
  };
  return std::sqrt(-2.0 * std::log(u(2 * j))) *
         std::cos(6.283185307179586476925286766559 * u(2 * j + 1));
}

struct Evaluation {
  bool valid = false;
  double ratio = 0.0;
  double perf = 0.0;
  double resid = 0.0;
  double abscissa = 0.0;
};

struct Engine {
  const PlantModel& model;
  const ControllerDesign& controller;
  const SearchOptions& opts;
  double cap;  // +inf disables the residual constraint
  StealthyObjective objective;
  int ny;

  long evaluations = 0;
  bool has_best = false;
  Eigen::VectorXd best_x = Eigen::VectorXd();
  Evaluation best_eval = Evaluation();
  double min_resid_seen = kInf;

  double merit(const Evaluation& e) const {
    return objective == StealthyObjective::MaxRatio ? e.ratio : e.perf;
  }

  Evaluation evaluate(const Eigen::VectorXd& x) {
    ++evaluations;
    Evaluation e;
    const Eigen::Map<const Eigen::MatrixXd> R(x.data(), ny, ny);
    ClosedLoopSystem sys;
    try {
      sys = assemble_closed_loop(model, controller, R);
    } catch (const Error&) {
      return e;
    }
    if (!(sys.spectral_abscissa < -opts.margin)) return e;
    try {
      const ImpactReport rep = impact(sys, R);
      e.valid = true;
      e.ratio = rep.ratio;
      e.perf = rep.h2_performance_sq;
      e.resid = rep.h2_residual_sq;
      e.abscissa = rep.spectral_abscissa;
    } catch (const Error&) {
      return e;  // degenerate residual or failed solve: reject the iterate
    }
    if (e.valid) {
      min_resid_seen = std::min(min_resid_seen, e.resid);
      if (e.resid <= cap) {
        // Deterministic champion update with lexicographic tie-break.
        bool take = !has_best || merit(e) > merit(best_eval);
        if (has_best && merit(e) == merit(best_eval)) {
          take = std::lexicographical_compare(x.data(), x.data() + x.size(),
                                              best_x.data(),
                                              best_x.data() + best_x.size());
        }
        if (take) {
          has_best = true;
          best_x = x;
          best_eval = e;
        }
      }
    }
    return e;
  }

  double penalized(const Eigen::VectorXd& x, double mu) {
    const Evaluation e = evaluate(x);
    if (!e.valid) return kInvalid;
    const double violation = std::max(0.0, e.resid - cap);
    return merit(e) - mu * violation * violation;
  }

  // Nelder-Mead ascent from x0; returns the best simplex vertex.
  // Converged when the simplex objective spread falls below 1e-9 relative.
  std::pair<Eigen::VectorXd, bool> nelder_mead(const Eigen::VectorXd& x0,
                                               double mu, int max_evals) {
    const int n = static_cast<int>(x0.size());
    std::vector<Eigen::VectorXd> pts(n + 1, x0);
    std::vector<double> f(n + 1);
    long used = 0;
    auto call = [&](const Eigen::VectorXd& x) {
      ++used;
      return penalized(x, mu);
    };
    f[0] = call(x0);
    for (int i = 0; i < n; ++i) {
      pts[i + 1](i) += 0.1;
      f[i + 1] = call(pts[i + 1]);
    }
    bool converged = false;
    std::vector<int> order(n + 1);
    while (used < max_evals) {
      for (int i = 0; i <= n; ++i) order[i] = i;
      std::sort(order.begin(), order.end(),
                [&](int a, int b) { return f[a] > f[b]; });
      const double spread = f[order[0]] - f[order[n]];
      if (spread <= 1e-9 * std::max(1.0, std::abs(f[order[0]]))) {
        converged = true;
        break;
      }
      Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
      for (int i = 0; i < n; ++i) centroid += pts[order[i]];
      centroid /= n;
      const int worst = order[n];
      const int second = order[n - 1];

      const Eigen::VectorXd xr = centroid + (centroid - pts[worst]);
      const double fr = call(xr);
      if (fr > f[order[0]]) {
        const Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[worst]);
        const double fe = call(xe);
        if (fe > fr) {
          pts[worst] = xe;
          f[worst] = fe;
        } else {
          pts[worst] = xr;
          f[worst] = fr;
        }
      } else if (fr > f[second]) {
        pts[worst] = xr;
        f[worst] = fr;
      } else {
        const bool outside = fr > f[worst];
        const Eigen::VectorXd xc =
            outside ? (centroid + 0.5 * (centroid - pts[worst])).eval()
                    : (centroid - 0.5 * (centroid - pts[worst])).eval();
        const double fc = call(xc);
        if (fc > (outside ? fr : f[worst])) {
          pts[worst] = xc;
          f[worst] = fc;
        } else {
          for (int i = 1; i <= n; ++i) {
            const int idx = order[i];
            pts[idx] = pts[order[0]] + 0.5 * (pts[idx] - pts[order[0]]);
            f[idx] = call(pts[idx]);
            if (used >= max_evals) break;
          }
        }
      }
    }
    int best = 0;
    for (int i = 1; i <= n; ++i) {
      if (f[i] > f[best]) best = i;
    }
    return {pts[best], converged};
  }
};

}  // namespace

SweepGrid diagonal_sweep(const PlantModel& model,
                         const ControllerDesign& controller, double min,
                         double max, double step) {
  validate_dimensions(model, controller);
  if (model.n_y() != 2) {
    throw PreconditionError("diagonal_sweep requires n_y = 2, got n_y = " +
                            std::to_string(model.n_y()));
  }
  if (!(step > 0.0) || !(min < max)) {
    throw PreconditionError("sweep grid requires step > 0 and min < max");
  }
  SweepGrid grid;
  grid.min = min;
  grid.max = max;
  grid.step = step;
  grid.points_per_axis =
      static_cast<int>(std::floor((max - min) / step + 1e-9)) + 1;
  grid.maximizer_index = -1;
  grid.cells.reserve(static_cast<std::size_t>(grid.points_per_axis) *
                     grid.points_per_axis);

  double best = -kInf;
  for (int i = 0; i < grid.points_per_axis; ++i) {
    for (int j = 0; j < grid.points_per_axis; ++j) {
      SweepCell cell;
      cell.R11 = min + i * step;
      cell.R22 = min + j * step;
      cell.ratio = std::numeric_limits<double>::quiet_NaN();
      cell.h2_perf_sq = std::numeric_limits<double>::quiet_NaN();
      cell.h2_resid_sq = std::numeric_limits<double>::quiet_NaN();
      Eigen::Matrix2d R;
      R << cell.R11, 0.0, 0.0, cell.R22;
      const ClosedLoopSystem sys = assemble_closed_loop(model, controller, R);
      cell.stable = sys.spectral_abscissa < 0.0;
      if (cell.stable) {
        const ImpactReport rep = impact(sys, R);
        cell.ratio = rep.ratio;
        cell.h2_perf_sq = rep.h2_performance_sq;
        cell.h2_resid_sq = rep.h2_residual_sq;
        if (cell.ratio > best) {
          best = cell.ratio;
          grid.maximizer_index = static_cast<int>(grid.cells.size());
        }
      }
      grid.cells.push_back(cell);
    }
  }
  return grid;
}

namespace {

SearchResult run_search(const PlantModel& model,
                        const ControllerDesign& controller, double cap,
                        bool cap_active, const SearchOptions& opts,
                        StealthyObjective objective) {
  validate_dimensions(model, controller);
  if (opts.restarts < 1 || opts.max_evals < 0) {
    throw PreconditionError("search requires restarts >= 1 and max_evals >= 0");
  }
  if (cap_active && !(cap > 0.0)) {
    throw PreconditionError("epsilon_tr must be positive");
  }
  const int ny = model.n_y();
  const Eigen::MatrixXd I_y = Eigen::MatrixXd::Identity(ny, ny);

  // Nominal feasibility is both a precondition and the fallback start.
  const ImpactReport nominal = impact(model, controller, I_y);

  Engine eng{model, controller, opts, cap, objective, ny};

  std::vector<Eigen::VectorXd> starts;
  starts.reserve(opts.restarts);
  if (opts.warm_start.has_value()) {
    const RoutingMatrix& W = *opts.warm_start;
    if (W.rows() != ny || W.cols() != ny) {
      throw PreconditionError("warm start routing matrix has wrong dimensions");
    }
    starts.push_back(Eigen::Map<const Eigen::VectorXd>(W.data(), ny * ny));
  }
  if (static_cast<int>(starts.size()) < opts.restarts) {
    starts.push_back(Eigen::Map<const Eigen::VectorXd>(I_y.data(), ny * ny));
  }
  if (ny == 2 && static_cast<int>(starts.size()) < opts.restarts) {
    const SweepGrid coarse = diagonal_sweep(model, controller, 0.0, 1.5, 0.05);
    if (coarse.maximizer_index >= 0) {
      const SweepCell& cell = coarse.cells[coarse.maximizer_index];
      Eigen::Matrix2d R;
      R << cell.R11, 0.0, 0.0, cell.R22;
      starts.push_back(Eigen::Map<const Eigen::VectorXd>(R.data(), 4));
    }
  }
  const Eigen::VectorXd vec_I = Eigen::Map<const Eigen::VectorXd>(I_y.data(), ny * ny);
  for (int r = static_cast<int>(starts.size()); r < opts.restarts; ++r) {
    Eigen::VectorXd x = vec_I;
    const std::uint64_t key = mix64(mix64(opts.seed) ^ (0xA076'1D64'78BD'642Full * (std::uint64_t(r) + 1)));
    for (int i = 0; i < x.size(); ++i) {
      x(i) += 0.3 * counter_normal(key, static_cast<std::uint64_t>(i));
    }
    starts.push_back(std::move(x));
  }

  bool any_converged = false;
  for (const auto& x0 : starts) {
    Eigen::VectorXd x = x0;
    if (opts.max_evals == 0) {
      eng.evaluate(x);  // degenerate budget: record the start point only
      continue;
    }
    if (cap_active && std::isfinite(cap)) {
      // Exterior penalty rounds; each reuses the previous round's optimum.
      for (const double mu : {1e2, 1e4, 1e6, 1e8}) {
        auto [xo, conv] = eng.nelder_mead(x, mu, opts.max_evals);
        x = xo;
        any_converged = any_converged || conv;
      }
    } else {
      auto [xo, conv] = eng.nelder_mead(x, 0.0, opts.max_evals);
      x = xo;
      any_converged = any_converged || conv;
    }
  }

  if (!eng.has_best) {
    if (!std::isfinite(eng.min_resid_seen)) {
      throw PreconditionError(
          "no feasible (stabilizing) iterate was found; seed the search with "
          "R = I, which is always stabilizing when the gains are");
    }
    throw PreconditionError(
        "residual cap " + detail::fmt(cap) +
        " is unattainable among sampled stabilizing points; minimum achieved "
        "residual energy = " + detail::fmt(eng.min_resid_seen));
  }

  // Re-validate the champion through the public path so the reported numbers
  // are exactly reproducible by impact().
  const Eigen::Map<const Eigen::MatrixXd> Rbest(eng.best_x.data(), ny, ny);
  const ImpactReport final_rep = impact(model, controller, Rbest);

  SearchResult res;
  res.best_R = Rbest;
  res.best_ratio = final_rep.ratio;
  res.performance_energy = final_rep.h2_performance_sq;
  res.residual_energy = final_rep.h2_residual_sq;
  res.spectral_abscissa = final_rep.spectral_abscissa;
  res.constraint.active = cap_active;
  res.constraint.epsilon_tr = cap_active ? cap : 0.0;
  res.nominal_residual_energy = nominal.h2_residual_sq;
  res.objective = objective;
  res.evaluations = eng.evaluations;
  res.restarts = static_cast<int>(starts.size());
  res.converged = any_converged;

  if (cap_active && !(res.residual_energy <= cap + 1e-9)) {
    throw NumericError("internal: champion violates the residual cap");
  }
  return res;
}

}  // namespace

SearchResult worst_case_search(const PlantModel& model,
                               const ControllerDesign& controller,
                               const SearchOptions& options) {
  return run_search(model, controller, kInf, false, options,
                    StealthyObjective::MaxRatio);
}

SearchResult stealthy_search(const PlantModel& model,
                             const ControllerDesign& controller,
                             double epsilon_tr, const SearchOptions& options,
                             StealthyObjective objective) {
  return run_search(model, controller, epsilon_tr, true, options, objective);
}

}  // namespace h2impact
