#include "h2impact/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "h2impact/numerics.hpp"

namespace h2impact {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct NominalData {
  double kappa_P;
  double H_norm;
  double P_norm;
};

NominalData nominal_conditioning(const PlantModel& model,
                                 const ControllerDesign& controller) {
  const int ny = model.n_y();
  const ClosedLoopSystem nominal = assemble_closed_loop(
      model, controller, Eigen::MatrixXd::Identity(ny, ny));
  if (nominal.spectral_abscissa >= 0.0) {
    throw StabilityError("nominal closed loop (R = I) is unstable",
                         nominal.spectral_abscissa);
  }
  const Eigen::MatrixXd P =
      solve_lyapunov(nominal.A_R, nominal.B * nominal.B.transpose()).X;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P);
  const double lmin = es.eigenvalues().minCoeff();
  const double lmax = es.eigenvalues().maxCoeff();
  if (lmin <= 0.0) {
    throw NumericError("nominal Gramian is numerically singular");
  }
  const int m = nominal.state_dim();
  const Eigen::MatrixXd H =
      solve_lyapunov(nominal.A_R, Eigen::MatrixXd::Identity(m, m)).X;
  return {lmax / lmin, spectral_norm(H), lmax};
}

PerturbationBoundReport perturbation_bound_impl(
    const PlantModel& model, const ControllerDesign& controller,
    const RoutingMatrix& R, bool derive_delta, double given_delta_R) {
  const AttackPerturbation pert = attack_perturbation(model, controller, R);
  const NominalData nom = nominal_conditioning(model, controller);
  const ClosedLoopSystem nominal_loop = assemble_closed_loop(
      model, controller, Eigen::MatrixXd::Identity(model.n_y(), model.n_y()));

  PerturbationBoundReport rep;
  rep.kappa_P = nom.kappa_P;
  rep.H_norm = nom.H_norm;
  rep.delta_A_norm = spectral_norm(pert.Delta_A_R);
  rep.norm_E_R_F_sq = pert.E_R.squaredNorm();
  rep.norm_Cr_F_sq = pert.C_r_nominal.squaredNorm();
  rep.norm_Cp_F_sq = nominal_loop.C_p.squaredNorm();

  if (derive_delta) {
    const double h = 2.0 * rep.H_norm * rep.delta_A_norm;
    const double smallness_cap = 1.0 / (2.0 * rep.H_norm * (1.0 + rep.kappa_P));
    if (h >= 1.0 || rep.delta_A_norm > smallness_cap) {
      rep.delta_R = (h >= 1.0) ? kInf : h / (1.0 - h);
      rep.admissible = false;
      rep.bound = kInf;
      return rep;
    }
    rep.delta_R = h / (1.0 - h);
  } else {
    if (given_delta_R < 0.0 || given_delta_R >= 1.0) {
      throw PreconditionError("given delta_R must lie in [0, 1)");
    }
    rep.delta_R = given_delta_R;
  }

  rep.admissible = rep.delta_R * rep.kappa_P < 1.0;
  if (!rep.admissible) {
    rep.bound = kInf;
    return rep;
  }
  rep.bound = rep.kappa_P * (1.0 + rep.delta_R) /
              (1.0 - rep.delta_R * rep.kappa_P) * rep.norm_Cp_F_sq /
              (rep.norm_E_R_F_sq + rep.norm_Cr_F_sq);
  return rep;
}

}  // namespace

PerturbationBoundReport gramian_perturbation_bound(
    const PlantModel& model, const ControllerDesign& controller,
    const RoutingMatrix& R) {
  return perturbation_bound_impl(model, controller, R, true, 0.0);
}

PerturbationBoundReport gramian_perturbation_bound(
    const PlantModel& model, const ControllerDesign& controller,
    const RoutingMatrix& R, double given_delta_R) {
  return perturbation_bound_impl(model, controller, R, false, given_delta_R);
}

SemigroupEstimate estimate_semigroup(const Eigen::MatrixXd& A,
                                     double alpha_star,
                                     std::vector<double> probe_grid) {
  if (!(alpha_star > 0.0)) {
    throw PreconditionError("alpha_star must be positive");
  }
  const double abscissa = spectral_abscissa(A);
  if (abscissa > -alpha_star + 1e-9) {
    throw PreconditionError(
        "decay margin violated: spectral abscissa " + detail::fmt(abscissa) +
        " is not below -alpha_star = " + detail::fmt(-alpha_star));
  }

  const double T_cap = 20.0 / alpha_star;
  const int base_points = 2000;
  probe_grid.reserve(probe_grid.size() + base_points + 1);
  for (int i = 0; i <= base_points; ++i) {
    probe_grid.push_back(T_cap * i / base_points);
  }
  std::sort(probe_grid.begin(), probe_grid.end());
  for (double t : probe_grid) {
    if (t < 0.0 || t > T_cap * (1.0 + 1e-12)) {
      throw PreconditionError("probe times must lie in [0, 20/alpha_star]");
    }
  }

  // Growth factor g(t) = ||e^{At}||_2 e^{alpha t}.
  auto growth = [&](double t) {
    return spectral_norm(matrix_exponential(A * t)) * std::exp(alpha_star * t);
  };

  double best_g = 1.0;  // t = 0 gives exactly 1
  double best_t = 0.0;
  SemigroupEstimate est;
  est.alpha_star = alpha_star;
  est.certificate_samples.reserve(probe_grid.size());
  for (double t : probe_grid) {
    const double g = growth(t);
    if (g > best_g) {
      best_g = g;
      best_t = t;
    }
    est.certificate_samples.push_back({t, 0.0, 0.0});
    est.certificate_samples.back().norm_expAt = g * std::exp(-alpha_star * t);
  }

  // Local refinement around the coarse maximizer.
  double lo = std::max(0.0, best_t - 2.0 * T_cap / base_points);
  double hi = std::min(T_cap, best_t + 2.0 * T_cap / base_points);
  for (int pass = 0; pass < 3; ++pass) {
    const int fine = 40;
    double pass_t = best_t;
    for (int i = 0; i <= fine; ++i) {
      const double t = lo + (hi - lo) * i / fine;
      const double g = growth(t);
      if (g > best_g) {
        best_g = g;
        pass_t = t;
      }
    }
    const double w = (hi - lo) / fine;
    best_t = pass_t;
    lo = std::max(0.0, best_t - 2.0 * w);
    hi = std::min(T_cap, best_t + 2.0 * w);
  }

  est.M_star = std::max(1.0, best_g) * 1.05;
  for (auto& s : est.certificate_samples) {
    s.envelope = est.M_star * std::exp(-alpha_star * s.t);
  }
  return est;
}

SemigroupEstimate estimate_semigroup(const ClosedLoopSystem& sys,
                                     double alpha_star,
                                     std::vector<double> probe_grid) {
  return estimate_semigroup(sys.A_R, alpha_star, std::move(probe_grid));
}

SemigroupBoundReport semigroup_margin_bound(const PlantModel& model,
                                            const ControllerDesign& controller,
                                            const RoutingMatrix& R,
                                            double alpha_star) {
  const ClosedLoopSystem sys = assemble_closed_loop(model, controller, R);
  const AttackPerturbation pert = attack_perturbation(model, controller, R);

  SemigroupBoundReport rep;
  rep.alpha_star = alpha_star;
  rep.A_R_norm = spectral_norm(sys.A_R);
  rep.B_norm = spectral_norm(sys.B);
  rep.sigma_min_B = norms_and_condition(sys.B).sigma_min;
  rep.norm_E_R_F_sq = pert.E_R.squaredNorm();
  rep.norm_Cr_F_sq = pert.C_r_nominal.squaredNorm();
  rep.norm_Cp_F_sq = sys.C_p.squaredNorm();

  if (rep.sigma_min_B <= 1e-10) {
    throw PreconditionError(
        "B is rank deficient (sigma_min = " + detail::fmt(rep.sigma_min_B) +
        "); the decay-margin bound requires full column rank");
  }
  if (!(sys.spectral_abscissa <= -alpha_star)) {
    throw PreconditionError(
        "insufficient stability margin: spectral abscissa " +
        detail::fmt(sys.spectral_abscissa) + " exceeds -alpha_star = " +
        detail::fmt(-alpha_star));
  }

  rep.M_star = estimate_semigroup(sys.A_R, alpha_star).M_star;
  rep.bound = 8.0 * rep.M_star * rep.M_star * rep.A_R_norm * rep.B_norm *
              rep.B_norm / (rep.sigma_min_B * rep.sigma_min_B * alpha_star) *
              rep.norm_Cp_F_sq / (rep.norm_E_R_F_sq + rep.norm_Cr_F_sq);
  return rep;
}

StealthDiagnostic stealth_diagnostic(const ClosedLoopSystem& sys, double eta) {
  if (!(eta > 0.0)) throw PreconditionError("eta must be positive");
  Eigen::EigenSolver<Eigen::MatrixXd> es(sys.A_R);
  if (es.info() != Eigen::Success) {
    throw NumericError("eigendecomposition of A_R failed");
  }
  const Eigen::MatrixXcd V = es.eigenvectors();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(V);
  const double cond = svd.singularValues()(0) /
                      svd.singularValues()(svd.singularValues().size() - 1);
  if (!(cond < 1e8)) {
    throw NumericError(
        "A_R is near defective (eigenvector condition " + detail::fmt(cond) +
        " > 1e8); per-mode visibility scores would not be trustworthy");
  }

  StealthDiagnostic diag;
  diag.eta = eta;
  diag.stealth_score = 0.0;
  for (Eigen::Index i = 0; i < V.cols(); ++i) {
    if (es.eigenvalues()(i).imag() < 0.0) continue;  // one entry per pair
    Eigen::VectorXcd v = V.col(i);
    v /= v.norm();
    StealthMode mode;
    mode.eigenvalue = es.eigenvalues()(i);
    mode.residual_visibility = (sys.C_rR * v).norm();
    mode.performance_visibility = (sys.C_p * v).norm();
    mode.score =
        mode.performance_visibility / (mode.residual_visibility + eta);
    diag.stealth_score = std::max(diag.stealth_score, mode.score);
    diag.modes.push_back(mode);
  }
  std::sort(diag.modes.begin(), diag.modes.end(),
            [](const StealthMode& a, const StealthMode& b) {
              return a.score > b.score;
            });
  return diag;
}

}  // namespace h2impact
