// Command-line front end: every subcommand loads a config, runs one library
// entry point, and prints either a JSON report envelope or raw CSV. Library
// exceptions map one-to-one onto process exit codes.

#include <cctype>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "h2impact/bounds.hpp"
#include "h2impact/config.hpp"
#include "h2impact/errors.hpp"
#include "h2impact/h2.hpp"
#include "h2impact/lmi.hpp"
#include "h2impact/ncs.hpp"
#include "h2impact/report.hpp"
#include "h2impact/search.hpp"
#include "h2impact/version.hpp"

namespace {

using h2impact::ConfigError;
using nlohmann::json;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

struct LoadedConfig {
  h2impact::AnalysisConfig cfg;
  std::string digest;  // FNV-1a over the canonicalized (key-sorted) document
};

LoadedConfig load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  const std::string text = buf.str();

  std::string digest;
  try {
    const std::string canonical = json::parse(text).dump();
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(h2impact::fnv1a64(canonical)));
    digest = hex;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return {h2impact::parse_config(text, path), digest};
}

h2impact::RoutingMatrix parse_routing(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::stringstream ss(text);
  std::string row;
  while (std::getline(ss, row, ';')) {
    std::vector<double> vals;
    std::stringstream rs(row);
    std::string cell;
    while (std::getline(rs, cell, ',')) {
      std::size_t pos = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &pos);
      } catch (const std::exception&) {
        throw ConfigError("--R: cannot parse entry '" + cell + "'");
      }
      while (pos < cell.size() &&
             std::isspace(static_cast<unsigned char>(cell[pos])))
        ++pos;
      if (pos != cell.size())
        throw ConfigError("--R: trailing characters in entry '" + cell + "'");
      vals.push_back(v);
    }
    if (vals.empty()) throw ConfigError("--R: empty row");
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw ConfigError("--R: empty matrix");
  const std::size_t cols = rows.front().size();
  for (const auto& r : rows)
    if (r.size() != cols) throw ConfigError("--R: rows have unequal lengths");

  h2impact::RoutingMatrix R(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j) R(i, j) = rows[i][j];
  return R;
}

h2impact::RoutingMatrix routing_or_identity(const std::string& text, int n_y) {
  if (text.empty())
    return Eigen::MatrixXd::Identity(n_y, n_y);
  return parse_routing(text);
}

void parse_grid(const std::string& text, double& lo, double& hi, double& step) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ':')) parts.push_back(part);
  if (parts.size() != 3)
    throw ConfigError("--grid: expected min:max:step, got '" + text + "'");
  try {
    lo = std::stod(parts[0]);
    hi = std::stod(parts[1]);
    step = std::stod(parts[2]);
  } catch (const std::exception&) {
    throw ConfigError("--grid: cannot parse '" + text + "'");
  }
}

// --out writes the document to a file; otherwise it goes to standard output.
void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text << "\n";
    return;
  }
  std::ofstream f(out_path);
  if (!f) throw ConfigError("cannot open output file: " + out_path);
  f << text << "\n";
}

void emit_report(const std::string& command, const LoadedConfig& loaded,
                 json results, const Timer& timer,
                 const std::string& out_path) {
  const json doc = h2impact::make_report(command, loaded.digest,
                                         std::move(results), timer.seconds());
  emit(doc.dump(2), out_path);
}

struct CommonArgs {
  std::string config_path;
  std::string routing;
  std::string out_path;
};

void add_common(CLI::App* sub, CommonArgs& args, bool with_routing = true) {
  sub->add_option("--config", args.config_path, "analysis config file (JSON)")
      ->required();
  if (with_routing)
    sub->add_option("--R", args.routing,
                    "routing matrix, rows separated by ';' (default: identity)");
  sub->add_option("--out", args.out_path,
                  "write the document to this file instead of stdout");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "h2impact: H2 impact analysis of multiplicative sensor-routing attacks "
      "on observer-based control loops"};
  app.set_version_flag("--version", H2IMPACT_VERSION);
  app.require_subcommand(1);

  // --- analyze -------------------------------------------------------------
  auto* analyze = app.add_subcommand(
      "analyze", "exact H2 impact ratio and stealth diagnostics for one R");
  CommonArgs an_args;
  add_common(analyze, an_args);
  double an_eta = -1.0;
  analyze->add_option("--eta", an_eta,
                      "stealth-score regularizer (default: from config)");
  analyze->callback([&] {
    Timer timer;
    const LoadedConfig loaded = load(an_args.config_path);
    const auto R = routing_or_identity(an_args.routing, loaded.cfg.plant.n_y());
    const auto sys =
        h2impact::assemble_closed_loop(loaded.cfg.plant, loaded.cfg.controller, R);
    const auto verdict =
        h2impact::classify_stability(sys, loaded.cfg.defaults.margin);
    const auto rep = h2impact::impact(sys, R);

    json results;
    results["impact"] = h2impact::to_json(rep);
    results["stability"] = {{"stable", verdict.stable},
                            {"spectral_abscissa", h2impact::json_number(verdict.abscissa)},
                            {"margin", h2impact::json_number(verdict.margin)}};
    const double eta = an_eta >= 0.0 ? an_eta : loaded.cfg.defaults.eta;
    try {
      results["stealth"] = h2impact::to_json(h2impact::stealth_diagnostic(sys, eta));
    } catch (const h2impact::NumericError& e) {
      // A defective eigenbasis (for example, nominal loops whose two gain
      // spectra coincide) has no trustworthy per-mode decomposition.
      results["stealth"] = ::json{{"error", e.what()}};
    }
    emit_report("analyze", loaded, std::move(results), timer, an_args.out_path);
  });

  // --- sweep ---------------------------------------------------------------
  auto* sweep = app.add_subcommand(
      "sweep", "ratio surface over diagonal R = diag(R11, R22)");
  CommonArgs sw_args;
  add_common(sweep, sw_args, /*with_routing=*/false);
  std::string sw_grid = "0:1.5:0.01";
  std::string sw_format = "csv";
  sweep->add_option("--grid", sw_grid, "diagonal grid as min:max:step");
  sweep->add_option("--format", sw_format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  sweep->callback([&] {
    Timer timer;
    const LoadedConfig loaded = load(sw_args.config_path);
    double lo = 0.0, hi = 0.0, step = 0.0;
    parse_grid(sw_grid, lo, hi, step);
    const auto grid = h2impact::diagonal_sweep(loaded.cfg.plant,
                                               loaded.cfg.controller, lo, hi, step);
    if (sw_format == "csv") {
      emit(h2impact::sweep_to_csv(grid), sw_args.out_path);
    } else {
      json results;
      results["sweep"] = h2impact::to_json(grid);
      emit_report("sweep", loaded, std::move(results), timer, sw_args.out_path);
    }
  });

  // --- search / stealthy ---------------------------------------------------
  auto* search = app.add_subcommand(
      "search", "worst-case routing matrix maximizing the impact ratio");
  auto* stealthy = app.add_subcommand(
      "stealthy", "worst-case routing matrix under a residual-energy cap");
  CommonArgs se_args, st_args;
  add_common(search, se_args, /*with_routing=*/false);
  add_common(stealthy, st_args, /*with_routing=*/false);

  h2impact::SearchOptions se_opts, st_opts;
  std::uint64_t se_seed = 0, st_seed = 0;
  std::string se_warm, st_warm;
  double st_eps_tr = 0.0;
  std::string st_mode = "ratio";
  for (auto [sub, opts, seed, warm] :
       {std::tuple{search, &se_opts, &se_seed, &se_warm},
        std::tuple{stealthy, &st_opts, &st_seed, &st_warm}}) {
    sub->add_option("--restarts", opts->restarts, "number of multistart restarts");
    sub->add_option("--max-evals", opts->max_evals,
                    "objective evaluations per restart");
    sub->add_option("--margin", opts->margin,
                    "required stability margin during the search");
    sub->add_option("--seed", *seed, "search RNG seed (default: from config)");
    sub->add_option("--warm", *warm, "warm-start routing matrix 'a,b;c,d'");
  }
  stealthy->add_option("--eps-tr", st_eps_tr,
                       "residual-energy cap (default: detector threshold "
                       "from config)");
  stealthy->add_option("--mode", st_mode, "objective under the cap")
      ->check(CLI::IsMember({"ratio", "performance"}));

  auto run_search = [&](const std::string& command, CLI::App* sub,
                        CommonArgs& args, h2impact::SearchOptions& opts,
                        std::uint64_t seed_flag, const std::string& warm) {
    Timer timer;
    const LoadedConfig loaded = load(args.config_path);
    opts.seed = sub->count("--seed") ? seed_flag : loaded.cfg.defaults.seed;
    if (!warm.empty()) opts.warm_start = parse_routing(warm);

    h2impact::SearchResult res;
    if (command == "search") {
      res = h2impact::worst_case_search(loaded.cfg.plant, loaded.cfg.controller,
                                        opts);
    } else {
      double eps_tr = 0.0;
      if (sub->count("--eps-tr")) {
        eps_tr = st_eps_tr;
      } else if (loaded.cfg.epsilon_tr) {
        eps_tr = *loaded.cfg.epsilon_tr;
      } else {
        throw ConfigError(
            "stealthy: no --eps-tr given and the config has no detector "
            "threshold");
      }
      const auto objective = st_mode == "ratio"
                                 ? h2impact::StealthyObjective::MaxRatio
                                 : h2impact::StealthyObjective::MaxPerformance;
      res = h2impact::stealthy_search(loaded.cfg.plant, loaded.cfg.controller,
                                      eps_tr, opts, objective);
    }
    json results;
    results["search"] = h2impact::to_json(res);
    emit_report(command, loaded, std::move(results), timer, args.out_path);
  };
  search->callback(
      [&] { run_search("search", search, se_args, se_opts, se_seed, se_warm); });
  stealthy->callback([&] {
    run_search("stealthy", stealthy, st_args, st_opts, st_seed, st_warm);
  });

  // --- bounds ----------------------------------------------------------------
  auto* bounds = app.add_subcommand(
      "bounds", "analytical worst-case upper bounds on the impact ratio");
  CommonArgs bo_args;
  add_common(bounds, bo_args);
  double bo_alpha = 0.1;
  double bo_delta = 0.0;
  bounds->add_option("--alpha-star", bo_alpha,
                     "certified exponential decay rate of the closed loop");
  bounds->add_option("--delta", bo_delta,
                     "use this relative Gramian perturbation instead of the "
                     "derived one");
  bounds->callback([&] {
    Timer timer;
    const LoadedConfig loaded = load(bo_args.config_path);
    const auto R = routing_or_identity(bo_args.routing, loaded.cfg.plant.n_y());

    json results;
    const auto pert =
        bounds->count("--delta")
            ? h2impact::gramian_perturbation_bound(loaded.cfg.plant,
                                                   loaded.cfg.controller, R,
                                                   bo_delta)
            : h2impact::gramian_perturbation_bound(loaded.cfg.plant,
                                                   loaded.cfg.controller, R);
    results["gramian_perturbation"] = h2impact::to_json(pert);
    results["semigroup_margin"] = h2impact::to_json(h2impact::semigroup_margin_bound(
        loaded.cfg.plant, loaded.cfg.controller, R, bo_alpha));
    emit_report("bounds", loaded, std::move(results), timer, bo_args.out_path);
  });

  // --- certify ---------------------------------------------------------------
  auto* certify = app.add_subcommand(
      "certify", "H2 certificates for both output channels plus the ratio "
                 "recovered by trace-condition bisection");
  CommonArgs ce_args;
  add_common(certify, ce_args);
  double ce_eps = -1.0;
  double ce_tol = 1e-8;
  certify->add_option("--eps", ce_eps,
                      "certificate slack epsilon (default: from config)");
  certify->add_option("--tol", ce_tol, "bisection tolerance on the ratio");
  certify->callback([&] {
    Timer timer;
    const LoadedConfig loaded = load(ce_args.config_path);
    const auto R = routing_or_identity(ce_args.routing, loaded.cfg.plant.n_y());
    const auto sys =
        h2impact::assemble_closed_loop(loaded.cfg.plant, loaded.cfg.controller, R);
    const double eps = ce_eps > 0.0 ? ce_eps : loaded.cfg.defaults.epsilon;

    json results;
    for (auto [key, channel] :
         {std::pair{"performance", h2impact::OutputChannel::Performance},
          std::pair{"residual", h2impact::OutputChannel::Residual}}) {
      const auto cert = h2impact::build_h2_certificate(sys, channel, eps);
      const auto ver = h2impact::verify_h2_certificate(sys, cert);
      results[key] = {{"certificate", h2impact::to_json(cert)},
                      {"verification", h2impact::to_json(ver)}};
    }
    results["ratio_bisection"] =
        h2impact::to_json(h2impact::ratio_bisection(sys, ce_tol));
    emit_report("certify", loaded, std::move(results), timer, ce_args.out_path);
  });

  // --- trajectory --------------------------------------------------------------
  auto* trajectory = app.add_subcommand(
      "trajectory", "finite-horizon impact ratio as a function of the horizon");
  CommonArgs tr_args;
  add_common(trajectory, tr_args);
  double tr_tmax = 50.0;
  int tr_points = 200;
  std::string tr_format = "csv";
  trajectory->add_option("--t-max", tr_tmax, "largest horizon");
  trajectory->add_option("--points", tr_points, "number of grid points");
  trajectory->add_option("--format", tr_format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  trajectory->callback([&] {
    Timer timer;
    const LoadedConfig loaded = load(tr_args.config_path);
    const auto R = routing_or_identity(tr_args.routing, loaded.cfg.plant.n_y());
    const auto sys =
        h2impact::assemble_closed_loop(loaded.cfg.plant, loaded.cfg.controller, R);
    if (tr_tmax <= 0.0 || tr_points < 1)
      throw ConfigError("trajectory: --t-max must be > 0 and --points >= 1");
    std::vector<double> grid(tr_points);
    for (int k = 0; k < tr_points; ++k)
      grid[k] = tr_tmax * static_cast<double>(k + 1) / tr_points;
    const auto curve = h2impact::ratio_trajectory(sys, R, grid);
    if (tr_format == "csv") {
      emit(h2impact::trajectory_to_csv(curve), tr_args.out_path);
    } else {
      json points = json::array();
      for (const auto& pt : curve) points.push_back(h2impact::to_json(pt));
      json results;
      results["trajectory"] = std::move(points);
      emit_report("trajectory", loaded, std::move(results), timer,
                  tr_args.out_path);
    }
  });

  // --- montecarlo ----------------------------------------------------------------
  auto* montecarlo = app.add_subcommand(
      "montecarlo",
      "Euler-Maruyama cross-check of the Gramian output energies");
  CommonArgs mc_args;
  add_common(montecarlo, mc_args);
  int mc_paths = 1000;
  double mc_step = 0.01;
  double mc_horizon = 50.0;
  std::uint64_t mc_seed = 0;
  montecarlo->add_option("--paths", mc_paths, "number of noise realizations");
  montecarlo->add_option("--step", mc_step, "Euler-Maruyama step size");
  montecarlo->add_option("--horizon", mc_horizon, "simulation end time");
  montecarlo->add_option("--seed", mc_seed,
                         "noise seed (default: from config)");
  montecarlo->callback([&] {
    Timer timer;
    const LoadedConfig loaded = load(mc_args.config_path);
    const auto R = routing_or_identity(mc_args.routing, loaded.cfg.plant.n_y());
    const auto sys =
        h2impact::assemble_closed_loop(loaded.cfg.plant, loaded.cfg.controller, R);
    const auto exact = h2impact::impact(sys, R);  // exit 2 before simulating
    const std::uint64_t seed =
        montecarlo->count("--seed") ? mc_seed : loaded.cfg.defaults.seed;
    const auto mc =
        h2impact::monte_carlo_energy(sys, mc_step, mc_horizon, mc_paths, seed);

    json results;
    results["exact"] = h2impact::to_json(exact);
    results["monte_carlo"] = h2impact::to_json(mc);
    results["relative_error"] = {
        {"performance",
         h2impact::json_number(std::abs(mc.performance_energy -
                                        exact.h2_performance_sq) /
                               exact.h2_performance_sq)},
        {"residual", h2impact::json_number(
                         std::abs(mc.residual_energy - exact.h2_residual_sq) /
                         exact.h2_residual_sq)}};
    emit_report("montecarlo", loaded, std::move(results), timer,
                mc_args.out_path);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const h2impact::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(h2impact::ExitCode::NumericError);
  }
  return 0;
}
