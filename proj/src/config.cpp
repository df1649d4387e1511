#include "h2impact/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "h2impact/numerics.hpp"

namespace h2impact {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

const json& expect_object(const json& node, const std::string& path) {
  if (!node.is_object()) fail(path, "expected an object");
  return node;
}

void reject_unknown_keys(const json& node, const std::string& path,
                         const std::set<std::string>& allowed) {
  for (const auto& item : node.items()) {
    if (!allowed.count(item.key())) {
      fail(path + "." + item.key(), "unknown key");
    }
  }
}

double expect_number(const json& node, const std::string& path) {
  if (!node.is_number()) fail(path, "expected a number");
  const double v = node.get<double>();
  if (!std::isfinite(v)) fail(path, "expected a finite number");
  return v;
}

Eigen::MatrixXd expect_matrix(const json& node, const std::string& path) {
  if (!node.is_array() || node.empty()) {
    fail(path, "expected a nonempty array of row arrays");
  }
  const std::size_t rows = node.size();
  std::size_t cols = 0;
  Eigen::MatrixXd M;
  for (std::size_t i = 0; i < rows; ++i) {
    const json& row = node[i];
    if (!row.is_array() || row.empty()) {
      fail(path + "[" + std::to_string(i) + "]", "expected a row array");
    }
    if (i == 0) {
      cols = row.size();
      M.resize(rows, cols);
    } else if (row.size() != cols) {
      fail(path + "[" + std::to_string(i) + "]",
           "ragged matrix: expected " + std::to_string(cols) + " entries");
    }
    for (std::size_t j = 0; j < cols; ++j) {
      M(i, j) =
          expect_number(row[j], path + "[" + std::to_string(i) + "][" +
                                    std::to_string(j) + "]");
    }
  }
  return M;
}

void expect_dims(const Eigen::MatrixXd& M, Eigen::Index rows,
                 Eigen::Index cols, const std::string& path) {
  if (M.rows() != rows || M.cols() != cols) {
    fail(path, "expected a " + std::to_string(rows) + "x" +
                   std::to_string(cols) + " matrix, got " +
                   std::to_string(M.rows()) + "x" + std::to_string(M.cols()));
  }
}

}  // namespace

AnalysisConfig parse_config(const std::string& text,
                            const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": " + e.what());
  }
  expect_object(doc, source);
  reject_unknown_keys(doc, source, {"plant", "controller", "defaults", "detector"});

  AnalysisConfig cfg;

  if (!doc.contains("plant")) fail(source + ".plant", "missing");
  const json& plant = expect_object(doc["plant"], source + ".plant");
  reject_unknown_keys(plant, source + ".plant",
                      {"A_p", "B_p", "B_w", "C_mo", "C_po", "D_po"});
  for (const char* key : {"A_p", "B_p", "B_w", "C_mo", "C_po", "D_po"}) {
    if (!plant.contains(key)) {
      fail(source + ".plant." + key, "missing");
    }
  }
  const std::string pp = source + ".plant";
  cfg.plant.A_p = expect_matrix(plant["A_p"], pp + ".A_p");
  if (cfg.plant.A_p.rows() != cfg.plant.A_p.cols()) {
    fail(pp + ".A_p", "expected a square matrix, got " +
                          std::to_string(cfg.plant.A_p.rows()) + "x" +
                          std::to_string(cfg.plant.A_p.cols()));
  }
  const Eigen::Index n = cfg.plant.A_p.rows();
  cfg.plant.B_p = expect_matrix(plant["B_p"], pp + ".B_p");
  if (cfg.plant.B_p.rows() != n) {
    fail(pp + ".B_p", "row count must match plant.A_p (" + std::to_string(n) + ")");
  }
  cfg.plant.B_w = expect_matrix(plant["B_w"], pp + ".B_w");
  expect_dims(cfg.plant.B_w, n, n, pp + ".B_w");
  cfg.plant.C_mo = expect_matrix(plant["C_mo"], pp + ".C_mo");
  if (cfg.plant.C_mo.cols() != n) {
    fail(pp + ".C_mo", "column count must match plant.A_p (" + std::to_string(n) + ")");
  }
  cfg.plant.C_po = expect_matrix(plant["C_po"], pp + ".C_po");
  if (cfg.plant.C_po.cols() != n) {
    fail(pp + ".C_po", "column count must match plant.A_p (" + std::to_string(n) + ")");
  }
  cfg.plant.D_po = expect_matrix(plant["D_po"], pp + ".D_po");
  expect_dims(cfg.plant.D_po, cfg.plant.C_po.rows(), cfg.plant.B_p.cols(),
              pp + ".D_po");

  if (!doc.contains("controller")) fail(source + ".controller", "missing");
  const json& ctl = expect_object(doc["controller"], source + ".controller");
  reject_unknown_keys(ctl, source + ".controller",
                      {"L", "K", "B_what", "B_what_sigma"});
  const std::string cp = source + ".controller";
  for (const char* key : {"L", "K"}) {
    if (!ctl.contains(key)) fail(cp + "." + key, "missing");
  }
  cfg.controller.L = expect_matrix(ctl["L"], cp + ".L");
  expect_dims(cfg.controller.L, cfg.plant.B_p.cols(), n, cp + ".L");
  cfg.controller.K = expect_matrix(ctl["K"], cp + ".K");
  expect_dims(cfg.controller.K, n, cfg.plant.C_mo.rows(), cp + ".K");
  const bool has_mat = ctl.contains("B_what");
  const bool has_sigma = ctl.contains("B_what_sigma");
  if (has_mat == has_sigma) {
    fail(cp, "exactly one of B_what or B_what_sigma is required");
  }
  if (has_mat) {
    cfg.controller.B_what = expect_matrix(ctl["B_what"], cp + ".B_what");
    expect_dims(cfg.controller.B_what, n, n, cp + ".B_what");
  } else {
    const double sigma = expect_number(ctl["B_what_sigma"], cp + ".B_what_sigma");
    if (sigma == 0.0) fail(cp + ".B_what_sigma", "must be nonzero");
    cfg.controller.B_what = sigma * Eigen::MatrixXd::Identity(n, n);
  }

  if (doc.contains("defaults")) {
    const json& def = expect_object(doc["defaults"], source + ".defaults");
    reject_unknown_keys(def, source + ".defaults",
                        {"epsilon", "eta", "margin", "seed"});
    const std::string dp = source + ".defaults";
    if (def.contains("epsilon")) {
      cfg.defaults.epsilon = expect_number(def["epsilon"], dp + ".epsilon");
      if (!(cfg.defaults.epsilon > 0)) fail(dp + ".epsilon", "must be > 0");
    }
    if (def.contains("eta")) {
      cfg.defaults.eta = expect_number(def["eta"], dp + ".eta");
      if (!(cfg.defaults.eta > 0)) fail(dp + ".eta", "must be > 0");
    }
    if (def.contains("margin")) {
      cfg.defaults.margin = expect_number(def["margin"], dp + ".margin");
      if (cfg.defaults.margin < 0) fail(dp + ".margin", "must be >= 0");
    }
    if (def.contains("seed")) {
      if (!def["seed"].is_number_unsigned()) {
        fail(dp + ".seed", "expected a nonnegative integer");
      }
      cfg.defaults.seed = def["seed"].get<std::uint64_t>();
    }
  }

  if (doc.contains("detector")) {
    const json& det = expect_object(doc["detector"], source + ".detector");
    reject_unknown_keys(det, source + ".detector", {"epsilon_tr"});
    if (det.contains("epsilon_tr")) {
      const double e = expect_number(det["epsilon_tr"], source + ".detector.epsilon_tr");
      if (!(e > 0)) fail(source + ".detector.epsilon_tr", "must be > 0");
      cfg.epsilon_tr = e;
    }
  }

  // Semantic validation: the parsed document must describe a usable design.
  validate_dimensions(cfg.plant, cfg.controller);
  if (!is_controllable(cfg.plant.A_p, cfg.plant.B_p)) {
    fail(source + ".plant", "(A_p, B_p) is not controllable");
  }
  if (!is_observable(cfg.plant.A_p, cfg.plant.C_mo)) {
    fail(source + ".plant", "(A_p, C_mo) is not observable");
  }
  if (norms_and_condition(cfg.controller.B_what).sigma_min < 1e-12) {
    fail(source + ".controller.B_what", "must be nonsingular");
  }
  if (!gains_stabilizing(cfg.plant, cfg.controller)) {
    fail(source + ".controller",
         "gains are not stabilizing: A_p + B_p L and A_p - K C_mo must both "
         "be Hurwitz");
  }
  return cfg;
}

AnalysisConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError(path + ": cannot open config file");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

}  // namespace h2impact
