#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "h2impact/config.hpp"
#include "h2impact/report.hpp"
#include "h2impact/search.hpp"

using nlohmann::json;

namespace {

const std::string kConfig = std::string(H2IMPACT_CONFIG_DIR) + "/paper_sec5.cfg";

struct CliResult {
  int exit_code;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

CliResult run_cli(const std::string& args) {
  static int counter = 0;
  const std::string tag = std::to_string(++counter);
  const std::string out_path = "cli_stdout_" + tag + ".tmp";
  const std::string err_path = "cli_stderr_" + tag + ".tmp";
  const std::string cmd = std::string("\"") + H2IMPACT_CLI_PATH + "\" " + args +
                          " > " + out_path + " 2> " + err_path;
  const int status = std::system(cmd.c_str());
  CliResult res;
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  res.out = slurp(out_path);
  res.err = slurp(err_path);
  std::remove(out_path.c_str());
  std::remove(err_path.c_str());
  return res;
}

json strip_wall_time(const std::string& text) {
  json doc = json::parse(text);
  doc.erase("wall_time_s");
  return doc;
}

std::vector<std::string> nonempty_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

TEST_CASE("--version prints the tool version") {
  const auto res = run_cli("--version");
  CHECK(res.exit_code == 0);
  CHECK(res.out.find("1.0.0") != std::string::npos);
}

TEST_CASE("a subcommand is required") {
  const auto res = run_cli("");
  CHECK(res.exit_code != 0);
}

TEST_CASE("analyze emits the report envelope with the exact nominal ratio") {
  const auto res = run_cli("analyze --config " + kConfig);
  REQUIRE_MESSAGE(res.exit_code == 0, res.err);
  const json doc = json::parse(res.out);

  CHECK(doc.size() == 5);
  CHECK(doc.at("command") == "analyze");
  CHECK(doc.at("tool").at("name") == "h2impact");
  CHECK(doc.at("tool").at("version") == "1.0.0");
  CHECK(doc.at("wall_time_s").get<double>() >= 0.0);

  const std::string digest = doc.at("config_digest").get<std::string>();
  REQUIRE(digest.size() == 16);
  for (char c : digest) {
    CHECK(std::isxdigit(static_cast<unsigned char>(c)));
  }

  const json& impact = doc.at("results").at("impact");
  CHECK(impact.at("ratio").get<double>() ==
        doctest::Approx(1.7409320361209866).epsilon(1e-9));
  CHECK(doc.at("results").at("stability").at("stable").get<bool>());

  // The example design reuses one spectrum for both gains, so the nominal
  // loop has no trustworthy eigenbasis; analyze reports that, not a crash.
  CHECK(doc.at("results").at("stealth").contains("error"));
}

TEST_CASE("analyze accepts a full routing matrix and reports its modes") {
  const auto res =
      run_cli("analyze --config " + kConfig + " --R \"0.7,0.2;0.02,0.68\"");
  REQUIRE_MESSAGE(res.exit_code == 0, res.err);
  const json doc = json::parse(res.out);
  const json& impact = doc.at("results").at("impact");
  CHECK(impact.at("ratio").get<double>() ==
        doctest::Approx(5.224002197148444).epsilon(1e-9));
  CHECK(impact.at("R") == json{{0.7, 0.2}, {0.02, 0.68}});
  const json& stealth = doc.at("results").at("stealth");
  REQUIRE(stealth.contains("modes"));
  CHECK(stealth.at("modes").size() >= 3);
  CHECK(stealth.at("stealth_score").get<double>() > 0.0);
}

TEST_CASE("analyze output is deterministic apart from the wall time") {
  const std::string cmd =
      "analyze --config " + kConfig + " --R \"0.76,0.13;0,0.7\"";
  const auto a = run_cli(cmd);
  const auto b = run_cli(cmd);
  REQUIRE(a.exit_code == 0);
  REQUIRE(b.exit_code == 0);
  CHECK(strip_wall_time(a.out) == strip_wall_time(b.out));
}

TEST_CASE("destabilizing routing exits with the dedicated code") {
  const auto res = run_cli("analyze --config " + kConfig + " --R \"0,0;0,0\"");
  CHECK(res.exit_code == 2);
  CHECK(res.err.find("error:") != std::string::npos);
  CHECK(res.err.find("abscissa") != std::string::npos);
  CHECK(res.out.empty());
}

TEST_CASE("config and argument errors exit with the config code") {
  CHECK(run_cli("analyze --config /nonexistent/h2impact.cfg").exit_code == 3);
  CHECK(run_cli("analyze --config " + kConfig + " --R \"0.5,x;0,1\"")
            .exit_code == 3);
  CHECK(run_cli("sweep --config " + kConfig + " --grid 0:1").exit_code == 3);
}

TEST_CASE("dimension mismatches exit with the precondition code") {
  const auto res = run_cli("analyze --config " + kConfig +
                           " --R \"1,0,0;0,1,0;0,0,1\"");
  CHECK(res.exit_code == 4);
  CHECK(res.err.find("dimension") != std::string::npos);
}

TEST_CASE("sweep CSV output reproduces the library sweep exactly") {
  const auto res =
      run_cli("sweep --config " + kConfig + " --grid 0.6:0.8:0.1");
  REQUIRE_MESSAGE(res.exit_code == 0, res.err);

  const auto lines = nonempty_lines(res.out);
  REQUIRE(lines.size() == 10);  // header + 3x3 cells
  CHECK(lines.front() == "R11,R22,stable,ratio,h2_perf_sq,h2_resid_sq");

  const auto parsed = h2impact::sweep_from_csv(res.out);
  const auto cfg = h2impact::load_config(kConfig);
  const auto direct =
      h2impact::diagonal_sweep(cfg.plant, cfg.controller, 0.6, 0.8, 0.1);
  REQUIRE(parsed.cells.size() == direct.cells.size());
  for (std::size_t i = 0; i < direct.cells.size(); ++i) {
    CHECK(parsed.cells[i].R11 == direct.cells[i].R11);
    CHECK(parsed.cells[i].stable == direct.cells[i].stable);
    if (direct.cells[i].stable) {
      CHECK(parsed.cells[i].ratio == direct.cells[i].ratio);
    }
  }
  CHECK(parsed.maximizer_index == direct.maximizer_index);
}

TEST_CASE("sweep JSON output is deterministic apart from the wall time") {
  const std::string cmd =
      "sweep --config " + kConfig + " --grid 0.9:1.1:0.1 --format json";
  const auto a = run_cli(cmd);
  const auto b = run_cli(cmd);
  REQUIRE(a.exit_code == 0);
  REQUIRE(b.exit_code == 0);
  CHECK(strip_wall_time(a.out) == strip_wall_time(b.out));
  const json doc = json::parse(a.out);
  CHECK(doc.at("results").at("sweep").at("points_per_axis").get<int>() == 3);
}

TEST_CASE("certify verifies both channels and recovers the ratio") {
  const auto res = run_cli("certify --config " + kConfig +
                           " --R \"0.76,0.13;0,0.7\"");
  REQUIRE_MESSAGE(res.exit_code == 0, res.err);
  const json doc = json::parse(res.out);
  const json& results = doc.at("results");
  for (const char* key : {"performance", "residual"}) {
    const json& channel = results.at(key);
    CHECK(channel.at("verification").at("pass").get<bool>());
    CHECK(channel.at("certificate").at("gamma").get<double>() > 0.0);
    for (const auto& check : channel.at("certificate").at("checks")) {
      CHECK_MESSAGE(check.at("pass").get<bool>(),
                    check.at("name").get<std::string>());
    }
  }
  CHECK(results.at("ratio_bisection").at("alpha_star").get<double>() ==
        doctest::Approx(4.230106494615733).epsilon(1e-5));
}

TEST_CASE("stealthy uses the detector threshold from the config") {
  const auto res = run_cli("stealthy --config " + kConfig +
                           " --restarts 4 --max-evals 200");
  REQUIRE_MESSAGE(res.exit_code == 0, res.err);
  const json doc = json::parse(res.out);
  const json& search = doc.at("results").at("search");
  CHECK(search.at("constraint").at("epsilon_tr").get<double>() == 2.0);
  CHECK(search.at("residual_energy").get<double>() <= 2.0 + 1e-9);
  CHECK(search.at("objective") == "max_ratio");
}

TEST_CASE("stealthy reports unattainable caps as a precondition failure") {
  const auto res = run_cli("stealthy --config " + kConfig +
                           " --eps-tr 0.5 --restarts 3 --max-evals 100");
  CHECK(res.exit_code == 4);
  CHECK(res.err.find("unattainable") != std::string::npos);
}

TEST_CASE("bounds reports both analytical bounds at the nominal point") {
  const auto res = run_cli("bounds --config " + kConfig);
  REQUIRE_MESSAGE(res.exit_code == 0, res.err);
  const json doc = json::parse(res.out);
  const json& pert = doc.at("results").at("gramian_perturbation");
  CHECK(pert.at("admissible").get<bool>());
  CHECK(pert.at("bound").get<double>() ==
        doctest::Approx(1401.991225241375).epsilon(1e-6));
  const json& semi = doc.at("results").at("semigroup_margin");
  CHECK(semi.at("alpha_star").get<double>() == 0.1);
  CHECK(semi.at("M_star").get<double>() ==
        doctest::Approx(4.49829628337029).epsilon(1e-6));
  CHECK(semi.at("bound").get<double>() > 0.0);
}

TEST_CASE("bounds encodes an inadmissible perturbation level as inf") {
  const auto res = run_cli("bounds --config " + kConfig + " --delta 0.5");
  REQUIRE_MESSAGE(res.exit_code == 0, res.err);
  const json doc = json::parse(res.out);
  const json& pert = doc.at("results").at("gramian_perturbation");
  CHECK_FALSE(pert.at("admissible").get<bool>());
  CHECK(pert.at("bound") == json("inf"));
}

TEST_CASE("trajectory emits the requested horizon grid") {
  const auto csv = run_cli("trajectory --config " + kConfig +
                           " --t-max 10 --points 5");
  REQUIRE_MESSAGE(csv.exit_code == 0, csv.err);
  const auto lines = nonempty_lines(csv.out);
  REQUIRE(lines.size() == 6);
  CHECK(lines.front() == "T,ratio,h2_perf_sq,h2_resid_sq");
  CHECK(lines[1].rfind("2,", 0) == 0);
  CHECK(lines[5].rfind("10,", 0) == 0);

  const auto js = run_cli("trajectory --config " + kConfig +
                          " --t-max 10 --points 5 --format json");
  REQUIRE(js.exit_code == 0);
  const json doc = json::parse(js.out);
  const json& points = doc.at("results").at("trajectory");
  REQUIRE(points.size() == 5);
  CHECK(points.back().at("T").get<double>() == 10.0);
  CHECK(points.back().at("ratio").get<double>() > 0.0);
}

TEST_CASE("montecarlo agrees with the exact energies") {
  const auto res = run_cli("montecarlo --config " + kConfig +
                           " --paths 500 --step 0.01 --horizon 30 --seed 7");
  REQUIRE_MESSAGE(res.exit_code == 0, res.err);
  const json doc = json::parse(res.out);
  const json& results = doc.at("results");
  CHECK(results.at("monte_carlo").at("num_paths").get<int>() == 500);
  CHECK(results.at("monte_carlo").at("noise_seed").get<std::uint64_t>() == 7);
  CHECK(results.at("relative_error").at("performance").get<double>() < 0.1);
  CHECK(results.at("relative_error").at("residual").get<double>() < 0.1);
}

TEST_CASE("montecarlo refuses destabilizing routing before simulating") {
  const auto res = run_cli("montecarlo --config " + kConfig +
                           " --R \"0,0;0,0\" --paths 10");
  CHECK(res.exit_code == 2);
}

TEST_CASE("--out writes the document to a file and keeps stdout quiet") {
  const std::string path = "cli_out_doc.tmp";
  const auto res =
      run_cli("analyze --config " + kConfig + " --out " + path);
  REQUIRE_MESSAGE(res.exit_code == 0, res.err);
  CHECK(res.out.empty());
  const json doc = json::parse(slurp(path));
  CHECK(doc.at("command") == "analyze");
  std::remove(path.c_str());
}
