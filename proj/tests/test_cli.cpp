#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mmot/config.hpp"
#include "mmot/presets.hpp"
#include "mmot/run.hpp"

using namespace mmot;
using nlohmann::json;

namespace {

json minimal() {
  return json::parse(R"({
    "version": 1,
    "cost": {"kind": "builtin", "name": "bilinear", "m": 2, "n": 1,
             "params": {"coefficients": [[0, -1], [-1, 0]]}},
    "points": [[[0.5], [0.5]]]
  })");
}

std::vector<std::string> errors_of(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.errors();
  }
  return {};
}

bool any_contains(const std::vector<std::string>& errors, const std::string& needle) {
  for (const auto& e : errors) {
    if (e.find(needle) != std::string::npos) return true;
  }
  return false;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int exit_status(const std::string& command) {
  const int raw = std::system((command + " > /dev/null 2>&1").c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

}  // namespace

TEST_CASE("minimal configuration parses") {
  const auto cfg = parse_config(std::string_view(minimal().dump()));
  REQUIRE(cfg.cost.has_value());
  CHECK(cfg.cost->marginals() == 2);
  CHECK(cfg.points.size() == 1);
  CHECK(cfg.weights_mode == "uniform");
  CHECK_FALSE(cfg.solver.has_value());
}

TEST_CASE("weights that do not sum to one") {
  auto doc = minimal();
  doc["cost"] = json::parse(R"({"name": "bilinear", "m": 3, "n": 1,
      "params": {"coefficients": [[0,-1,-1],[-1,0,-1],[-1,-1,0]]}})");
  doc["points"] = json::parse("[[[0], [0], [0]]]");
  doc["weights"] = json::parse(R"({"explicit": [{"group": [1], "t": 0.5}, {"group": [1, 2], "t": 0.4}]})");
  const auto errors = errors_of(doc);
  REQUIRE(errors.size() == 1);
  CHECK(errors[0] == "/weights/explicit: weights sum 0.9 ≠ 1");

  doc["weights"] = json::parse(R"({"explicit": [{"group": [1], "t": 0.5}, {"group": [1, 2], "t": 0.5}]})");
  CHECK(errors_of(doc).empty());
  doc["weights"] = json::parse(R"({"single_partition": [2]})");
  CHECK(parse_config(doc).weights->pair_coefficients()(1, 2) == 1.0);
}

TEST_CASE("neg_determinant requires m = n") {
  auto doc = minimal();
  doc["cost"] = json::parse(R"({"name": "neg_determinant", "m": 3, "n": 2})");
  const auto errors = errors_of(doc);
  REQUIRE_FALSE(errors.empty());
  CHECK(errors[0].rfind("/cost", 0) == 0);
  CHECK(any_contains(errors, "m = n"));
}

TEST_CASE("every violation is reported with its path") {
  auto doc = minimal();
  doc["cost"]["name"] = "cubic";
  doc["zero_tol"] = -1.0;
  doc["output"] = json::parse(R"({"format": "xml"})");
  doc["mystery"] = 1;
  const auto errors = errors_of(doc);
  CHECK(any_contains(errors, "/cost/name: unknown builtin 'cubic'"));
  CHECK(any_contains(errors, "/zero_tol"));
  CHECK(any_contains(errors, "/output/format"));
  CHECK(any_contains(errors, "/mystery: unknown key"));
  CHECK(errors.size() >= 4);

  auto dims = minimal();
  dims["points"] = json::parse("[[[0.5, 1.0], [0.5]]]");
  CHECK(any_contains(errors_of(dims), "/points/0"));

  auto version = minimal();
  version.erase("version");
  CHECK(any_contains(errors_of(version), "/version"));

  CHECK_THROWS_AS(parse_config(std::string_view("{not json")), ConfigError);
}

TEST_CASE("sweeps and solver sections") {
  auto doc = minimal();
  doc["points"] = json::parse(R"({"sweep": {"lo": [[0], [0]], "hi": [[1], [2]], "steps": 3}})");
  CHECK(parse_config(doc).points.size() == 9);
  doc["points"] = json::parse(R"({"sweep": {"lo": [[0], [0]], "hi": [[1], [2]], "steps": 101}})");
  CHECK(any_contains(errors_of(doc), "10000"));

  auto s = minimal();
  s["solver"] = json::parse(R"({"grids": [{"uniform": {"lo": 0, "hi": 1, "count": 3}},
                                          {"points": [0, 1], "weights": [0.5, 0.5]}]})");
  const auto cfg = parse_config(s);
  REQUIRE(cfg.solver.has_value());
  CHECK(cfg.solver->grids[0].size() == 3);
  CHECK(cfg.solver->grids[1].size() == 2);
  s["solver"]["grids"][1]["weights"] = json::array({0.5, 0.6});
  CHECK(any_contains(errors_of(s), "/solver/grids/1"));
}

TEST_CASE("affine shifts in the cost sub-schema") {
  const auto cost = parse_cost(json::parse(R"({"name": "bilinear", "m": 2, "n": 1,
      "params": {"coefficients": [[0, -1], [-1, 0]]}, "affine": {"linear": [[2], [3]], "constant": 1}})"));
  const Point x{Vector::Constant(1, 1.0), Vector::Constant(1, 1.0)};
  CHECK(evaluate(cost, x) == doctest::Approx(-1.0 + 2.0 + 3.0 + 1.0));
}

TEST_CASE("presets reproduce their expected verdicts") {
  const std::vector<std::string> required{"concave_sum",
                                          "convex_sum_surface",
                                          "indefinite_sum",
                                          "hedonic_identity",
                                          "neg_determinant_diagonal",
                                          "surface_nonunique",
                                          "triple_condition_counterexample",
                                          "rank_deficient_pair"};
  for (const auto& name : required) CHECK_NOTHROW(find_preset(name));
  CHECK_THROWS_AS(find_preset("nope"), InputError);

  for (const auto& preset : presets()) {
    CAPTURE(preset.name);
    const auto cfg = parse_config(preset.config);
    CHECK(preset.config.contains("expect"));
    RunOptions options;
    options.timestamp = "fixed";
    const auto result = run(cfg, options);
    CHECK(result.all_passed());
    CHECK_FALSE(result.checks.empty());
    for (const auto& c : result.checks) {
      CAPTURE(c.name);
      CHECK(c.passed);
    }
  }
}

TEST_CASE("reports carry the documented keys") {
  RunOptions options;
  options.timestamp = "fixed";
  const auto result = run(parse_config(find_preset("convex_sum_surface").config), options);
  for (const char* key : {"version", "config_hash", "points", "solves", "checks", "timestamp"}) {
    CHECK(result.report.contains(key));
  }
  const auto& point = result.report["points"][0];
  CHECK(point["signature"]["q_plus"] == 1);
  CHECK(point["dimension_bound"] == 1);
  CHECK(point["graph_dimension_bound"] == 3);
  CHECK(point["bounds_differ"] == true);
  CHECK(result.report["solves"][0]["certificate"]["optimal"] == true);
}

TEST_CASE("reports are deterministic across runs and thread counts") {
  const auto cfg = parse_config(find_preset("triple_condition_counterexample").config);
  auto doc = find_preset("concave_sum").config;
  doc["points"] =
      json::parse(R"({"sweep": {"lo": [[0, 0], [0, 0], [0, 0]], "hi": [[1, 0], [0, 1], [0, 0]], "steps": 6}})");
  const auto sweep = parse_config(doc);
  for (const auto* c : {&cfg, &sweep}) {
    RunOptions one;
    one.threads = 1;
    one.timestamp = "t";
    RunOptions four = one;
    four.threads = 4;
    const auto a = run(*c, one).report.dump();
    const auto b = run(*c, one).report.dump();
    const auto d = run(*c, four).report.dump();
    CHECK(a == b);
    CHECK(a == d);
  }
  CHECK(config_hash(cfg.document) == config_hash(parse_config(std::string_view(cfg.document.dump())).document));
  CHECK(config_hash(cfg.document) != config_hash(sweep.document));
  CHECK(config_hash(cfg.document).size() == 16);
}

TEST_CASE("assert mode turns failed checks into exit code 2") {
  auto doc = find_preset("indefinite_sum").config;
  doc["expect"]["signature"] = json::array({4, 2, 0});
  auto cfg = parse_config(doc);
  CHECK(run(cfg).exit_code == 0);
  CHECK_FALSE(run(cfg).all_passed());
  cfg.assert_mode = true;
  CHECK(run(cfg).exit_code == 2);
}

TEST_CASE("atomic report files and CSV output") {
  const auto dir = std::filesystem::temp_directory_path() / "mmot_cli_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "report.json").string();
  const auto result = run(parse_config(find_preset("two_marginal_comonotone").config));
  write_report_file(path, result, "json", all_sections);
  CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
  CHECK(json::parse(slurp(path))["checks"].size() == result.checks.size());

  std::ostringstream analyze_csv;
  write_report(analyze_csv, result, "csv", analyze);
  CHECK(analyze_csv.str().rfind("index,q_plus,q_minus,q_zero,dimension_bound", 0) == 0);
  std::ostringstream solve_csv;
  write_report(solve_csv, result, "csv", solve);
  CHECK(solve_csv.str().find("\n0,-0.41666666666666") != std::string::npos);
  std::ostringstream checks_csv;
  write_report(checks_csv, result, "csv", all_sections);
  CHECK(checks_csv.str().rfind("check,passed\n", 0) == 0);
  CHECK_THROWS_AS(write_report(checks_csv, result, "xml", all_sections), InputError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("command-line exit codes") {
  const std::string cli = MMOT_CLI_PATH;
  const auto dir = std::filesystem::temp_directory_path() / "mmot_cli_exit";
  std::filesystem::create_directories(dir);

  CHECK(exit_status(cli + " presets list") == 0);
  CHECK(exit_status(cli + " presets run triple_condition_counterexample --assert --out " +
                    (dir / "s6.json").string()) == 0);
  const auto report = json::parse(slurp(dir / "s6.json"));
  CHECK(report["points"][0]["signature"]["q_plus"] == 2);
  CHECK(report["points"][0]["signature"]["q_minus"] == 2);

  auto failing = find_preset("indefinite_sum").config;
  failing["expect"]["signature"] = json::array({4, 2, 0});
  std::ofstream(dir / "failing.json") << failing.dump();
  CHECK(exit_status(cli + " analyze --config " + (dir / "failing.json").string() + " --assert") == 2);
  CHECK(exit_status(cli + " analyze --config " + (dir / "failing.json").string()) == 0);

  std::ofstream(dir / "broken.json") << R"({"version": 1, "cost": {"name": "cubic"}})";
  CHECK(exit_status(cli + " analyze --config " + (dir / "broken.json").string()) == 1);
  CHECK(exit_status(cli + " analyze --config " + (dir / "missing.json").string()) == 1);

  std::ofstream(dir / "ok.json") << find_preset("concave_sum").config.dump();
  CHECK(exit_status(cli + " analyze --config " + (dir / "ok.json").string() + " --format csv --zero-tol 1e-9 --out " +
                    (dir / "a.csv").string()) == 0);
  CHECK(slurp(dir / "a.csv").rfind("index,q_plus", 0) == 0);
  CHECK(exit_status(cli + " check --config " + (dir / "ok.json").string() + " --seed 7") == 0);
  std::filesystem::remove_all(dir);
}
