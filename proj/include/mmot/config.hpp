#pragma once

#include <array>
#include <cstdint>
#include <json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mmot/cost_model.hpp"
#include "mmot/errors.hpp"
#include "mmot/metric_engine.hpp"
#include "mmot/mmot_solver.hpp"
#include "mmot/monotonicity.hpp"

namespace mmot {

inline constexpr int kConfigVersion = 1;

struct SolverConfig {
  std::vector<MarginalGrid> grids;
  double tol = 1e-9;
  double mass_tol = 1e-10;
  double radius = 0.5;
  std::vector<std::vector<PlanAtom>> plans;  // supplied plans for the non-uniqueness probe
};

struct CheckConfig {
  bool rank_bound = true;
  bool shortcut = false;
  bool recursion = false;
  bool necessary_condition = false;
  bool frame = false;
  bool bipartite = false;
  bool monotonicity = false;
  bool compatibility = false;
  bool projection = false;
  std::optional<Box> box;
  int samples = 200;
  std::uint64_t seed = 42;
};

/// Verdicts a run is expected to reproduce; mismatches count as check failures.
struct Expectation {
  std::optional<std::array<int, 3>> signature;
  std::optional<double> objective;
  std::optional<bool> non_unique;
  std::optional<bool> necessary_condition_all_pass;
  std::optional<bool> compatible;
};

struct RunConfig {
  nlohmann::json document;  // normalized input, hashed into the report
  std::optional<CostSpec> cost;
  std::string weights_mode = "uniform";
  std::optional<PartitionWeights> weights;
  std::vector<Point> points;
  std::vector<Point> support;  // points for the stand-alone monotonicity checks
  std::optional<SolverConfig> solver;
  CheckConfig checks;
  Expectation expect;
  std::optional<double> zero_tol;
  std::string output_path;
  std::string output_format = "json";
  bool assert_mode = false;
};

/// Every schema violation found in a document, each prefixed with its JSON pointer.
class ConfigError : public InputError {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

RunConfig parse_config(std::string_view text);
RunConfig parse_config(const nlohmann::json& document);

/// Cost sub-schema on its own ("kind", "name", "m", "dims", "params").
CostSpec parse_cost(const nlohmann::json& cost);

}  // namespace mmot
