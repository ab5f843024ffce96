#pragma once

#include <iosfwd>
#include <json.hpp>
#include <string>
#include <vector>

#include "mmot/config.hpp"

namespace mmot {

inline constexpr const char* kToolVersion = "mmot 1.0.0";

enum Section : unsigned { analyze = 1u, solve = 2u, check = 4u, all_sections = 7u };

struct RunOptions {
  unsigned sections = all_sections;
  int threads = 0;        // 0: hardware concurrency
  std::string timestamp;  // empty: current UTC time
};

struct CheckOutcome {
  std::string name;
  bool passed = false;
  nlohmann::json detail;
};

struct RunResult {
  nlohmann::json report;
  std::vector<CheckOutcome> checks;
  int exit_code = 0;  // 0 ok, 2 failed checks in assert mode

  bool all_passed() const;
};

/// 64-bit FNV-1a of the canonical (sorted-key, compact) dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& document);

RunResult run(const RunConfig& config, const RunOptions& options = {});

/// Serializes the report in `format` ("json" or "csv") for the given sections.
void write_report(std::ostream& out, const RunResult& result, const std::string& format, unsigned sections);

/// Writes to a sibling temporary file and renames it over `path`.
void write_report_file(const std::string& path, const RunResult& result, const std::string& format, unsigned sections);

}  // namespace mmot
