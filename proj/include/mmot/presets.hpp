#pragma once

#include <json.hpp>
#include <string>
#include <vector>

namespace mmot {

/// A shipped configuration reproducing one worked example, with its expected verdicts in "expect".
struct Preset {
  std::string name;
  std::string description;
  nlohmann::json config;
};

const std::vector<Preset>& presets();

/// Throws InputError for an unknown name.
const Preset& find_preset(const std::string& name);

}  // namespace mmot
