#pragma once

#include <string>
#include <vector>

#include "usac/config.hpp"

namespace usac::harness {

/// A configuration shipped with the library. Names starting with "grid-" hold a
/// GridSpec, all others a RunConfig.
struct Preset {
  std::string name;
  std::string text;

  /// The first comment line of the file.
  std::string description() const;
  bool is_grid() const { return name.rfind("grid-", 0) == 0; }
};

const std::vector<Preset>& presets();
/// ConfigError listing the known names when `name` is not a preset.
const Preset& find_preset(const std::string& name);
RunConfig preset_run(const std::string& name);
GridSpec preset_grid(const std::string& name);

}  // namespace usac::harness
