#include "usac/presets.hpp"

#include "usac/errors.hpp"

namespace usac::harness {

// Generated from presets/*.conf at configure time.
std::vector<Preset> embedded_presets();

std::string Preset::description() const {
  const auto start = text.find('#');
  if (start == std::string::npos) return {};
  const auto end = text.find('\n', start);
  const auto line = text.substr(start + 1, end == std::string::npos ? std::string::npos : end - start - 1);
  const auto b = line.find_first_not_of(' ');
  return b == std::string::npos ? std::string() : line.substr(b);
}

const std::vector<Preset>& presets() {
  static const std::vector<Preset> all = embedded_presets();
  return all;
}

const Preset& find_preset(const std::string& name) {
  std::string known;
  for (const auto& p : presets()) {
    if (p.name == name) return p;
    known += (known.empty() ? "" : ", ") + p.name;
  }
  throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
}

RunConfig preset_run(const std::string& name) {
  const auto& p = find_preset(name);
  if (p.is_grid()) throw ConfigError("preset '" + name + "' is a grid; use it with the grid command");
  return RunConfig::parse(p.text);
}

GridSpec preset_grid(const std::string& name) {
  const auto& p = find_preset(name);
  if (!p.is_grid()) throw ConfigError("preset '" + name + "' is a single run; use it with the train command");
  return GridSpec::parse(p.text);
}

}  // namespace usac::harness
