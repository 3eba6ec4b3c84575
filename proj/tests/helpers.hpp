#ifndef TOOLSCHED_TESTS_HELPERS_HPP_
#define TOOLSCHED_TESTS_HELPERS_HPP_

#include <filesystem>
#include <string>

#include "toolsched/world.hpp"

namespace toolsched::testing {

inline std::filesystem::path source_path(const std::string& rel) {
  return std::filesystem::path(TOOLSCHED_SOURCE_DIR) / rel;
}

inline WorldConfig default_scenario() { return load_config(source_path("scenarios/default.json")); }

// Arena defaults, no servers.
inline WorldConfig empty_world(double sigma = 2.0) {
  WorldConfig cfg;
  cfg.sigma_drift = sigma;
  return cfg;
}

inline ToolServer make_server(std::size_t index, ToolKind kind, Vec2 pos) {
  ToolServer s;
  s.index = index;
  s.kind = kind;
  s.position = pos;
  s.range = kDefaultRange;
  s.validity_horizon = kind == ToolKind::Standard ? kDefaultStandardHorizon : kDefaultSemanticHorizon;
  return s;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("toolsched_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace toolsched::testing

#endif  // TOOLSCHED_TESTS_HELPERS_HPP_
