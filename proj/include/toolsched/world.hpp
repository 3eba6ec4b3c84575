#ifndef TOOLSCHED_WORLD_HPP_
#define TOOLSCHED_WORLD_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace toolsched {

using Vec2 = Eigen::Vector2d;

enum class ToolKind { Standard, Semantic };

const char* to_string(ToolKind kind);
ToolKind tool_kind_from_string(const std::string& name);

struct ToolServer {
  std::size_t index = 0;
  ToolKind kind = ToolKind::Standard;
  Vec2 position = Vec2::Zero();
  double range = 150.0;
  int validity_horizon = 40;
};

// Joules. Standard calls cost e_tx_base + e_tx_dist * d^tx_exponent,
// semantic calls cost e_llm regardless of distance.
struct EnergyParams {
  double p_hover = 50.0;
  double k_vel = 0.1;
  double e_tx_base = 200.0;
  double e_tx_dist = 0.04;
  double tx_exponent = 2.0;
  double e_llm = 600.0;
};

struct RewardParams {
  double w_progress = 1.0;
  double w_time = 1.0;
  double w_energy = 0.01;
  double r_goal = 200.0;
  double r_crash = 200.0;
  double rho_shield = 5.0;
  double rho_waste = 1.0;
};

// Fixed: server positions are taken from the config as written.
// PerEpisode: kinds, ranges and horizons are kept but positions are redrawn
// uniformly in the arena for every episode index.
enum class LayoutMode { Fixed, PerEpisode };

struct WorldConfig {
  double arena_size = 1000.0;
  Vec2 start_pos{50.0, 500.0};
  Vec2 goal_pos{950.0, 500.0};
  double goal_radius = 20.0;
  double dt = 1.0;
  double v_max = 20.0;
  double sigma_drift = 2.0;
  int max_steps = 200;
  double initial_energy = 12000.0;
  std::vector<ToolServer> servers;
  EnergyParams energy_params;
  RewardParams reward_params;
  std::uint64_t seed = 0;
  LayoutMode layout = LayoutMode::Fixed;

  int max_validity_horizon() const;
};

inline constexpr double kDefaultRange = 150.0;
inline constexpr int kDefaultStandardHorizon = 40;
inline constexpr int kDefaultSemanticHorizon = 12;

class ConfigError : public std::runtime_error {
 public:
  enum class Kind { Parse, Validation, Io };
  ConfigError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Throws ConfigError(Validation) naming the first violated invariant.
void validate(const WorldConfig& cfg);

WorldConfig parse_config(const std::string& text);
WorldConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const WorldConfig& cfg);
void save_config(const WorldConfig& cfg, const std::filesystem::path& path);

// Hash of the canonical serialization with the seed zeroed; two configs that
// differ only in seed describe the same scenario.
std::uint64_t scenario_fingerprint(const WorldConfig& cfg);

WorldConfig random_scenario(std::uint64_t seed, int n_standard, int n_semantic);

// Concrete config used by one episode. Identity for Fixed layouts.
WorldConfig realize_layout(const WorldConfig& cfg, std::uint64_t episode_index);

inline bool in_range(const ToolServer& server, const Vec2& pos) {
  return (pos - server.position).norm() <= server.range;
}

}  // namespace toolsched

#endif  // TOOLSCHED_WORLD_HPP_
