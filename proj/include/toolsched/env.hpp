#ifndef TOOLSCHED_ENV_HPP_
#define TOOLSCHED_ENV_HPP_

#include <Eigen/Core>

#include <array>
#include <optional>
#include <string>

#include "toolsched/dynamics.hpp"
#include "toolsched/energy.hpp"
#include "toolsched/rng.hpp"
#include "toolsched/shield.hpp"
#include "toolsched/world.hpp"

namespace toolsched {

using Observation = Eigen::VectorXd;

enum class TerminationCause { Running, Goal, Depleted, Timeout };

const char* to_string(TerminationCause cause);

// Summed in declaration order; total() is the reward.
struct RewardComponents {
  double progress = 0.0;
  double time = 0.0;
  double energy = 0.0;
  double shield = 0.0;
  double waste = 0.0;
  double terminal = 0.0;

  double total() const { return progress + time + energy + shield + waste + terminal; }
  bool operator==(const RewardComponents&) const = default;
};

struct StepInfo {
  bool overridden = false;
  std::optional<double> predicted_call_cost;
  // Server whose correction executed this step.
  std::optional<std::size_t> server_index;
  // Believed distance to that server when the call executed.
  double activation_distance = 0.0;
  bool wasted_activation = false;
  // Resolved by belief but the true position was outside the server range.
  bool link_failed = false;
  bool depleted_by_tool = false;
  std::array<double, 3> charges{0.0, 0.0, 0.0};  // indexed by EnergyCategory
  // Pre-step context used by the redundancy statistics.
  int guidance_before = 0;
  bool server_accessible_before = false;
};

struct Transition {
  Observation observation;  // observation the action was chosen from
  Action action;            // executed (post-shield)
  Action proposed;          // as proposed by the policy, velocity clamped
  double reward = 0.0;
  RewardComponents components;
  bool done = false;
  TerminationCause cause = TerminationCause::Running;
  StepInfo info;
};

inline Eigen::Index observation_size(std::size_t n_servers) {
  return 7 + 5 * static_cast<Eigen::Index>(n_servers);
}

/// Observation layout, all from the believed frame:
///   [0,2)  believed position / arena
///   [2,4)  (goal - believed) / arena
///   4      energy / initial_energy
///   5      steps since last correction (or since start) / max_steps
///   6      guidance_left / max validity horizon
///   then per server, in canonical order:
///          (server - believed) / arena (2), in-range flag (1), kind one-hot (2)
Observation encode_observation(const UavState& state, const WorldConfig& cfg);

// Inverse of the scalar part of encode_observation, for checking injectivity.
struct ObservationFields {
  Vec2 pos_believed;
  double energy = 0.0;
  int steps_since_correction = 0;
  int guidance_left = 0;
};
ObservationFields decode_observation(const Observation& obs, const WorldConfig& cfg);

/// Nearest server (by believed distance) whose range covers the believed
/// position; ties go to the lower index. nullptr when none is in range.
const ToolServer* resolve_server(const UavState& state, const WorldConfig& cfg);

/// The tool-assisted navigation MDP for one scenario.
///
/// Step order: clamp velocity, optional shield screen, activation (resolve,
/// charge, correct), motion, flight charge, reward, termination.
class Env {
 public:
  Env(WorldConfig cfg, bool shield_on);

  Observation reset(std::uint64_t episode_index);
  Transition step(const Action& proposed);

  Observation observe() const { return encode_observation(state_, episode_cfg_); }
  const UavState& state() const { return state_; }
  const WorldConfig& config() const { return cfg_; }
  const WorldConfig& episode_config() const { return episode_cfg_; }
  const EnergyLedger& ledger() const { return ledger_; }
  bool done() const { return cause_ != TerminationCause::Running; }
  TerminationCause cause() const { return cause_; }
  bool shield_on() const { return shield_on_; }
  std::uint64_t episode_index() const { return episode_index_; }

 private:
  WorldConfig cfg_;
  WorldConfig episode_cfg_;
  bool shield_on_;
  std::uint64_t episode_index_ = 0;
  UavState state_;
  EnergyLedger ledger_;
  RngStream dynamics_rng_;
  TerminationCause cause_ = TerminationCause::Running;
};

enum class BaselineKind { Random, Greedy, CostAware, Straight };

const char* to_string(BaselineKind kind);
BaselineKind baseline_kind_from_string(const std::string& name);

// Full speed toward the believed goal, slowing so as not to overshoot it.
Vec2 heading_to_goal(const UavState& state, const WorldConfig& cfg);

/// Scripted policies. Random draws velocity uniformly in the v_max disc and
/// the bit from Bernoulli(0.5); Greedy calls any accessible tool; CostAware
/// calls only when energy - cost >= reserve_to_goal; Straight never calls.
Action baseline_policy(BaselineKind kind, const Observation& obs, const UavState& state,
                       const WorldConfig& cfg, RngStream& rng);

}  // namespace toolsched

#endif  // TOOLSCHED_ENV_HPP_
