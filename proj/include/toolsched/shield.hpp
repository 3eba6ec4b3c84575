#ifndef TOOLSCHED_SHIELD_HPP_
#define TOOLSCHED_SHIELD_HPP_

#include <optional>

#include "toolsched/dynamics.hpp"
#include "toolsched/world.hpp"

namespace toolsched {

struct ShieldVerdict {
  Action final_action;
  bool overridden = false;
  std::optional<double> predicted_call_cost;
  double penalty = 0.0;  // <= 0
};

// Identity verdict used when the shield is disabled.
ShieldVerdict pass_through(const Action& proposed);

/// Teacher shield. Prices the activation against the server the env would
/// resolve, and replaces it with "keep flying" (same velocity, no call) when
/// energy - cost < reserve_to_goal. Velocity is never modified.
ShieldVerdict screen(const Action& proposed, const UavState& state, const WorldConfig& cfg);

// Re-screening the final action of a verdict in the same state must return
// the same final action. Exposed for property tests.
bool screen_is_idempotent(const Action& proposed, const UavState& state, const WorldConfig& cfg);

}  // namespace toolsched

#endif  // TOOLSCHED_SHIELD_HPP_
