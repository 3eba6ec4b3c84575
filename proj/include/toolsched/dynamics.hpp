#ifndef TOOLSCHED_DYNAMICS_HPP_
#define TOOLSCHED_DYNAMICS_HPP_

#include <optional>

#include "toolsched/rng.hpp"
#include "toolsched/world.hpp"

namespace toolsched {

struct UavState {
  Vec2 pos_true = Vec2::Zero();
  Vec2 pos_believed = Vec2::Zero();
  Vec2 drift = Vec2::Zero();  // pos_true - pos_believed
  double energy = 0.0;
  int guidance_left = 0;
  int steps_elapsed = 0;
  std::optional<int> last_correction_step;
};

struct Action {
  Vec2 velocity = Vec2::Zero();
  bool activate = false;

  bool operator==(const Action&) const = default;
};

UavState initial_state(const WorldConfig& cfg);

// Scales v to length v_max if it is longer. Non-finite input yields zero.
Vec2 clamp_velocity(const Vec2& v, double v_max);

/// Advances one time step. Both frames move by velocity * dt; the true frame
/// also receives per-axis Normal(0, sigma_drift^2) noise unless guidance is
/// active, in which case the guidance counter is decremented instead.
UavState step_motion(const UavState& state, const Vec2& velocity, const WorldConfig& cfg,
                     RngStream& rng);

/// Snaps belief onto truth and starts the server's guidance window.
/// Requires in_range(server, state.pos_true).
UavState apply_correction(const UavState& state, const ToolServer& server);

inline bool goal_reached(const UavState& state, const WorldConfig& cfg) {
  return (state.pos_true - cfg.goal_pos).norm() <= cfg.goal_radius;
}

}  // namespace toolsched

#endif  // TOOLSCHED_DYNAMICS_HPP_
