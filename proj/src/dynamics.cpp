#include "toolsched/dynamics.hpp"

#include <cassert>
#include <cmath>

namespace toolsched {

UavState initial_state(const WorldConfig& cfg) {
  UavState s;
  s.pos_true = cfg.start_pos;
  s.pos_believed = cfg.start_pos;
  s.drift = Vec2::Zero();
  s.energy = cfg.initial_energy;
  return s;
}

Vec2 clamp_velocity(const Vec2& v, double v_max) {
  if (!v.allFinite()) return Vec2::Zero();
  const double speed = v.norm();
  if (speed <= v_max) return v;
  return v * (v_max / speed);
}

UavState step_motion(const UavState& state, const Vec2& velocity, const WorldConfig& cfg,
                     RngStream& rng) {
  UavState next = state;
  const Vec2 displacement = velocity * cfg.dt;
  next.pos_believed = state.pos_believed + displacement;
  if (state.guidance_left > 0) {
    next.pos_true = state.pos_true + displacement;
    next.guidance_left = state.guidance_left - 1;
  } else {
    // Draw order is x then y, always both, so streams stay aligned.
    const double nx = rng.normal(0.0, cfg.sigma_drift);
    const double ny = rng.normal(0.0, cfg.sigma_drift);
    next.pos_true = state.pos_true + displacement + Vec2(nx, ny);
  }
  next.drift = next.pos_true - next.pos_believed;
  next.steps_elapsed = state.steps_elapsed + 1;
  return next;
}

UavState apply_correction(const UavState& state, const ToolServer& server) {
  assert(in_range(server, state.pos_true));
  UavState next = state;
  next.pos_believed = state.pos_true;
  next.drift = Vec2::Zero();
  next.guidance_left = server.validity_horizon;
  next.last_correction_step = state.steps_elapsed;
  return next;
}

}  // namespace toolsched
