#include "toolsched/shield.hpp"

#include "toolsched/energy.hpp"
#include "toolsched/env.hpp"

namespace toolsched {

ShieldVerdict pass_through(const Action& proposed) {
  ShieldVerdict v;
  v.final_action = proposed;
  return v;
}

ShieldVerdict screen(const Action& proposed, const UavState& state, const WorldConfig& cfg) {
  if (!proposed.activate) return pass_through(proposed);
  const ToolServer* server = resolve_server(state, cfg);
  if (server == nullptr) return pass_through(proposed);

  const double cost = tool_cost(*server, state.pos_believed, cfg.energy_params);
  if (state.energy - cost < reserve_to_goal(state, cfg)) {
    ShieldVerdict v;
    v.final_action = Action{proposed.velocity, false};
    v.overridden = true;
    v.predicted_call_cost = cost;
    v.penalty = -cfg.reward_params.rho_shield;
    return v;
  }
  ShieldVerdict v = pass_through(proposed);
  v.predicted_call_cost = cost;
  return v;
}

bool screen_is_idempotent(const Action& proposed, const UavState& state, const WorldConfig& cfg) {
  const ShieldVerdict first = screen(proposed, state, cfg);
  const ShieldVerdict second = screen(first.final_action, state, cfg);
  return second.final_action == first.final_action;
}

}  // namespace toolsched
