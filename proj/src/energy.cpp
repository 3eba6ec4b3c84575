#include "toolsched/energy.hpp"

#include <cassert>
#include <cmath>

namespace toolsched {

const char* to_string(EnergyCategory category) {
  switch (category) {
    case EnergyCategory::Flight: return "flight";
    case EnergyCategory::Transmission: return "transmission";
    case EnergyCategory::Compute: return "compute";
  }
  return "?";
}

double flight_cost(const Vec2& velocity, const EnergyParams& params, double dt) {
  return params.p_hover * dt + params.k_vel * velocity.squaredNorm() * dt;
}

double tool_cost(const ToolServer& server, const Vec2& pos, const EnergyParams& params) {
  if (server.kind == ToolKind::Semantic) return params.e_llm;
  const double d = (pos - server.position).norm();
  return params.e_tx_base + params.e_tx_dist * std::pow(d, params.tx_exponent);
}

double reserve_to_goal(const UavState& state, const WorldConfig& cfg) {
  const double distance = (cfg.goal_pos - state.pos_believed).norm();
  const double steps = std::ceil(distance / (cfg.v_max * cfg.dt));
  if (steps <= 0.0) return 0.0;
  return steps * flight_cost(Vec2(cfg.v_max, 0.0), cfg.energy_params, cfg.dt);
}

double EnergyLedger::charge(int step, EnergyCategory category, double joules) {
  assert(joules >= 0.0);
  assert(entries_.empty() || entries_.back().step <= step);
  double recorded = joules;
  if (spent_ + joules > initial_) {
    recorded = initial_ - spent_;
    // The subtraction can round; nudge until the running sum lands on initial.
    while (spent_ + recorded < initial_) recorded = std::nextafter(recorded, HUGE_VAL);
    while (spent_ + recorded > initial_) recorded = std::nextafter(recorded, -HUGE_VAL);
  }
  spent_ += recorded;
  entries_.push_back({step, category, recorded});
  return recorded;
}

std::array<double, 3> EnergyLedger::totals_by_category() const {
  std::array<double, 3> totals{0.0, 0.0, 0.0};
  for (const auto& e : entries_) totals[static_cast<int>(e.category)] += e.joules;
  return totals;
}

}  // namespace toolsched
