#ifndef TOOLSCHED_ENERGY_HPP_
#define TOOLSCHED_ENERGY_HPP_

#include <array>
#include <vector>

#include "toolsched/dynamics.hpp"
#include "toolsched/world.hpp"

namespace toolsched {

enum class EnergyCategory { Flight = 0, Transmission = 1, Compute = 2 };

const char* to_string(EnergyCategory category);

// p_hover * dt + k_vel * |v|^2 * dt
double flight_cost(const Vec2& velocity, const EnergyParams& params, double dt);

// Defined for any position; the shield prices hypothetical calls with it.
double tool_cost(const ToolServer& server, const Vec2& pos, const EnergyParams& params);

inline EnergyCategory tool_category(ToolKind kind) {
  return kind == ToolKind::Standard ? EnergyCategory::Transmission : EnergyCategory::Compute;
}

/// Straight-line flight energy still needed from the believed position:
/// ceil(distance / (v_max * dt)) full-speed steps.
double reserve_to_goal(const UavState& state, const WorldConfig& cfg);

struct LedgerEntry {
  int step = 0;
  EnergyCategory category = EnergyCategory::Flight;
  double joules = 0.0;
};

/// Append-only record of every charge in an episode.
///
/// remaining() is initial - (sum of entries in insertion order), exactly. A
/// charge that would overdraw is recorded as the amount left and flips the
/// ledger to depleted; remaining() then reads exactly zero.
class EnergyLedger {
 public:
  explicit EnergyLedger(double initial = 0.0) : initial_(initial) {}

  // Returns the joules actually recorded.
  double charge(int step, EnergyCategory category, double joules);

  double initial() const { return initial_; }
  double spent() const { return spent_; }
  double remaining() const { return initial_ - spent_; }
  bool depleted() const { return remaining() <= 0.0; }
  const std::vector<LedgerEntry>& entries() const { return entries_; }
  std::array<double, 3> totals_by_category() const;

 private:
  double initial_;
  double spent_ = 0.0;
  std::vector<LedgerEntry> entries_;
};

}  // namespace toolsched

#endif  // TOOLSCHED_ENERGY_HPP_
