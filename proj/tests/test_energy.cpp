#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "toolsched/energy.hpp"

using namespace toolsched;
using namespace toolsched::testing;

TEST_SUITE("energy") {

TEST_CASE("flight cost") {
  const EnergyParams p;
  CHECK(flight_cost(Vec2::Zero(), p, 1.0) == 50.0);
  CHECK(flight_cost(Vec2(20.0, 0.0), p, 1.0) == doctest::Approx(90.0));
  const double slow = flight_cost(Vec2(5.0, 0.0), p, 1.0) - 50.0;
  const double fast = flight_cost(Vec2(10.0, 0.0), p, 1.0) - 50.0;
  CHECK(fast == doctest::Approx(4.0 * slow));
  CHECK(flight_cost(Vec2::Zero(), p, 0.5) == 25.0);
}

TEST_CASE("tool cost by kind") {
  const EnergyParams p;
  const ToolServer standard = make_server(0, ToolKind::Standard, Vec2(0.0, 0.0));
  const ToolServer semantic = make_server(1, ToolKind::Semantic, Vec2(0.0, 0.0));
  CHECK(tool_cost(standard, Vec2(0.0, 0.0), p) == 200.0);
  CHECK(tool_cost(standard, Vec2(150.0, 0.0), p) == doctest::Approx(1100.0));
  CHECK(tool_cost(semantic, Vec2(0.0, 0.0), p) == tool_cost(semantic, Vec2(0.0, 150.0), p));
  CHECK(tool_cost(semantic, Vec2(0.0, 0.0), p) == 600.0);
  double prev = -1.0;
  for (int d = 0; d <= 300; ++d) {
    const double c = tool_cost(standard, Vec2(d, 0.0), p);
    REQUIRE(c > prev);
    prev = c;
  }
  CHECK(tool_category(ToolKind::Standard) == EnergyCategory::Transmission);
  CHECK(tool_category(ToolKind::Semantic) == EnergyCategory::Compute);
}

TEST_CASE("reserve to goal") {
  const WorldConfig cfg = empty_world();
  UavState s = initial_state(cfg);
  CHECK(reserve_to_goal(s, cfg) == doctest::Approx(4050.0));
  s.pos_believed = cfg.goal_pos;
  CHECK(reserve_to_goal(s, cfg) == 0.0);
  double prev = 0.0;
  for (double d = 0.0; d <= 1000.0; d += 0.5) {
    s.pos_believed = cfg.goal_pos - Vec2(d, 0.0);
    const double r = reserve_to_goal(s, cfg);
    REQUIRE(r >= prev);
    prev = r;
  }
  // Partial steps round up.
  s.pos_believed = cfg.goal_pos - Vec2(21.0, 0.0);
  CHECK(reserve_to_goal(s, cfg) == doctest::Approx(180.0));
}

TEST_CASE("ledger clamps at zero") {
  SUBCASE("exact") {
    EnergyLedger ledger(10.0);
    CHECK(ledger.charge(0, EnergyCategory::Flight, 10.0) == 10.0);
    CHECK(ledger.remaining() == 0.0);
    CHECK(ledger.depleted());
  }
  SUBCASE("overdraw") {
    EnergyLedger ledger(10.0);
    CHECK(ledger.charge(0, EnergyCategory::Compute, 12.0) == 10.0);
    CHECK(ledger.remaining() == 0.0);
    CHECK(ledger.depleted());
    REQUIRE(ledger.entries().size() == 1);
    CHECK(ledger.entries()[0].joules == 10.0);
  }
}

TEST_CASE("ledger conservation is exact") {
  RngStream rng(3, "test", 0);
  for (int trial = 0; trial < 50; ++trial) {
    const double initial = rng.uniform(1000.0, 20000.0);
    EnergyLedger ledger(initial);
    int step = 0;
    while (!ledger.depleted()) {
      const auto cat = static_cast<EnergyCategory>(rng.below(3));
      ledger.charge(step++, cat, rng.uniform(0.0, 700.0));
      double sum = 0.0;
      for (const auto& e : ledger.entries()) sum += e.joules;
      REQUIRE(initial - sum == ledger.remaining());
      REQUIRE(ledger.remaining() >= 0.0);
    }
    CHECK(ledger.remaining() == 0.0);
    const auto totals = ledger.totals_by_category();
    CHECK(totals[0] + totals[1] + totals[2] == doctest::Approx(initial));
    for (std::size_t i = 1; i < ledger.entries().size(); ++i)
      REQUIRE(ledger.entries()[i].step >= ledger.entries()[i - 1].step);
  }
}

}
