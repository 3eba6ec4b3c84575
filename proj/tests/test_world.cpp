#include <doctest.h>

#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "toolsched/world.hpp"

using namespace toolsched;
using namespace toolsched::testing;

namespace {

ConfigError::Kind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.kind();
  }
  FAIL("expected ConfigError");
  return ConfigError::Kind::Io;
}

}  // namespace

TEST_SUITE("world") {

TEST_CASE("bundled scenario has two servers of each kind") {
  const WorldConfig cfg = default_scenario();
  REQUIRE(cfg.servers.size() == 4);
  int standard = 0;
  for (std::size_t i = 0; i < cfg.servers.size(); ++i) {
    CHECK(cfg.servers[i].index == i);
    standard += cfg.servers[i].kind == ToolKind::Standard;
  }
  CHECK(standard == 2);
}

TEST_CASE("random_scenario is deterministic and seed-sensitive") {
  const WorldConfig a = random_scenario(7, 2, 2);
  const WorldConfig b = random_scenario(7, 2, 2);
  const WorldConfig c = random_scenario(8, 2, 2);
  CHECK(serialize_config(a) == serialize_config(b));
  REQUIRE(a.servers.size() == 4);
  bool differs = false;
  for (std::size_t i = 0; i < 4; ++i) {
    differs |= a.servers[i].position != c.servers[i].position;
    CHECK(a.servers[i].position.x() >= 0.0);
    CHECK(a.servers[i].position.x() <= a.arena_size);
    CHECK(a.servers[i].position.y() >= 0.0);
    CHECK(a.servers[i].position.y() <= a.arena_size);
  }
  CHECK(differs);
  CHECK(a.servers[0].kind == ToolKind::Standard);
  CHECK(a.servers[3].kind == ToolKind::Semantic);
  // Start and goal on opposite sides of the arena.
  CHECK(a.start_pos.x() < a.arena_size / 2);
  CHECK(a.goal_pos.x() > a.arena_size / 2);
}

TEST_CASE("random_scenario with no servers is valid") {
  const WorldConfig cfg = random_scenario(7, 0, 0);
  CHECK(cfg.servers.empty());
  CHECK_NOTHROW(validate(cfg));
}

TEST_CASE("validation names the violated invariant") {
  WorldConfig cfg = random_scenario(1, 1, 1);
  SUBCASE("v_max = 0") {
    cfg.v_max = 0.0;
    CHECK(kind_of([&] { validate(cfg); }) == ConfigError::Kind::Validation);
  }
  SUBCASE("standard horizon below semantic") {
    cfg.servers[0].validity_horizon = 5;
    CHECK(kind_of([&] { validate(cfg); }) == ConfigError::Kind::Validation);
    try {
      validate(cfg);
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("horizon") != std::string::npos);
    }
  }
  SUBCASE("server outside the arena") {
    cfg.servers[1].position = Vec2(-1.0, 10.0);
    CHECK(kind_of([&] { validate(cfg); }) == ConfigError::Kind::Validation);
  }
  SUBCASE("single call costlier than the budget") {
    cfg.energy_params.e_llm = cfg.initial_energy;
    CHECK(kind_of([&] { validate(cfg); }) == ConfigError::Kind::Validation);
  }
  SUBCASE("negative sigma") {
    cfg.sigma_drift = -0.1;
    CHECK(kind_of([&] { validate(cfg); }) == ConfigError::Kind::Validation);
  }
}

TEST_CASE("malformed text is a parse error") {
  CHECK(kind_of([] { parse_config("{ not json"); }) == ConfigError::Kind::Parse);
  CHECK(kind_of([] { load_config("/nonexistent/toolsched.json"); }) == ConfigError::Kind::Io);
}

TEST_CASE("config round-trip is byte-identical") {
  const WorldConfig cfg = random_scenario(11, 2, 2);
  const std::string text = serialize_config(cfg);
  CHECK(serialize_config(parse_config(text)) == text);

  // A hand-edited file with different formatting and key order.
  const std::string loose =
      R"({"servers":[{"kind":"semantic","position":[10,20],"range":150,"validity_horizon":12,"index":0}],)"
      R"("seed":3,"v_max":20})";
  const WorldConfig parsed = parse_config(loose);
  CHECK(parsed.servers.size() == 1);
  CHECK(parsed.seed == 3);
  const std::string canonical = serialize_config(parsed);
  CHECK(serialize_config(parse_config(canonical)) == canonical);

  const auto dir = scratch_dir("world_roundtrip");
  save_config(cfg, dir / "a.json");
  std::ifstream in(dir / "a.json");
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == text);
}

TEST_CASE("in_range is inclusive") {
  const ToolServer s = make_server(0, ToolKind::Standard, Vec2(100.0, 100.0));
  CHECK(in_range(s, Vec2(100.0, 100.0)));
  CHECK(in_range(s, Vec2(250.0, 100.0)));
  CHECK_FALSE(in_range(s, Vec2(250.0 + 1e-9, 100.0)));
}

TEST_CASE("fingerprint ignores the seed only") {
  WorldConfig a = random_scenario(5, 2, 2);
  WorldConfig b = a;
  b.seed = 99;
  CHECK(scenario_fingerprint(a) == scenario_fingerprint(b));
  b.servers[0].position.x() += 1.0;
  CHECK(scenario_fingerprint(a) != scenario_fingerprint(b));
}

TEST_CASE("per-episode layouts") {
  WorldConfig cfg = random_scenario(5, 2, 2);
  CHECK(serialize_config(realize_layout(cfg, 3)) == serialize_config(cfg));
  cfg.layout = LayoutMode::PerEpisode;
  const WorldConfig e0 = realize_layout(cfg, 0);
  const WorldConfig e0_again = realize_layout(cfg, 0);
  const WorldConfig e1 = realize_layout(cfg, 1);
  CHECK(serialize_config(e0) == serialize_config(e0_again));
  CHECK(e0.servers[0].position != e1.servers[0].position);
  for (std::size_t i = 0; i < cfg.servers.size(); ++i) {
    CHECK(e0.servers[i].kind == cfg.servers[i].kind);
    CHECK(e0.servers[i].validity_horizon == cfg.servers[i].validity_horizon);
  }
  CHECK_NOTHROW(validate(e1));
  CHECK(scenario_fingerprint(e0) != scenario_fingerprint(e1));
}

}
