#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "toolsched/dynamics.hpp"

using namespace toolsched;
using namespace toolsched::testing;

TEST_SUITE("dynamics") {

TEST_CASE("noiseless motion keeps truth on belief") {
  const WorldConfig cfg = empty_world(0.0);
  RngStream rng(1, streams::kDynamics, 0);
  UavState s = initial_state(cfg);
  for (int t = 0; t < 100; ++t) {
    s = step_motion(s, Vec2(3.0 * std::sin(t), 17.0), cfg, rng);
    REQUIRE(s.pos_true == s.pos_believed);
    REQUIRE(s.drift == Vec2::Zero());
  }
  CHECK(s.steps_elapsed == 100);
}

TEST_CASE("motion with zero noise is exactly pos + v dt") {
  const WorldConfig cfg = empty_world(0.0);
  RngStream rng(1, streams::kDynamics, 0);
  UavState s = initial_state(cfg);
  s.pos_true = Vec2(10.25, 3.5);
  s.pos_believed = Vec2(11.0, 2.0);
  s.drift = s.pos_true - s.pos_believed;
  const Vec2 v(1.5, -2.25);
  const UavState next = step_motion(s, v, cfg, rng);
  CHECK(next.pos_true == s.pos_true + v * cfg.dt);
  CHECK(next.pos_believed == s.pos_believed + v * cfg.dt);
}

TEST_CASE("guidance suppresses noise and counts down") {
  const WorldConfig cfg = empty_world(2.0);
  RngStream rng(1, streams::kDynamics, 0);
  UavState s = initial_state(cfg);
  s.guidance_left = 5;
  const UavState next = step_motion(s, Vec2(20.0, 0.0), cfg, rng);
  CHECK(next.guidance_left == 4);
  CHECK(next.drift == Vec2::Zero());
  CHECK(rng.draws() == 0);
}

TEST_CASE("drift equals truth minus belief bit-exactly") {
  const WorldConfig cfg = empty_world(2.0);
  RngStream rng(4, streams::kDynamics, 0);
  RngStream pick(4, "test", 0);
  UavState s = initial_state(cfg);
  const ToolServer server = make_server(0, ToolKind::Semantic, Vec2(500.0, 500.0));
  for (int t = 0; t < 500; ++t) {
    s = step_motion(s, Vec2(pick.uniform(-20, 20), pick.uniform(-20, 20)), cfg, rng);
    if (pick.uniform() < 0.05) {
      s.pos_true = server.position + Vec2(pick.uniform(-50, 50), pick.uniform(-50, 50));
      s.drift = s.pos_true - s.pos_believed;
      s = apply_correction(s, server);
    }
    REQUIRE(s.drift == s.pos_true - s.pos_believed);
  }
}

TEST_CASE("correction zeroes drift and starts the guidance window") {
  const WorldConfig cfg = empty_world(2.0);
  UavState s = initial_state(cfg);
  s.pos_believed = Vec2(300.0, 300.0);
  s.pos_true = Vec2(303.2, 298.9);
  s.drift = s.pos_true - s.pos_believed;
  s.steps_elapsed = 17;
  const ToolServer standard = make_server(0, ToolKind::Standard, Vec2(320.0, 300.0));
  const UavState c = apply_correction(s, standard);
  CHECK(c.drift == Vec2::Zero());
  CHECK(c.pos_believed == s.pos_true);
  CHECK(c.guidance_left == 40);
  REQUIRE(c.last_correction_step.has_value());
  CHECK(*c.last_correction_step == 17);

  UavState partly = c;
  partly.guidance_left = 3;
  const UavState twice = apply_correction(partly, standard);
  CHECK(twice.pos_true == c.pos_true);
  CHECK(twice.pos_believed == c.pos_believed);
  CHECK(twice.guidance_left == 40);

  const ToolServer semantic = make_server(1, ToolKind::Semantic, Vec2(320.0, 300.0));
  CHECK(apply_correction(s, semantic).guidance_left == 12);
}

TEST_CASE("guided steps keep drift at zero") {
  const WorldConfig cfg = empty_world(3.0);
  RngStream rng(2, streams::kDynamics, 0);
  UavState s = initial_state(cfg);
  const ToolServer standard = make_server(0, ToolKind::Standard, cfg.start_pos);
  s = apply_correction(s, standard);
  for (int t = 0; t < 40; ++t) {
    s = step_motion(s, Vec2(20.0, 0.0), cfg, rng);
    REQUIRE(s.drift == Vec2::Zero());
  }
  CHECK(s.guidance_left == 0);
  s = step_motion(s, Vec2(20.0, 0.0), cfg, rng);
  CHECK(s.drift != Vec2::Zero());
}

TEST_CASE("unguided drift is a Gaussian random walk") {
  const WorldConfig cfg = empty_world(2.0);
  const int n = 100000;
  const int t_max = 10;
  double sum = 0.0;
  double sq = 0.0;
  for (int i = 0; i < n; ++i) {
    RngStream rng(5, streams::kDynamics, static_cast<std::uint64_t>(i));
    UavState s = initial_state(cfg);
    for (int t = 0; t < t_max; ++t) s = step_motion(s, Vec2::Zero(), cfg, rng);
    sum += s.drift.x();
    sq += s.drift.x() * s.drift.x();
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  const double expected = t_max * cfg.sigma_drift * cfg.sigma_drift;
  CHECK(std::abs(mean) < 3.0 * std::sqrt(expected / n));
  CHECK(std::abs(var - expected) / expected < 0.05);
}

TEST_CASE("goal test uses truth with an inclusive radius") {
  const WorldConfig cfg = empty_world();
  UavState s = initial_state(cfg);
  s.pos_true = cfg.goal_pos;
  CHECK(goal_reached(s, cfg));
  s.pos_true = cfg.goal_pos + Vec2(0.0, cfg.goal_radius);
  CHECK(goal_reached(s, cfg));
  s.pos_believed = cfg.goal_pos;
  s.pos_true = cfg.goal_pos + Vec2(50.0, 0.0);
  CHECK_FALSE(goal_reached(s, cfg));
}

TEST_CASE("velocity clamping") {
  CHECK(clamp_velocity(Vec2(3.0, 4.0), 20.0) == Vec2(3.0, 4.0));
  const Vec2 c = clamp_velocity(Vec2(30.0, 40.0), 20.0);
  CHECK(c.norm() == doctest::Approx(20.0).epsilon(1e-15));
  CHECK(c.x() / c.y() == doctest::Approx(0.75));
  CHECK(clamp_velocity(Vec2(NAN, 1.0), 20.0) == Vec2::Zero());
  CHECK(clamp_velocity(Vec2(INFINITY, 1.0), 20.0) == Vec2::Zero());
}

}
