#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "oracles.hpp"
#include "toolsched/env.hpp"

using namespace toolsched;
using namespace toolsched::testing;

namespace {

double run_episode(Env& env, BaselineKind kind, std::uint64_t ep, std::vector<Transition>* out = nullptr) {
  RngStream rng(env.config().seed, streams::kBaseline, ep);
  env.reset(ep);
  double ret = 0.0;
  while (!env.done()) {
    const Action a = baseline_policy(kind, env.observe(), env.state(), env.episode_config(), rng);
    const Transition t = env.step(a);
    ret += t.reward;
    if (out) out->push_back(t);
  }
  return ret;
}

}  // namespace

TEST_SUITE("env") {

TEST_CASE("reset is deterministic and starts full") {
  const WorldConfig cfg = random_scenario(3, 2, 2);
  Env env(cfg, false);
  const Observation a = env.reset(5);
  const Observation b = env.reset(5);
  CHECK(a == b);
  CHECK(a.size() == 27);
  CHECK(a[4] == 1.0);
  CHECK(a[2] == (cfg.goal_pos.x() - cfg.start_pos.x()) / cfg.arena_size);
  CHECK(a[3] == (cfg.goal_pos.y() - cfg.start_pos.y()) / cfg.arena_size);
  CHECK(env.state().guidance_left == 0);
  CHECK(env.state().drift == Vec2::Zero());
}

TEST_CASE("server resolution") {
  WorldConfig cfg = empty_world();
  UavState s = initial_state(cfg);
  s.pos_believed = Vec2(500.0, 500.0);
  CHECK(resolve_server(s, cfg) == nullptr);
  cfg.servers.push_back(make_server(0, ToolKind::Standard, Vec2(600.0, 500.0)));
  REQUIRE(resolve_server(s, cfg) != nullptr);
  CHECK(resolve_server(s, cfg)->index == 0);
  cfg.servers.push_back(make_server(1, ToolKind::Semantic, Vec2(400.0, 500.0)));
  CHECK(resolve_server(s, cfg)->index == 0);  // tie: lower index
  cfg.servers.push_back(make_server(2, ToolKind::Semantic, Vec2(450.0, 500.0)));
  CHECK(resolve_server(s, cfg)->index == 2);
}

TEST_CASE("straight flight in a noiseless empty world matches the closed form") {
  const WorldConfig cfg = empty_world(0.0);
  const int k = straight_line_steps(cfg);
  const double expected = straight_line_return(cfg, k);
  Env env(cfg, false);
  std::vector<Transition> ts;
  const double ret = run_episode(env, BaselineKind::Straight, 0, &ts);
  CHECK(ts.size() == static_cast<std::size_t>(k));
  CHECK(env.cause() == TerminationCause::Goal);
  CHECK(std::abs(ret - expected) <= 1e-9);
}

TEST_CASE("activation with nothing in range is a penalised no-op") {
  const WorldConfig cfg = empty_world(2.0);
  Env env(cfg, false);
  env.reset(0);
  const Transition t = env.step({Vec2(20.0, 0.0), true});
  CHECK(t.info.wasted_activation);
  CHECK_FALSE(t.info.server_index.has_value());
  CHECK(t.components.waste == -cfg.reward_params.rho_waste);
  CHECK(t.info.charges[1] == 0.0);
  CHECK(t.info.charges[2] == 0.0);
  CHECK(env.state().last_correction_step == std::nullopt);
}

TEST_CASE("executed activation charges and corrects") {
  WorldConfig cfg = empty_world(2.0);
  cfg.servers.push_back(make_server(0, ToolKind::Semantic, cfg.start_pos + Vec2(100.0, 0.0)));
  Env env(cfg, false);
  env.reset(0);
  const Transition t = env.step({Vec2(20.0, 0.0), true});
  REQUIRE(t.info.server_index.has_value());
  CHECK(t.info.charges[static_cast<int>(EnergyCategory::Compute)] == 600.0);
  CHECK(t.info.activation_distance == doctest::Approx(100.0));
  CHECK(env.state().guidance_left == 11);  // 12, minus the step just taken
  CHECK(env.state().drift == Vec2::Zero());
}

TEST_CASE("running out of energy mid-flight") {
  WorldConfig cfg = empty_world(0.0);
  cfg.initial_energy = 500.0;
  Env env(cfg, false);
  std::vector<Transition> ts;
  run_episode(env, BaselineKind::Straight, 0, &ts);
  CHECK(env.cause() == TerminationCause::Depleted);
  CHECK(ts.back().components.terminal == -cfg.reward_params.r_crash);
  CHECK(env.state().energy == 0.0);
  CHECK(env.ledger().remaining() == 0.0);
}

TEST_CASE("timeout") {
  WorldConfig cfg = empty_world(0.0);
  cfg.max_steps = 10;
  Env env(cfg, false);
  std::vector<Transition> ts;
  run_episode(env, BaselineKind::Straight, 0, &ts);
  CHECK(env.cause() == TerminationCause::Timeout);
  CHECK(ts.size() == 10);
  CHECK(ts.back().components.terminal == 0.0);
  CHECK_THROWS_AS(env.step({}), std::logic_error);
}

TEST_CASE("rewards decompose exactly and one call per step") {
  WorldConfig cfg = random_scenario(4, 2, 2);
  cfg.layout = LayoutMode::PerEpisode;
  for (bool shield : {false, true}) {
    Env env(cfg, shield);
    for (BaselineKind kind : {BaselineKind::Random, BaselineKind::Greedy, BaselineKind::CostAware}) {
      for (std::uint64_t ep = 0; ep < 20; ++ep) {
        std::vector<Transition> ts;
        run_episode(env, kind, ep, &ts);
        for (const auto& t : ts) {
          const auto& c = t.components;
          REQUIRE(t.reward == c.progress + c.time + c.energy + c.shield + c.waste + c.terminal);
          REQUIRE((t.info.charges[1] == 0.0 || t.info.charges[2] == 0.0));
          REQUIRE(t.done == (t.cause != TerminationCause::Running));
          REQUIRE(t.action.velocity.norm() <= cfg.v_max * (1.0 + 1e-12));
        }
      }
    }
  }
}

TEST_CASE("with the shield on, tool calls never cause depletion") {
  WorldConfig cfg = random_scenario(4, 2, 2);
  cfg.layout = LayoutMode::PerEpisode;
  cfg.initial_energy = 6000.0;
  Env env(cfg, true);
  int overrides = 0;
  for (std::uint64_t ep = 0; ep < 200; ++ep) {
    std::vector<Transition> ts;
    run_episode(env, ep % 2 ? BaselineKind::Greedy : BaselineKind::Random, ep, &ts);
    for (const auto& t : ts) {
      REQUIRE_FALSE(t.info.depleted_by_tool);
      overrides += t.info.overridden;
    }
  }
  CHECK(overrides > 0);
}

TEST_CASE("shield on and off diverge only from the first override") {
  WorldConfig cfg = random_scenario(4, 2, 2);
  cfg.layout = LayoutMode::PerEpisode;
  cfg.initial_energy = 6000.0;
  Env on(cfg, true);
  Env off(cfg, false);
  int checked = 0;
  for (std::uint64_t ep = 0; ep < 50; ++ep) {
    std::vector<Transition> a, b;
    run_episode(on, BaselineKind::Greedy, ep, &a);
    run_episode(off, BaselineKind::Greedy, ep, &b);
    std::size_t first = a.size();
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i].info.overridden) {
        first = i;
        break;
      }
    for (std::size_t i = 0; i < std::min(first, b.size()); ++i) {
      REQUIRE(a[i].reward == b[i].reward);
      REQUIRE(a[i].observation == b[i].observation);
    }
    if (first < a.size()) {
      ++checked;
      CHECK(a[first].proposed == b[first].proposed);
      CHECK(a[first].action.velocity == b[first].action.velocity);
      CHECK(b[first].action.activate);
      CHECK_FALSE(a[first].action.activate);
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("observation fields decode back") {
  const WorldConfig cfg = random_scenario(6, 2, 2);
  Env env(cfg, false);
  RngStream rng(6, streams::kBaseline, 0);
  for (std::uint64_t ep = 0; ep < 20; ++ep) {
    env.reset(ep);
    while (!env.done()) {
      const Observation obs = env.observe();
      const UavState& s = env.state();
      const ObservationFields f = decode_observation(obs, cfg);
      REQUIRE((f.pos_believed - s.pos_believed).norm() <= 1e-9);
      REQUIRE(std::abs(f.energy - s.energy) <= 1e-9);
      REQUIRE(f.guidance_left == s.guidance_left);
      REQUIRE(obs.allFinite());
      const bool inside = s.pos_believed.minCoeff() >= 0.0 && s.pos_believed.maxCoeff() <= cfg.arena_size;
      if (inside) REQUIRE(obs.cwiseAbs().maxCoeff() <= 1.5);
      env.step(baseline_policy(BaselineKind::CostAware, obs, s, cfg, rng));
    }
  }
}

TEST_CASE("scripted baselines") {
  WorldConfig cfg = empty_world();
  cfg.servers.push_back(make_server(0, ToolKind::Standard, Vec2(900.0, 900.0)));
  UavState s = initial_state(cfg);
  s.energy = cfg.initial_energy;
  RngStream rng(1, streams::kBaseline, 0);
  const Observation obs = encode_observation(s, cfg);
  CHECK_FALSE(baseline_policy(BaselineKind::Greedy, obs, s, cfg, rng).activate);

  s.pos_believed = Vec2(850.0, 850.0);
  CHECK(baseline_policy(BaselineKind::Greedy, obs, s, cfg, rng).activate);
  CHECK(baseline_policy(BaselineKind::CostAware, obs, s, cfg, rng).activate);
  const double cost = tool_cost(cfg.servers[0], s.pos_believed, cfg.energy_params);
  s.energy = cost + reserve_to_goal(s, cfg) - 1.0;
  CHECK_FALSE(baseline_policy(BaselineKind::CostAware, obs, s, cfg, rng).activate);
  CHECK(baseline_policy(BaselineKind::Greedy, obs, s, cfg, rng).activate);

  const Action g = baseline_policy(BaselineKind::Greedy, obs, s, cfg, rng);
  CHECK(g.velocity.norm() == doctest::Approx(cfg.v_max));
  for (int i = 0; i < 1000; ++i)
    REQUIRE(baseline_policy(BaselineKind::Random, obs, s, cfg, rng).velocity.norm() <= cfg.v_max);

  CHECK(baseline_kind_from_string("costaware") == BaselineKind::CostAware);
  CHECK_THROWS_AS(baseline_kind_from_string("oracle"), std::invalid_argument);
}

}
