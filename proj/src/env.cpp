#include "toolsched/env.hpp"

#include <cassert>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace toolsched {

const char* to_string(TerminationCause cause) {
  switch (cause) {
    case TerminationCause::Running: return "running";
    case TerminationCause::Goal: return "goal";
    case TerminationCause::Depleted: return "depleted";
    case TerminationCause::Timeout: return "timeout";
  }
  return "?";
}

namespace {

int steps_since_correction(const UavState& s) {
  return s.steps_elapsed - s.last_correction_step.value_or(0);
}

double horizon_scale(const WorldConfig& cfg) {
  return static_cast<double>(std::max(1, cfg.max_validity_horizon()));
}

}  // namespace

Observation encode_observation(const UavState& state, const WorldConfig& cfg) {
  Observation obs(observation_size(cfg.servers.size()));
  const double inv_arena = 1.0 / cfg.arena_size;
  obs.segment<2>(0) = state.pos_believed * inv_arena;
  obs.segment<2>(2) = (cfg.goal_pos - state.pos_believed) * inv_arena;
  obs[4] = state.energy / cfg.initial_energy;
  obs[5] = steps_since_correction(state) / static_cast<double>(cfg.max_steps);
  obs[6] = state.guidance_left / horizon_scale(cfg);
  Eigen::Index k = 7;
  for (const auto& s : cfg.servers) {
    obs.segment<2>(k) = (s.position - state.pos_believed) * inv_arena;
    obs[k + 2] = in_range(s, state.pos_believed) ? 1.0 : 0.0;
    obs[k + 3] = s.kind == ToolKind::Standard ? 1.0 : 0.0;
    obs[k + 4] = s.kind == ToolKind::Semantic ? 1.0 : 0.0;
    k += 5;
  }
  return obs;
}

ObservationFields decode_observation(const Observation& obs, const WorldConfig& cfg) {
  if (obs.size() != observation_size(cfg.servers.size()))
    throw std::invalid_argument("observation length does not match config");
  ObservationFields f;
  f.pos_believed = obs.segment<2>(0) * cfg.arena_size;
  f.energy = obs[4] * cfg.initial_energy;
  f.steps_since_correction = static_cast<int>(std::lround(obs[5] * cfg.max_steps));
  f.guidance_left = static_cast<int>(std::lround(obs[6] * horizon_scale(cfg)));
  return f;
}

const ToolServer* resolve_server(const UavState& state, const WorldConfig& cfg) {
  const ToolServer* best = nullptr;
  double best_distance = 0.0;
  for (const auto& s : cfg.servers) {
    if (!in_range(s, state.pos_believed)) continue;
    const double d = (s.position - state.pos_believed).norm();
    if (best == nullptr || d < best_distance) {
      best = &s;
      best_distance = d;
    }
  }
  return best;
}

Env::Env(WorldConfig cfg, bool shield_on)
    : cfg_(std::move(cfg)),
      episode_cfg_(cfg_),
      shield_on_(shield_on),
      dynamics_rng_(cfg_.seed, streams::kDynamics, 0) {
  validate(cfg_);
}

Observation Env::reset(std::uint64_t episode_index) {
  episode_index_ = episode_index;
  episode_cfg_ = realize_layout(cfg_, episode_index);
  state_ = initial_state(episode_cfg_);
  ledger_ = EnergyLedger(episode_cfg_.initial_energy);
  dynamics_rng_ = RngStream(cfg_.seed, streams::kDynamics, episode_index);
  cause_ = TerminationCause::Running;
  return observe();
}

Transition Env::step(const Action& proposed_raw) {
  if (done()) throw std::logic_error("step() called on a finished episode");
  const WorldConfig& cfg = episode_cfg_;
  const RewardParams& rp = cfg.reward_params;

  Transition t;
  t.observation = observe();
  t.proposed = Action{clamp_velocity(proposed_raw.velocity, cfg.v_max), proposed_raw.activate};

  const ShieldVerdict verdict =
      shield_on_ ? screen(t.proposed, state_, cfg) : pass_through(t.proposed);
  t.action = verdict.final_action;
  t.info.overridden = verdict.overridden;
  t.info.predicted_call_cost = verdict.predicted_call_cost;
  t.components.shield = verdict.penalty;

  const double d_prev = (cfg.goal_pos - state_.pos_believed).norm();
  const ToolServer* accessible = resolve_server(state_, cfg);
  t.info.guidance_before = state_.guidance_left;
  t.info.server_accessible_before = accessible != nullptr;

  const int step_index = state_.steps_elapsed;
  double joules = 0.0;
  bool tool_depleted = false;

  if (t.action.activate) {
    if (accessible == nullptr || !in_range(*accessible, state_.pos_true)) {
      t.info.wasted_activation = true;
      t.info.link_failed = accessible != nullptr;
      t.components.waste = -rp.rho_waste;
    } else {
      const double cost = tool_cost(*accessible, state_.pos_believed, cfg.energy_params);
      const EnergyCategory cat = tool_category(accessible->kind);
      const double paid = ledger_.charge(step_index, cat, cost);
      t.info.charges[static_cast<int>(cat)] += paid;
      joules += paid;
      t.info.server_index = accessible->index;
      t.info.activation_distance = (accessible->position - state_.pos_believed).norm();
      state_ = apply_correction(state_, *accessible);
      tool_depleted = ledger_.depleted();
    }
  }

  if (!tool_depleted) {
    state_ = step_motion(state_, t.action.velocity, cfg, dynamics_rng_);
    const double paid =
        ledger_.charge(step_index, EnergyCategory::Flight,
                       flight_cost(t.action.velocity, cfg.energy_params, cfg.dt));
    t.info.charges[static_cast<int>(EnergyCategory::Flight)] += paid;
    joules += paid;
  }
  state_.energy = ledger_.remaining();

  const double d_now = (cfg.goal_pos - state_.pos_believed).norm();
  t.components.progress = rp.w_progress * (d_prev - d_now);
  t.components.time = -rp.w_time;
  t.components.energy = -rp.w_energy * joules;

  if (ledger_.depleted()) {
    cause_ = TerminationCause::Depleted;
    t.info.depleted_by_tool = tool_depleted;
    t.components.terminal = -rp.r_crash;
  } else if (goal_reached(state_, cfg)) {
    cause_ = TerminationCause::Goal;
    t.components.terminal = rp.r_goal;
  } else if (state_.steps_elapsed >= cfg.max_steps) {
    cause_ = TerminationCause::Timeout;
  }
  t.cause = cause_;
  t.done = done();
  t.reward = t.components.total();
  return t;
}

const char* to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::Random: return "random";
    case BaselineKind::Greedy: return "greedy";
    case BaselineKind::CostAware: return "costaware";
    case BaselineKind::Straight: return "straight";
  }
  return "?";
}

BaselineKind baseline_kind_from_string(const std::string& name) {
  if (name == "random") return BaselineKind::Random;
  if (name == "greedy") return BaselineKind::Greedy;
  if (name == "costaware" || name == "cost-aware") return BaselineKind::CostAware;
  if (name == "straight") return BaselineKind::Straight;
  throw std::invalid_argument("unknown baseline '" + name + "'");
}

Vec2 heading_to_goal(const UavState& state, const WorldConfig& cfg) {
  const Vec2 delta = cfg.goal_pos - state.pos_believed;
  const double distance = delta.norm();
  if (distance <= 0.0) return Vec2::Zero();
  const double speed = std::min(cfg.v_max, distance / cfg.dt);
  return delta * (speed / distance);
}

Action baseline_policy(BaselineKind kind, const Observation& /*obs*/, const UavState& state,
                       const WorldConfig& cfg, RngStream& rng) {
  switch (kind) {
    case BaselineKind::Random: {
      const double r = cfg.v_max * std::sqrt(rng.uniform());
      const double theta = 2.0 * std::numbers::pi * rng.uniform();
      const bool activate = rng.bernoulli(0.5);
      return {Vec2(r * std::cos(theta), r * std::sin(theta)), activate};
    }
    case BaselineKind::Greedy:
      return {heading_to_goal(state, cfg), resolve_server(state, cfg) != nullptr};
    case BaselineKind::CostAware: {
      const ToolServer* server = resolve_server(state, cfg);
      bool activate = false;
      if (server != nullptr) {
        const double cost = tool_cost(*server, state.pos_believed, cfg.energy_params);
        activate = state.energy - cost >= reserve_to_goal(state, cfg);
      }
      return {heading_to_goal(state, cfg), activate};
    }
    case BaselineKind::Straight:
      return {heading_to_goal(state, cfg), false};
  }
  throw std::invalid_argument("unknown baseline kind");
}

}  // namespace toolsched
