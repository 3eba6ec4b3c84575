#include "toolsched/ppo.hpp"

#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace toolsched {

using ordered_json = nlohmann::ordered_json;

void validate(const PpoConfig& c) {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("ppo config: ") + what);
  };
  need(c.gamma >= 0.0 && c.gamma <= 1.0, "gamma must be in [0,1]");
  need(c.lam >= 0.0 && c.lam <= 1.0, "lam must be in [0,1]");
  need(c.clip_eps > 0.0, "clip_eps must be > 0");
  need(c.epochs >= 1, "epochs must be >= 1");
  need(c.minibatch_size >= 1, "minibatch_size must be >= 1");
  need(c.rollout_length >= 1, "rollout_length must be >= 1");
  need(c.n_envs >= 1, "n_envs must be >= 1");
  need(c.rollout_length % c.n_envs == 0, "rollout_length must be a multiple of n_envs");
  need(c.total_steps >= 0, "total_steps must be >= 0");
  need(c.learning_rate > 0.0, "learning_rate must be > 0");
  need(c.max_grad_norm > 0.0, "max_grad_norm must be > 0");
  need(c.reward_scale > 0.0, "reward_scale must be > 0");
  need(c.hidden >= 1, "hidden must be >= 1");
  need(c.value_coef >= 0.0 && c.entropy_coef >= 0.0, "loss coefficients must be >= 0");
}

namespace {

ordered_json ppo_to_json(const PpoConfig& c) {
  ordered_json j;
  j["gamma"] = c.gamma;
  j["lam"] = c.lam;
  j["clip_eps"] = c.clip_eps;
  j["epochs"] = c.epochs;
  j["minibatch_size"] = c.minibatch_size;
  j["rollout_length"] = c.rollout_length;
  j["learning_rate"] = c.learning_rate;
  j["value_coef"] = c.value_coef;
  j["entropy_coef"] = c.entropy_coef;
  j["total_steps"] = c.total_steps;
  j["n_envs"] = c.n_envs;
  j["max_grad_norm"] = c.max_grad_norm;
  j["reward_scale"] = c.reward_scale;
  j["hidden"] = c.hidden;
  j["init_log_std"] = c.init_log_std;
  return j;
}

template <typename T>
void take(const ordered_json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

PpoConfig ppo_from_json(const ordered_json& j) {
  PpoConfig c;
  take(j, "gamma", c.gamma);
  take(j, "lam", c.lam);
  take(j, "clip_eps", c.clip_eps);
  take(j, "epochs", c.epochs);
  take(j, "minibatch_size", c.minibatch_size);
  take(j, "rollout_length", c.rollout_length);
  take(j, "learning_rate", c.learning_rate);
  take(j, "value_coef", c.value_coef);
  take(j, "entropy_coef", c.entropy_coef);
  take(j, "total_steps", c.total_steps);
  take(j, "n_envs", c.n_envs);
  take(j, "max_grad_norm", c.max_grad_norm);
  take(j, "reward_scale", c.reward_scale);
  take(j, "hidden", c.hidden);
  take(j, "init_log_std", c.init_log_std);
  validate(c);
  return c;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::string serialize_ppo_config(const PpoConfig& cfg) { return ppo_to_json(cfg).dump(2) + "\n"; }

PpoConfig parse_ppo_config(const std::string& json_text) {
  try {
    return ppo_from_json(ordered_json::parse(json_text));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("ppo config: ") + e.what());
  }
}

PpoConfig load_ppo_config(const std::filesystem::path& path) {
  return parse_ppo_config(read_file(path));
}

bool RolloutBuffer::consistent() const {
  const std::size_t n = rewards.size();
  const bool base = observations.size() == n && raw_velocity.size() == n &&
                    activate.size() == n && executed.size() == n && log_prob.size() == n &&
                    values.size() == n && dones.size() == n;
  const bool adv = (advantages.empty() && returns.empty()) ||
                   (advantages.size() == n && returns.size() == n);
  return base && adv;
}

void RolloutBuffer::append(const RolloutBuffer& o) {
  auto cat = [](auto& dst, const auto& src) { dst.insert(dst.end(), src.begin(), src.end()); };
  cat(observations, o.observations);
  cat(raw_velocity, o.raw_velocity);
  cat(activate, o.activate);
  cat(executed, o.executed);
  cat(log_prob, o.log_prob);
  cat(values, o.values);
  cat(rewards, o.rewards);
  cat(dones, o.dones);
  cat(advantages, o.advantages);
  cat(returns, o.returns);
}

void compute_gae(RolloutBuffer& buffer, double last_value, double gamma, double lam) {
  const std::size_t n = buffer.size();
  if (n == 0) throw std::invalid_argument("compute_gae: empty buffer");
  buffer.advantages.assign(n, 0.0);
  buffer.returns.assign(n, 0.0);
  double next_value = last_value;
  double next_adv = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double live = buffer.dones[k] ? 0.0 : 1.0;
    const double delta = buffer.rewards[k] + gamma * next_value * live - buffer.values[k];
    const double adv = delta + gamma * lam * live * next_adv;
    buffer.advantages[k] = adv;
    buffer.returns[k] = adv + buffer.values[k];
    next_value = buffer.values[k];
    next_adv = adv;
  }
}

void normalize_advantages(RolloutBuffer& buffer) {
  const std::size_t n = buffer.advantages.size();
  if (n == 0) return;
  double mean = 0.0;
  for (double a : buffer.advantages) mean += a;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double a : buffer.advantages) var += (a - mean) * (a - mean);
  var /= static_cast<double>(n);
  const double scale = 1.0 / (std::sqrt(var) + 1e-8);
  for (double& a : buffer.advantages) a = (a - mean) * scale;
}

Minibatch<double> gather_minibatch(const RolloutBuffer& buffer,
                                   const std::vector<std::size_t>& indices) {
  const Eigen::Index n = static_cast<Eigen::Index>(indices.size());
  const Eigen::Index obs_dim = buffer.observations.front().size();
  Minibatch<double> mb;
  mb.observations.resize(obs_dim, n);
  mb.raw_velocity.resize(2, n);
  mb.activate.resize(indices.size());
  mb.old_log_prob.resize(n);
  mb.advantages.resize(n);
  mb.returns.resize(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const std::size_t k = indices[static_cast<std::size_t>(c)];
    mb.observations.col(c) = buffer.observations[k];
    mb.raw_velocity.col(c) = buffer.raw_velocity[k];
    mb.activate[static_cast<std::size_t>(c)] = buffer.activate[k];
    mb.old_log_prob[c] = buffer.log_prob[k];
    mb.advantages[c] = buffer.advantages[k];
    mb.returns[c] = buffer.returns[k];
  }
  return mb;
}

UpdateStats ppo_update(PolicyNetd& net, Adam<double>& optimizer, const RolloutBuffer& buffer,
                       const PpoConfig& cfg, RngStream& shuffle_rng) {
  if (!buffer.consistent() || buffer.advantages.size() != buffer.size())
    throw std::logic_error("ppo_update: advantages must be computed first");
  const std::size_t n = buffer.size();
  std::vector<std::size_t> order(n);
  UpdateStats stats;
  Eigen::VectorXd grad;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.minibatch_size)) {
      const std::size_t stop = std::min(n, start + static_cast<std::size_t>(cfg.minibatch_size));
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(stop));
      const Minibatch<double> mb = gather_minibatch(buffer, idx);
      const LossBreakdown<double> loss =
          ppo_loss(net, mb, cfg.clip_eps, cfg.value_coef, cfg.entropy_coef, &grad);
      if (!std::isfinite(loss.total) || !grad.allFinite()) {
        std::ostringstream msg;
        msg << "ppo_update: non-finite loss at epoch " << epoch << " minibatch offset " << start
            << " (policy " << loss.policy << ", value " << loss.value << ", entropy "
            << loss.entropy << ", mean ratio " << loss.mean_ratio << ")";
        throw std::runtime_error(msg.str());
      }
      if (stats.minibatches == 0) {
        stats.first_mean_ratio = loss.mean_ratio;
        stats.first_clip_fraction = loss.clip_fraction;
        stats.first_surrogate_unclipped = loss.surrogate_unclipped;
        stats.first_surrogate_clipped = loss.surrogate_clipped;
      }
      clip_grad_norm(grad, cfg.max_grad_norm);
      optimizer.step(net.params(), grad);

      stats.mean_ratio += loss.mean_ratio;
      stats.clip_fraction += loss.clip_fraction;
      stats.policy_loss += loss.policy;
      stats.value_loss += loss.value;
      stats.entropy += loss.entropy;
      stats.approx_kl += loss.approx_kl;
      ++stats.minibatches;
    }
  }
  if (stats.minibatches > 0) {
    const double k = 1.0 / stats.minibatches;
    stats.mean_ratio *= k;
    stats.clip_fraction *= k;
    stats.policy_loss *= k;
    stats.value_loss *= k;
    stats.entropy *= k;
    stats.approx_kl *= k;
  }
  return stats;
}

TrainResult train(const WorldConfig& base_cfg, const PpoConfig& ppo, bool shield_on,
                  std::uint64_t seed, const TrainObserver& observer) {
  validate(ppo);
  WorldConfig cfg = base_cfg;
  cfg.seed = seed;
  validate(cfg);

  const Eigen::Index obs_dim = observation_size(cfg.servers.size());
  TrainResult result{PolicyNetd::initialized(obs_dim, ppo.hidden, seed, ppo.init_log_std), {}};
  PolicyNetd& net = result.net;
  Adam<double> optimizer(net.num_params(), ppo.learning_rate);

  const int n_envs = ppo.n_envs;
  const int steps_per_env = ppo.rollout_length / n_envs;
  const std::int64_t n_updates = ppo.total_steps / ppo.rollout_length;

  std::vector<Env> envs;
  std::vector<RngStream> policy_rngs;
  std::vector<std::uint64_t> next_episode(static_cast<std::size_t>(n_envs));
  std::vector<double> episode_return(static_cast<std::size_t>(n_envs), 0.0);
  envs.reserve(static_cast<std::size_t>(n_envs));
  for (int w = 0; w < n_envs; ++w) {
    envs.emplace_back(cfg, shield_on);
    envs.back().reset(static_cast<std::uint64_t>(w));
    next_episode[static_cast<std::size_t>(w)] = static_cast<std::uint64_t>(w + n_envs);
    policy_rngs.emplace_back(seed, streams::kPolicy, static_cast<std::uint64_t>(w));
  }

  std::int64_t env_steps = 0;
  Eigen::MatrixXd obs_batch(obs_dim, n_envs);
  for (std::int64_t update = 0; update < n_updates; ++update) {
    std::vector<RolloutBuffer> segments(static_cast<std::size_t>(n_envs));
    CurvePoint point;
    point.update = static_cast<int>(update);
    double return_sum = 0.0;
    int successes = 0;
    int depletions = 0;

    for (int t = 0; t < steps_per_env; ++t) {
      for (int w = 0; w < n_envs; ++w) obs_batch.col(w) = envs[static_cast<std::size_t>(w)].observe();
      const ForwardCache<double> cache = net.forward_batch(obs_batch);
      for (int w = 0; w < n_envs; ++w) {
        const auto uw = static_cast<std::size_t>(w);
        Env& env = envs[uw];
        const PolicyOutput<double> out = net.output_at(cache, w);
        const PolicySample<double> s = sample_from(out, policy_rngs[uw]);
        const Transition tr = env.step(decode_action(s.raw_velocity, s.activate, env.episode_config()));

        RolloutBuffer& seg = segments[uw];
        seg.observations.push_back(obs_batch.col(w));
        seg.raw_velocity.push_back(s.raw_velocity);
        seg.activate.push_back(s.activate ? 1 : 0);
        seg.executed.push_back(tr.action);
        seg.log_prob.push_back(s.log_prob);
        seg.values.push_back(out.value);
        seg.rewards.push_back(tr.reward * ppo.reward_scale);
        seg.dones.push_back(tr.done ? 1 : 0);

        episode_return[uw] += tr.reward;
        if (tr.info.overridden) ++point.overrides;
        if (tr.info.server_index) ++point.activations;
        if (tr.done) {
          ++point.episodes;
          return_sum += episode_return[uw];
          episode_return[uw] = 0.0;
          if (tr.cause == TerminationCause::Goal) ++successes;
          if (tr.cause == TerminationCause::Depleted) ++depletions;
          if (tr.info.depleted_by_tool) ++point.tool_depletions;
          env.reset(next_episode[uw]);
          next_episode[uw] += static_cast<std::uint64_t>(n_envs);
        }
      }
    }
    env_steps += static_cast<std::int64_t>(steps_per_env) * n_envs;

    for (int w = 0; w < n_envs; ++w) obs_batch.col(w) = envs[static_cast<std::size_t>(w)].observe();
    const ForwardCache<double> tail = net.forward_batch(obs_batch);
    RolloutBuffer merged;
    for (int w = 0; w < n_envs; ++w) {
      auto& seg = segments[static_cast<std::size_t>(w)];
      compute_gae(seg, tail.head(kValue, w), ppo.gamma, ppo.lam);
      merged.append(seg);
    }
    normalize_advantages(merged);

    RngStream shuffle_rng(seed, streams::kMinibatch, static_cast<std::uint64_t>(update));
    const UpdateStats stats = ppo_update(net, optimizer, merged, ppo, shuffle_rng);

    point.env_steps = env_steps;
    point.mean_return = point.episodes > 0 ? return_sum / point.episodes
                                           : std::numeric_limits<double>::quiet_NaN();
    point.success_rate = point.episodes > 0 ? double(successes) / point.episodes : 0.0;
    point.depletion_rate = point.episodes > 0 ? double(depletions) / point.episodes : 0.0;
    point.mean_ratio = stats.mean_ratio;
    point.clip_fraction = stats.clip_fraction;
    point.policy_loss = stats.policy_loss;
    point.value_loss = stats.value_loss;
    point.entropy = stats.entropy;
    result.curve.push_back(point);
    if (observer) observer(point);
  }
  return result;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_curve_csv(const std::vector<CurvePoint>& curve, std::ostream& out) {
  out << "update,env_steps,episodes,mean_return,success_rate,depletion_rate,tool_depletions,"
         "overrides,activations,mean_ratio,clip_fraction,policy_loss,value_loss,entropy\n";
  for (const auto& p : curve) {
    out << p.update << ',' << p.env_steps << ',' << p.episodes << ',' << fmt(p.mean_return) << ','
        << fmt(p.success_rate) << ',' << fmt(p.depletion_rate) << ',' << p.tool_depletions << ','
        << p.overrides << ',' << p.activations << ',' << fmt(p.mean_ratio) << ','
        << fmt(p.clip_fraction) << ',' << fmt(p.policy_loss) << ',' << fmt(p.value_loss) << ','
        << fmt(p.entropy) << '\n';
  }
}

std::vector<CurvePoint> read_curve_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open curve '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  std::vector<CurvePoint> curve;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 14)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected 14 columns");
    CurvePoint p;
    try {
      p.update = std::stoi(f[0]);
      p.env_steps = std::stoll(f[1]);
      p.episodes = std::stoi(f[2]);
      p.mean_return = std::stod(f[3]);
      p.success_rate = std::stod(f[4]);
      p.depletion_rate = std::stod(f[5]);
      p.tool_depletions = std::stoi(f[6]);
      p.overrides = std::stoi(f[7]);
      p.activations = std::stoi(f[8]);
      p.mean_ratio = std::stod(f[9]);
      p.clip_fraction = std::stod(f[10]);
      p.policy_loss = std::stod(f[11]);
      p.value_loss = std::stod(f[12]);
      p.entropy = std::stod(f[13]);
    } catch (const std::exception&) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": bad number");
    }
    curve.push_back(p);
  }
  return curve;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  ordered_json j;
  j["format"] = "toolsched-checkpoint-1";
  j["seed"] = ckpt.seed;
  j["shield_on"] = ckpt.shield_on;
  j["obs_dim"] = ckpt.net.obs_dim();
  j["hidden"] = ckpt.net.hidden();
  j["ppo"] = ppo_to_json(ckpt.ppo);
  ordered_json params = ordered_json::array();
  for (Eigen::Index i = 0; i < ckpt.net.num_params(); ++i) params.push_back(ckpt.net.params()[i]);
  j["params"] = std::move(params);
  return j.dump() + "\n";
}

Checkpoint parse_checkpoint(const std::string& text) {
  try {
    const ordered_json j = ordered_json::parse(text);
    if (j.value("format", std::string{}) != "toolsched-checkpoint-1")
      throw std::runtime_error("checkpoint: unknown format");
    Checkpoint c;
    c.seed = j.at("seed").get<std::uint64_t>();
    c.shield_on = j.at("shield_on").get<bool>();
    c.ppo = ppo_from_json(j.at("ppo"));
    const auto obs_dim = j.at("obs_dim").get<Eigen::Index>();
    const auto hidden = j.at("hidden").get<Eigen::Index>();
    c.net = PolicyNetd(obs_dim, hidden);
    const auto& params = j.at("params");
    if (static_cast<Eigen::Index>(params.size()) != c.net.num_params())
      throw std::runtime_error("checkpoint: parameter count mismatch");
    for (Eigen::Index i = 0; i < c.net.num_params(); ++i)
      c.net.params()[i] = params[static_cast<std::size_t>(i)].get<double>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << serialize_checkpoint(ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_file(path));
}

}  // namespace toolsched
