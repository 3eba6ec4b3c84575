#ifndef TOOLSCHED_PPO_HPP_
#define TOOLSCHED_PPO_HPP_

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "toolsched/dynamics.hpp"
#include "toolsched/env.hpp"
#include "toolsched/policy.hpp"
#include "toolsched/world.hpp"

namespace toolsched {

struct PpoConfig {
  double gamma = 0.99;
  double lam = 0.95;
  double clip_eps = 0.2;
  int epochs = 4;
  int minibatch_size = 256;
  int rollout_length = 4096;  // env steps per update, summed over envs
  double learning_rate = 3e-4;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  std::int64_t total_steps = 1'000'000;
  int n_envs = 8;
  double max_grad_norm = 0.5;
  // Learner-side reward multiplier; logged returns stay unscaled.
  double reward_scale = 0.01;
  int hidden = 64;
  double init_log_std = -0.5;
};

// Throws std::invalid_argument naming the violated bound.
void validate(const PpoConfig& cfg);

std::string serialize_ppo_config(const PpoConfig& cfg);
PpoConfig parse_ppo_config(const std::string& json_text);
PpoConfig load_ppo_config(const std::filesystem::path& path);

/// One env's contiguous rollout segment, or the merged batch.
///
/// `raw_velocity`/`activate`/`log_prob` describe the action the policy
/// SAMPLED; `executed` is what the env ran after the shield. Importance
/// ratios are always built from the sampled fields.
struct RolloutBuffer {
  std::vector<Eigen::VectorXd> observations;
  std::vector<Eigen::Vector2d> raw_velocity;
  std::vector<std::uint8_t> activate;
  std::vector<Action> executed;
  std::vector<double> log_prob;
  std::vector<double> values;
  std::vector<double> rewards;
  std::vector<std::uint8_t> dones;
  std::vector<double> advantages;
  std::vector<double> returns;

  std::size_t size() const { return rewards.size(); }
  bool consistent() const;
  void append(const RolloutBuffer& other);
};

/// GAE(gamma, lambda):
///   delta_t = r_t + gamma * V_{t+1} * (1 - done_t) - V_t
///   A_t     = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}
/// with V_T = last_value. Fills advantages and returns = A + V (raw, not
/// normalized). Throws on an empty buffer.
void compute_gae(RolloutBuffer& buffer, double last_value, double gamma, double lam);

// Mean 0 / std 1 over the whole buffer, eps = 1e-8.
void normalize_advantages(RolloutBuffer& buffer);

template <typename Scalar>
struct Minibatch {
  MatrixX<Scalar> observations;  // obs_dim x B
  MatrixX<Scalar> raw_velocity;  // 2 x B
  std::vector<std::uint8_t> activate;
  VectorX<Scalar> old_log_prob;
  VectorX<Scalar> advantages;
  VectorX<Scalar> returns;

  Eigen::Index size() const { return old_log_prob.size(); }
};

Minibatch<double> gather_minibatch(const RolloutBuffer& buffer,
                                   const std::vector<std::size_t>& indices);

template <typename Scalar>
struct LossBreakdown {
  Scalar total{0};
  Scalar policy{0};
  Scalar value{0};
  Scalar entropy{0};
  Scalar mean_ratio{0};
  Scalar clip_fraction{0};
  Scalar approx_kl{0};
  Scalar surrogate_unclipped{0};  // mean(rA)
  Scalar surrogate_clipped{0};    // mean(clip(r)A)
};

/// Clipped-surrogate PPO loss on one minibatch:
///   -mean(min(rA, clip(r, 1-eps, 1+eps) A)) + c_v mean((V - R)^2) - c_e mean(H)
/// When `grad` is non-null it receives dLoss/dparams by reverse-mode
/// accumulation through the network.
template <typename Scalar>
LossBreakdown<Scalar> ppo_loss(const PolicyNet<Scalar>& net, const Minibatch<Scalar>& mb,
                               Scalar clip_eps, Scalar value_coef, Scalar entropy_coef,
                               VectorX<Scalar>* grad) {
  using std::exp;
  const Eigen::Index n = mb.size();
  const Scalar inv_n = Scalar(1) / Scalar(n);
  const ForwardCache<Scalar> cache = net.forward_batch(mb.observations);
  const Vector2<Scalar> log_std = net.log_std();
  const Vector2<Scalar> inv_var{exp(Scalar(-2) * log_std[0]), exp(Scalar(-2) * log_std[1])};

  MatrixX<Scalar> d_head = MatrixX<Scalar>::Zero(kHeadRows, n);
  Vector2<Scalar> d_log_std = Vector2<Scalar>::Zero();
  LossBreakdown<Scalar> out;

  for (Eigen::Index i = 0; i < n; ++i) {
    const PolicyOutput<Scalar> o = net.output_at(cache, i);
    const Vector2<Scalar> a = mb.raw_velocity.col(i);
    const bool bit = mb.activate[static_cast<std::size_t>(i)] != 0;
    const Scalar logp = log_prob_of(o, a, bit);
    const Scalar log_ratio = logp - mb.old_log_prob[i];
    const Scalar ratio = exp(log_ratio);
    const Scalar adv = mb.advantages[i];
    const Scalar clipped_ratio =
        std::clamp(ratio, Scalar(1) - clip_eps, Scalar(1) + clip_eps);
    const Scalar unclipped = ratio * adv;
    const Scalar clipped = clipped_ratio * adv;
    const bool use_unclipped = unclipped <= clipped;
    out.policy -= (use_unclipped ? unclipped : clipped) * inv_n;
    out.mean_ratio += ratio * inv_n;
    out.surrogate_unclipped += unclipped * inv_n;
    out.surrogate_clipped += clipped * inv_n;
    if (ratio < Scalar(1) - clip_eps || ratio > Scalar(1) + clip_eps)
      out.clip_fraction += inv_n;
    out.approx_kl += ((ratio - Scalar(1)) - log_ratio) * inv_n;

    const Scalar v_err = o.value - mb.returns[i];
    out.value += value_coef * v_err * v_err * inv_n;
    const Scalar h = gaussian_entropy(log_std) + bernoulli_entropy(o.act_logit);
    out.entropy += h * inv_n;

    if (grad != nullptr) {
      // dLoss/dlogp for this sample.
      const Scalar g_logp = use_unclipped ? -adv * ratio * inv_n : Scalar(0);
      const Scalar p = o.act_prob;
      for (int d = 0; d < 2; ++d) {
        const Scalar diff = a[d] - o.vel_mean[d];
        d_head(d, i) = g_logp * diff * inv_var[d];
        d_log_std[d] += g_logp * (diff * diff * inv_var[d] - Scalar(1));
      }
      d_head(kLogit, i) = g_logp * ((bit ? Scalar(1) : Scalar(0)) - p) +
                          entropy_coef * o.act_logit * p * (Scalar(1) - p) * inv_n;
      d_head(kValue, i) = Scalar(2) * value_coef * v_err * inv_n;
    }
  }
  out.total = out.policy + out.value - entropy_coef * out.entropy;
  if (grad != nullptr) {
    d_log_std.array() -= entropy_coef;
    *grad = net.backward(cache, d_head, d_log_std);
  }
  return out;
}

template <typename Scalar>
class Adam {
 public:
  Adam() = default;
  Adam(Eigen::Index n, Scalar lr, Scalar beta1 = Scalar(0.9), Scalar beta2 = Scalar(0.999),
       Scalar eps = Scalar(1e-8))
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
        m_(VectorX<Scalar>::Zero(n)), v_(VectorX<Scalar>::Zero(n)) {}

  void step(VectorX<Scalar>& params, const VectorX<Scalar>& grad) {
    ++t_;
    m_ = beta1_ * m_ + (Scalar(1) - beta1_) * grad;
    v_ = beta2_ * v_ + (Scalar(1) - beta2_) * grad.cwiseAbs2();
    using std::pow;
    const Scalar c1 = Scalar(1) - pow(beta1_, Scalar(t_));
    const Scalar c2 = Scalar(1) - pow(beta2_, Scalar(t_));
    params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
  }

  long steps() const { return t_; }

 private:
  Scalar lr_{0};
  Scalar beta1_{0.9};
  Scalar beta2_{0.999};
  Scalar eps_{1e-8};
  VectorX<Scalar> m_;
  VectorX<Scalar> v_;
  long t_ = 0;
};

// Scales grad in place so its L2 norm is at most max_norm; returns the
// pre-clip norm.
template <typename Scalar>
Scalar clip_grad_norm(VectorX<Scalar>& grad, Scalar max_norm) {
  const Scalar norm = grad.norm();
  if (norm > max_norm) grad *= max_norm / norm;
  return norm;
}

struct UpdateStats {
  // First minibatch of the first epoch, before any parameter change.
  double first_mean_ratio = 0.0;
  double first_clip_fraction = 0.0;
  double first_surrogate_unclipped = 0.0;
  double first_surrogate_clipped = 0.0;
  // Averages over all minibatches of all epochs.
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  int minibatches = 0;
};

/// Epochs of shuffled minibatch Adam steps on the clipped objective.
/// Throws std::runtime_error with diagnostics on a non-finite loss.
UpdateStats ppo_update(PolicyNetd& net, Adam<double>& optimizer, const RolloutBuffer& buffer,
                       const PpoConfig& cfg, RngStream& shuffle_rng);

struct CurvePoint {
  int update = 0;
  std::int64_t env_steps = 0;
  int episodes = 0;
  double mean_return = 0.0;  // NaN when no episode finished in the window
  double success_rate = 0.0;
  double depletion_rate = 0.0;
  int tool_depletions = 0;
  int overrides = 0;
  int activations = 0;
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
};

struct TrainResult {
  PolicyNetd net;
  std::vector<CurvePoint> curve;
};

// Called after every update; used for progress logging.
using TrainObserver = std::function<void(const CurvePoint&)>;

/// Teacher-guided PPO when shield_on, vanilla PPO otherwise. Rollouts run
/// n_envs envs in lockstep; env w plays episode indices w, w + n_envs, ...
/// so the result depends only on (cfg, ppo, shield_on, seed).
TrainResult train(const WorldConfig& cfg, const PpoConfig& ppo, bool shield_on,
                  std::uint64_t seed, const TrainObserver& observer = {});

void write_curve_csv(const std::vector<CurvePoint>& curve, std::ostream& out);
std::vector<CurvePoint> read_curve_csv(const std::filesystem::path& path);

struct Checkpoint {
  PolicyNetd net;
  PpoConfig ppo;
  std::uint64_t seed = 0;
  bool shield_on = false;
};

// JSON; every double is written in shortest round-trip form, so
// save(load(x)) is byte-identical.
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& text);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace toolsched

#endif  // TOOLSCHED_PPO_HPP_
