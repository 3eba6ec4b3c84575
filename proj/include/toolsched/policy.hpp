#ifndef TOOLSCHED_POLICY_HPP_
#define TOOLSCHED_POLICY_HPP_

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "toolsched/dynamics.hpp"
#include "toolsched/rng.hpp"
#include "toolsched/world.hpp"

namespace toolsched {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;

// Numerically stable log(1 + exp(x)).
template <typename Scalar>
Scalar softplus(Scalar x) {
  using std::exp;
  using std::log1p;
  return x > Scalar(0) ? x + log1p(exp(-x)) : log1p(exp(x));
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  using std::exp;
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-x));
  const Scalar e = exp(x);
  return e / (Scalar(1) + e);
}

// Rows of the output head.
enum HeadRow : Eigen::Index { kMeanX = 0, kMeanY = 1, kLogit = 2, kValue = 3, kHeadRows = 4 };

template <typename Scalar>
struct PolicyOutput {
  Vector2<Scalar> vel_mean;
  Vector2<Scalar> vel_log_std;
  Scalar act_logit;
  Scalar act_prob;
  Scalar value;
};

// Activations kept from a batched forward pass for the backward pass.
template <typename Scalar>
struct ForwardCache {
  MatrixX<Scalar> input;   // obs_dim x B
  MatrixX<Scalar> hidden1; // H x B, post-tanh
  MatrixX<Scalar> hidden2; // H x B, post-tanh
  MatrixX<Scalar> head;    // 4 x B
};

/// Two tanh hidden layers feeding a linear head with rows
/// (mean_x, mean_y, activation logit, value), plus a state-independent
/// log-std vector for the velocity Gaussian.
///
/// All parameters live in one flat vector; the accessors return Eigen maps
/// into it, so optimizers and checkpoints work on the flat view.
template <typename Scalar>
class PolicyNet {
 public:
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;
  using VectorMap = Eigen::Map<Vector>;
  using ConstVectorMap = Eigen::Map<const Vector>;

  PolicyNet() = default;
  PolicyNet(Eigen::Index obs_dim, Eigen::Index hidden)
      : obs_dim_(obs_dim), hidden_(hidden), params_(Vector::Zero(count(obs_dim, hidden))) {}

  static Eigen::Index count(Eigen::Index obs_dim, Eigen::Index hidden) {
    return hidden * obs_dim + hidden + hidden * hidden + hidden + kHeadRows * hidden +
           kHeadRows + 2;
  }

  /// Hidden weights ~ U(-sqrt(3/fan_in), sqrt(3/fan_in)) (unit-variance
  /// pre-activations for unit-variance inputs), biases zero, head zero, so
  /// the initial policy has zero mean, act_prob 0.5 and value 0.
  static PolicyNet initialized(Eigen::Index obs_dim, Eigen::Index hidden, std::uint64_t seed,
                               Scalar init_log_std) {
    PolicyNet net(obs_dim, hidden);
    RngStream rng(seed, streams::kInit, 0);
    auto fill = [&rng](MatrixMap w) {
      const double bound = std::sqrt(3.0 / static_cast<double>(w.cols()));
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i)
          w(i, j) = static_cast<Scalar>(rng.uniform(-bound, bound));
    };
    fill(net.w1());
    fill(net.w2());
    net.log_std().setConstant(init_log_std);
    return net;
  }

  Eigen::Index obs_dim() const { return obs_dim_; }
  Eigen::Index hidden() const { return hidden_; }
  Eigen::Index num_params() const { return params_.size(); }
  Vector& params() { return params_; }
  const Vector& params() const { return params_; }

  MatrixMap w1() { return {params_.data() + off_w1(), hidden_, obs_dim_}; }
  VectorMap b1() { return {params_.data() + off_b1(), hidden_}; }
  MatrixMap w2() { return {params_.data() + off_w2(), hidden_, hidden_}; }
  VectorMap b2() { return {params_.data() + off_b2(), hidden_}; }
  MatrixMap w_head() { return {params_.data() + off_wh(), kHeadRows, hidden_}; }
  VectorMap b_head() { return {params_.data() + off_bh(), kHeadRows}; }
  VectorMap log_std() { return {params_.data() + off_ls(), 2}; }
  ConstMatrixMap w1() const { return {params_.data() + off_w1(), hidden_, obs_dim_}; }
  ConstVectorMap b1() const { return {params_.data() + off_b1(), hidden_}; }
  ConstMatrixMap w2() const { return {params_.data() + off_w2(), hidden_, hidden_}; }
  ConstVectorMap b2() const { return {params_.data() + off_b2(), hidden_}; }
  ConstMatrixMap w_head() const { return {params_.data() + off_wh(), kHeadRows, hidden_}; }
  ConstVectorMap b_head() const { return {params_.data() + off_bh(), kHeadRows}; }
  ConstVectorMap log_std() const { return {params_.data() + off_ls(), 2}; }

  // Batched forward; columns of `inputs` are observations.
  ForwardCache<Scalar> forward_batch(const Matrix& inputs) const {
    if (inputs.rows() != obs_dim_)
      throw std::invalid_argument("observation length " + std::to_string(inputs.rows()) +
                                  " does not match network input " + std::to_string(obs_dim_));
    ForwardCache<Scalar> c;
    c.input = inputs;
    c.hidden1 = ((w1() * inputs).colwise() + b1()).array().tanh();
    c.hidden2 = ((w2() * c.hidden1).colwise() + b2()).array().tanh();
    c.head = (w_head() * c.hidden2).colwise() + b_head();
    return c;
  }

  PolicyOutput<Scalar> forward(const Vector& obs) const {
    const ForwardCache<Scalar> c = forward_batch(obs);
    return output_at(c, 0);
  }

  PolicyOutput<Scalar> output_at(const ForwardCache<Scalar>& c, Eigen::Index col) const {
    PolicyOutput<Scalar> out;
    out.vel_mean = c.head.template block<2, 1>(kMeanX, col);
    out.vel_log_std = log_std();
    out.act_logit = c.head(kLogit, col);
    out.act_prob = sigmoid(out.act_logit);
    out.value = c.head(kValue, col);
    return out;
  }

  /// Reverse-mode pass. `d_head` is dLoss/d(head) (4 x B), `d_log_std` is
  /// the direct gradient on the log-std parameters. Returns the flat
  /// parameter gradient.
  Vector backward(const ForwardCache<Scalar>& c, const Matrix& d_head,
                  const Vector2<Scalar>& d_log_std) const {
    Vector grad = Vector::Zero(num_params());
    MatrixMap g_w1(grad.data() + off_w1(), hidden_, obs_dim_);
    VectorMap g_b1(grad.data() + off_b1(), hidden_);
    MatrixMap g_w2(grad.data() + off_w2(), hidden_, hidden_);
    VectorMap g_b2(grad.data() + off_b2(), hidden_);
    MatrixMap g_wh(grad.data() + off_wh(), kHeadRows, hidden_);
    VectorMap g_bh(grad.data() + off_bh(), kHeadRows);
    VectorMap g_ls(grad.data() + off_ls(), 2);

    g_wh.noalias() = d_head * c.hidden2.transpose();
    g_bh = d_head.rowwise().sum();
    const Matrix d_z2 = ((w_head().transpose() * d_head).array() *
                         (Scalar(1) - c.hidden2.array().square())).matrix();
    g_w2.noalias() = d_z2 * c.hidden1.transpose();
    g_b2 = d_z2.rowwise().sum();
    const Matrix d_z1 =
        ((w2().transpose() * d_z2).array() * (Scalar(1) - c.hidden1.array().square())).matrix();
    g_w1.noalias() = d_z1 * c.input.transpose();
    g_b1 = d_z1.rowwise().sum();
    g_ls = d_log_std;
    return grad;
  }

 private:
  Eigen::Index off_w1() const { return 0; }
  Eigen::Index off_b1() const { return off_w1() + hidden_ * obs_dim_; }
  Eigen::Index off_w2() const { return off_b1() + hidden_; }
  Eigen::Index off_b2() const { return off_w2() + hidden_ * hidden_; }
  Eigen::Index off_wh() const { return off_b2() + hidden_; }
  Eigen::Index off_bh() const { return off_wh() + kHeadRows * hidden_; }
  Eigen::Index off_ls() const { return off_bh() + kHeadRows; }

  Eigen::Index obs_dim_ = 0;
  Eigen::Index hidden_ = 0;
  Vector params_;
};

using PolicyNetd = PolicyNet<double>;

// Diagonal Gaussian log-density.
template <typename Scalar>
Scalar gaussian_log_density(const Vector2<Scalar>& x, const Vector2<Scalar>& mean,
                            const Vector2<Scalar>& log_std) {
  using std::exp;
  const Scalar half_log_2pi = Scalar(0.5 * std::log(2.0 * std::numbers::pi));
  Scalar total(0);
  for (int d = 0; d < 2; ++d) {
    const Scalar z = (x[d] - mean[d]) * exp(-log_std[d]);
    total += Scalar(-0.5) * z * z - log_std[d] - half_log_2pi;
  }
  return total;
}

// log p(bit) for a Bernoulli parameterised by its logit.
template <typename Scalar>
Scalar bernoulli_log_mass(bool bit, Scalar logit) {
  return bit ? -softplus(-logit) : -softplus(logit);
}

// Entropy of Bernoulli(sigmoid(logit)): softplus(z) - z * sigmoid(z).
template <typename Scalar>
Scalar bernoulli_entropy(Scalar logit) {
  return softplus(logit) - logit * sigmoid(logit);
}

template <typename Scalar>
Scalar gaussian_entropy(const Vector2<Scalar>& log_std) {
  const Scalar c = Scalar(0.5 * (1.0 + std::log(2.0 * std::numbers::pi)));
  return log_std.sum() + Scalar(2) * c;
}

/// Raw policy draw. The velocity part is in units of v_max and unclamped;
/// decode_action maps it onto an env Action.
template <typename Scalar>
struct PolicySample {
  Vector2<Scalar> raw_velocity;
  bool activate = false;
  Scalar log_prob;
};

template <typename Scalar>
Scalar log_prob_of(const PolicyOutput<Scalar>& out, const Vector2<Scalar>& raw_velocity,
                   bool activate) {
  return gaussian_log_density(raw_velocity, out.vel_mean, out.vel_log_std) +
         bernoulli_log_mass(activate, out.act_logit);
}

template <typename Scalar>
Scalar log_prob_of(const PolicyNet<Scalar>& net, const VectorX<Scalar>& obs,
                   const Vector2<Scalar>& raw_velocity, bool activate) {
  return log_prob_of(net.forward(obs), raw_velocity, activate);
}

template <typename Scalar>
PolicySample<Scalar> sample_from(const PolicyOutput<Scalar>& out, RngStream& rng) {
  using std::exp;
  PolicySample<Scalar> s;
  for (int d = 0; d < 2; ++d)
    s.raw_velocity[d] = out.vel_mean[d] + exp(out.vel_log_std[d]) * Scalar(rng.normal());
  s.activate = Scalar(rng.uniform()) < out.act_prob;
  s.log_prob = log_prob_of(out, s.raw_velocity, s.activate);
  return s;
}

template <typename Scalar>
PolicySample<Scalar> sample_action(const PolicyNet<Scalar>& net, const VectorX<Scalar>& obs,
                                   RngStream& rng) {
  return sample_from(net.forward(obs), rng);
}

// Deterministic evaluation action: Gaussian mean and act_prob > 0.5.
template <typename Scalar>
PolicySample<Scalar> mode_of(const PolicyOutput<Scalar>& out) {
  PolicySample<Scalar> s;
  s.raw_velocity = out.vel_mean;
  s.activate = out.act_prob > Scalar(0.5);
  s.log_prob = log_prob_of(out, s.raw_velocity, s.activate);
  return s;
}

// Scales the raw velocity by v_max; the env clamps the result to the disc.
template <typename Scalar>
Action decode_action(const Vector2<Scalar>& raw_velocity, bool activate,
                     const WorldConfig& cfg) {
  Vec2 v(static_cast<double>(raw_velocity[0]), static_cast<double>(raw_velocity[1]));
  return {clamp_velocity(v * cfg.v_max, cfg.v_max), activate};
}

}  // namespace toolsched

#endif  // TOOLSCHED_POLICY_HPP_
