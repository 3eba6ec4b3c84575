#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "toolsched/policy.hpp"

using namespace toolsched;
using namespace toolsched::testing;

namespace {

// Independent evaluation of the action density: product of two univariate
// normal densities and a Bernoulli mass, computed without the library code.
double oracle_log_prob(double x0, double x1, double m0, double m1, double s0, double s1,
                       bool bit, double p) {
  auto normal_pdf = [](double x, double m, double s) {
    const double z = (x - m) / s;
    return std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * std::numbers::pi));
  };
  return std::log(normal_pdf(x0, m0, s0)) + std::log(normal_pdf(x1, m1, s1)) +
         std::log(bit ? p : 1.0 - p);
}

PolicyNetd perturbed_net(std::uint64_t seed) {
  PolicyNetd net = PolicyNetd::initialized(27, 64, seed, -0.5);
  RngStream rng(seed, "test", 1);
  for (Eigen::Index i = 0; i < net.w_head().size(); ++i) net.w_head().data()[i] = rng.uniform(-0.3, 0.3);
  for (Eigen::Index i = 0; i < 4; ++i) net.b_head()[i] = rng.uniform(-0.5, 0.5);
  return net;
}

Eigen::VectorXd random_obs(RngStream& rng, Eigen::Index n = 27) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.uniform(-1.0, 1.0);
  return v;
}

}  // namespace

TEST_SUITE("policy") {

TEST_CASE("zero-initialised heads") {
  const PolicyNetd net = PolicyNetd::initialized(27, 64, 1, -0.5);
  RngStream rng(1, "test", 0);
  const auto out = net.forward(random_obs(rng));
  CHECK(out.vel_mean == Eigen::Vector2d::Zero());
  CHECK(out.act_prob == 0.5);
  CHECK(out.value == 0.0);
  CHECK(out.vel_log_std == Eigen::Vector2d::Constant(-0.5));
}

TEST_CASE("forward is pure and finite") {
  const PolicyNetd net = perturbed_net(2);
  RngStream rng(2, "test", 0);
  const Eigen::VectorXd obs = random_obs(rng);
  const auto a = net.forward(obs);
  const auto b = net.forward(obs);
  CHECK(a.vel_mean == b.vel_mean);
  CHECK(a.act_prob == b.act_prob);
  CHECK(a.value == b.value);
  const auto big = net.forward(Eigen::VectorXd::Constant(27, 1e6));
  CHECK(big.vel_mean.allFinite());
  CHECK(std::isfinite(big.value));
  CHECK(big.act_prob > 0.0);
  CHECK(big.act_prob < 1.0);
}

TEST_CASE("parameter count depends only on the input size") {
  const Eigen::Index n = PolicyNetd::count(27, 64);
  CHECK(n == 64 * 27 + 64 + 64 * 64 + 64 + 4 * 64 + 4 + 2);
  CHECK(PolicyNetd::initialized(27, 64, 1, 0.0).num_params() == n);
  CHECK(PolicyNetd::initialized(27, 64, 2, 0.0).num_params() == n);
  CHECK(PolicyNetd::count(12, 64) != n);
}

TEST_CASE("dimension mismatch is rejected") {
  const PolicyNetd net = PolicyNetd::initialized(27, 64, 1, -0.5);
  CHECK_THROWS_AS(net.forward(Eigen::VectorXd::Zero(26)), std::invalid_argument);
}

TEST_CASE("sampled log-prob matches an independent density") {
  const PolicyNetd net = perturbed_net(3);
  RngStream obs_rng(3, "test", 0);
  RngStream rng(3, streams::kPolicy, 0);
  int activations = 0;
  for (int i = 0; i < 10000; ++i) {
    const Eigen::VectorXd obs = random_obs(obs_rng);
    const auto out = net.forward(obs);
    const auto s = sample_action(net, obs, rng);
    activations += s.activate;
    const double sd0 = std::exp(out.vel_log_std[0]);
    const double sd1 = std::exp(out.vel_log_std[1]);
    const double oracle = oracle_log_prob(s.raw_velocity[0], s.raw_velocity[1], out.vel_mean[0],
                                          out.vel_mean[1], sd0, sd1, s.activate, out.act_prob);
    REQUIRE(std::abs(s.log_prob - oracle) <= 1e-12 * std::max(1.0, std::abs(oracle)));
    REQUIRE(std::abs(log_prob_of(net, obs, s.raw_velocity, s.activate) - s.log_prob) <= 1e-12);
  }
  CHECK(activations > 0);
  CHECK(activations < 10000);
}

TEST_CASE("log-prob at the mean") {
  const PolicyNetd net = perturbed_net(4);
  RngStream rng(4, "test", 0);
  const auto obs = random_obs(rng);
  const auto out = net.forward(obs);
  const double closed = -std::log(2.0 * std::numbers::pi) - out.vel_log_std.sum() +
                        std::log(out.act_prob);
  CHECK(log_prob_of(out, out.vel_mean, true) == doctest::Approx(closed).epsilon(1e-13));
}

TEST_CASE("Gaussian term is translation invariant") {
  const Eigen::Vector2d mean(0.3, -0.2);
  const Eigen::Vector2d x(0.7, 0.1);
  const Eigen::Vector2d ls(-0.4, -0.9);
  const Eigen::Vector2d c(5.0, -3.0);
  CHECK(gaussian_log_density(x, mean, ls) ==
        doctest::Approx(gaussian_log_density<double>(x + c, mean + c, ls)).epsilon(1e-13));
}

TEST_CASE("degenerate heads") {
  PolicyNetd net = PolicyNetd::initialized(27, 64, 5, -0.5);
  net.b_head()[kLogit] = 60.0;
  net.b_head()[kMeanX] = 0.3;
  net.b_head()[kMeanY] = -0.7;
  net.log_std().setConstant(-60.0);
  RngStream rng(5, streams::kPolicy, 0);
  RngStream obs_rng(5, "test", 0);
  for (int i = 0; i < 1000; ++i) {
    const auto s = sample_action(net, random_obs(obs_rng), rng);
    REQUIRE(s.activate);
    REQUIRE(s.raw_velocity[0] == 0.3);
    REQUIRE(s.raw_velocity[1] == -0.7);
  }
}

TEST_CASE("Bernoulli entropy peaks at p = 1/2") {
  CHECK(bernoulli_entropy(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  for (double z = -8.0; z <= 8.0; z += 0.25) {
    if (z == 0.0) continue;
    CHECK(bernoulli_entropy(z) < std::log(2.0));
    const double p = sigmoid(z);
    CHECK(bernoulli_entropy(z) == doctest::Approx(-p * std::log(p) - (1 - p) * std::log(1 - p)));
  }
}

TEST_CASE("deterministic action and decoding") {
  PolicyNetd net = PolicyNetd::initialized(27, 64, 6, -0.5);
  net.b_head()[kMeanX] = 2.0;
  net.b_head()[kLogit] = 0.1;
  const auto out = net.forward(Eigen::VectorXd::Zero(27));
  const auto m = mode_of(out);
  CHECK(m.activate);
  CHECK(m.raw_velocity == out.vel_mean);
  const WorldConfig cfg;
  const Action a = decode_action(m.raw_velocity, m.activate, cfg);
  CHECK(a.velocity.norm() == doctest::Approx(cfg.v_max));
}

}
