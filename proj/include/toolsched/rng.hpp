#ifndef TOOLSCHED_RNG_HPP_
#define TOOLSCHED_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace toolsched {

// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// FNV-1a, used to turn stream labels into keys.
constexpr std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Counter-based generator keyed by (seed, label, index).
///
/// Draw k of a stream is mix64(key + k * golden), so a stream is fully
/// determined by its key and position; there is no hidden global state and
/// the integer sequence is identical on every platform. Gaussian draws go
/// through std::log/std::sqrt/std::cos and so inherit the platform libm.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view label, std::uint64_t index)
      : key_(mix64(mix64(seed ^ 0x6A09E667F3BCC909ULL) ^ hash_label(label)) ^
             mix64(index + 0x3C6EF372FE94F82BULL)) {}

  std::uint64_t next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), rejection sampled (no modulo bias).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  std::uint64_t draws() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stream labels shared across modules. Distinct labels never alias.
namespace streams {
inline constexpr std::string_view kDynamics = "dynamics";
inline constexpr std::string_view kLayout = "layout";
inline constexpr std::string_view kScenario = "scenario";
inline constexpr std::string_view kPolicy = "policy";
inline constexpr std::string_view kMinibatch = "minibatch";
inline constexpr std::string_view kInit = "init";
inline constexpr std::string_view kBaseline = "baseline";
}  // namespace streams

}  // namespace toolsched

#endif  // TOOLSCHED_RNG_HPP_
