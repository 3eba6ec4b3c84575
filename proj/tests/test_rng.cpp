#include <doctest.h>

#include <cmath>
#include <vector>

#include "toolsched/rng.hpp"

using namespace toolsched;

TEST_SUITE("rng") {

TEST_CASE("mix64 is the SplitMix64 finalizer") {
  // First output of the reference splitmix64 generator seeded with 0.
  CHECK(mix64(0x9E3779B97F4A7C15ULL) == 0xE220A8397B1DCDAFULL);
}

TEST_CASE("same key gives the same sequence") {
  RngStream a(42, streams::kDynamics, 3);
  RngStream b(42, streams::kDynamics, 3);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
  CHECK(a.draws() == 1000);
}

TEST_CASE("labels, seeds and indices select different streams") {
  RngStream base(42, streams::kDynamics, 3);
  RngStream other_label(42, streams::kPolicy, 3);
  RngStream other_seed(43, streams::kDynamics, 3);
  RngStream other_index(42, streams::kDynamics, 4);
  const auto x = base.next_u64();
  CHECK(x != other_label.next_u64());
  CHECK(x != other_seed.next_u64());
  CHECK(x != other_index.next_u64());
}

TEST_CASE("uniform and below stay in range") {
  RngStream rng(1, "test", 0);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const auto k = rng.below(7);
    REQUIRE(k < 7);
    ++counts[k];
  }
  // Chi-square with 6 dof; 22.46 is the 0.999 quantile.
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - n / 7.0) * (c - n / 7.0) / (n / 7.0);
  CHECK(chi2 < 22.46);
}

TEST_CASE("normal draws have unit variance") {
  RngStream rng(9, "test", 0);
  const int n = 200000;
  double sum = 0.0;
  double sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(double(n)));
  CHECK(std::abs(var - 1.0) < 0.02);
}

}
