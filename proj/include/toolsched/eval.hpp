#ifndef TOOLSCHED_EVAL_HPP_
#define TOOLSCHED_EVAL_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "toolsched/env.hpp"
#include "toolsched/policy.hpp"

namespace toolsched {

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  // `rng` is a per-episode stream owned by the evaluator.
  virtual Action act(const Observation& obs, const UavState& state, const WorldConfig& cfg,
                     RngStream& rng) = 0;
};

class BaselinePolicy final : public Policy {
 public:
  explicit BaselinePolicy(BaselineKind kind) : kind_(kind) {}
  std::string name() const override { return to_string(kind_); }
  Action act(const Observation& obs, const UavState& state, const WorldConfig& cfg,
             RngStream& rng) override {
    return baseline_policy(kind_, obs, state, cfg, rng);
  }

 private:
  BaselineKind kind_;
};

// Deterministic by default: Gaussian mean and act_prob > 0.5.
class LearnedPolicy final : public Policy {
 public:
  LearnedPolicy(PolicyNetd net, std::string name, bool stochastic = false)
      : net_(std::move(net)), name_(std::move(name)), stochastic_(stochastic) {}
  std::string name() const override { return name_; }
  Action act(const Observation& obs, const UavState& state, const WorldConfig& cfg,
             RngStream& rng) override;

 private:
  PolicyNetd net_;
  std::string name_;
  bool stochastic_;
};

struct EpisodeRecord {
  std::uint64_t episode = 0;
  double episode_return = 0.0;
  TerminationCause cause = TerminationCause::Running;
  int length = 0;
  std::array<double, 3> energy{0.0, 0.0, 0.0};  // by EnergyCategory
  std::array<int, 2> activations{0, 0};         // by ToolKind
  // Executed activations only: believed distance and distance / range.
  std::array<std::vector<double>, 2> activation_distance;
  std::array<std::vector<double>, 2> activation_ratio;
  // Steps that began with guidance_left > 0 and a server in range, and how
  // many of those issued an activation.
  int guided_in_range_steps = 0;
  int redundant_activations = 0;
  int overrides = 0;
};

struct EvalReport {
  std::string method;
  std::uint64_t scenario = 0;  // scenario_fingerprint
  std::uint64_t seed = 0;
  bool shield_on = false;
  int n_episodes = 0;

  double mean_return = 0.0;
  bool ci_defined = false;  // needs >= 30 episodes
  double ci_low = 0.0;
  double ci_high = 0.0;
  double success_rate = 0.0;
  double crash_rate = 0.0;
  double timeout_rate = 0.0;
  double mean_length = 0.0;
  std::array<double, 3> mean_energy{0.0, 0.0, 0.0};
  std::array<long, 2> activation_count{0, 0};
  std::array<double, 2> mean_activation_distance{0.0, 0.0};
  std::array<double, 2> mean_activation_ratio{0.0, 0.0};
  long guided_in_range_steps = 0;
  long redundant_activations = 0;
  double redundant_rate = 0.0;  // 0 when the denominator is 0
  long overrides = 0;

  std::vector<EpisodeRecord> episodes;

  std::vector<double> returns() const;
  std::vector<double> activation_ratios(ToolKind kind) const;
};

inline constexpr int kMinEpisodesForCi = 30;

// Receives every finished episode with its transitions and post-step states.
using EpisodeHook =
    std::function<void(std::uint64_t episode, const WorldConfig& episode_cfg,
                       const std::vector<Transition>& transitions,
                       const std::vector<UavState>& states)>;

/// Runs episodes 0..n_episodes-1 with cfg.seed := seed. Pure in its inputs.
EvalReport evaluate(Policy& policy, const WorldConfig& cfg, int n_episodes, std::uint64_t seed,
                    bool shield_on, const EpisodeHook& hook = {});

// Fills every aggregate field of `report` from report.episodes.
void summarize(EvalReport& report);

struct RankSumResult {
  double u = 0.0;  // U statistic of the first sample
  double z = 0.0;
  double p_value = 1.0;  // two-sided
};

/// Two-sided Mann-Whitney U test, normal approximation with tie and
/// continuity corrections. p = 1 when either sample is empty or all values tie.
RankSumResult mann_whitney(std::span<const double> a, std::span<const double> b);

struct ComparisonRow {
  std::string method;
  double mean_return = 0.0;
  double success_rate = 0.0;
  double crash_rate = 0.0;
  int n_episodes = 0;
  // Against the next row down; absent on the last row.
  double gap_to_next = 0.0;
  double p_to_next = 1.0;
};

/// Methods sorted by mean return (descending, ties by name) with a
/// Mann-Whitney p-value for each adjacent pair. Throws std::invalid_argument
/// when fewer than two reports are given or scenarios differ.
std::vector<ComparisonRow> compare(const std::vector<EvalReport>& reports);

void write_report_csv(const std::vector<EvalReport>& reports, std::ostream& out);
void write_episodes_csv(const std::vector<EvalReport>& reports, std::ostream& out);
// Reads report rows and re-attaches per-episode records from the episodes
// CSV so that compare() can run rank tests.
std::vector<EvalReport> read_reports(const std::filesystem::path& report_csv,
                                     const std::filesystem::path& episodes_csv);
void print_table(const std::vector<ComparisonRow>& rows, std::ostream& out);

}  // namespace toolsched

#endif  // TOOLSCHED_EVAL_HPP_
