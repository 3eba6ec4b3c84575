#ifndef TOOLSCHED_TRACE_HPP_
#define TOOLSCHED_TRACE_HPP_

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "toolsched/env.hpp"

namespace toolsched {

// One env step. Positions are post-step.
struct TraceRecord {
  int step = 0;
  Vec2 believed = Vec2::Zero();
  Vec2 truth = Vec2::Zero();
  double drift_norm = 0.0;
  Vec2 velocity = Vec2::Zero();
  bool proposed_activate = false;
  bool final_activate = false;
  bool overridden = false;
  std::optional<double> predicted_cost;
  std::optional<int> server;  // executed correction
  bool wasted = false;
  std::array<double, 3> charges{0.0, 0.0, 0.0};
  RewardComponents reward;
  double total_reward = 0.0;
  int guidance_left = 0;
  double cumulative_return = 0.0;
  std::string cause = "running";

  bool operator==(const TraceRecord&) const = default;
};

class TraceError : public std::runtime_error {
 public:
  TraceError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Builds the record for a transition; `after` is the state after the step.
TraceRecord make_trace_record(const Transition& t, const UavState& after,
                              double cumulative_before);

std::vector<TraceRecord> make_trace(const std::vector<Transition>& transitions,
                                    const std::vector<UavState>& states);

std::string to_json_line(const TraceRecord& r);
TraceRecord from_json_line(const std::string& line, int line_number);

void write_trace(const std::vector<TraceRecord>& records, std::ostream& out);
void write_trace(const std::vector<TraceRecord>& records, const std::filesystem::path& path);
std::vector<TraceRecord> read_trace(std::istream& in);
std::vector<TraceRecord> read_trace(const std::filesystem::path& path);

struct ReplayIssue {
  int step = 0;
  std::string what;
};

/// Recomputes each step reward from its logged components and the running
/// return from the rewards; any bit-level disagreement is reported.
std::vector<ReplayIssue> verify_trace(const std::vector<TraceRecord>& records);

void print_replay(const std::vector<TraceRecord>& records, std::ostream& out);

}  // namespace toolsched

#endif  // TOOLSCHED_TRACE_HPP_
