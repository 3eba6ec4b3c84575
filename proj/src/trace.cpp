#include "toolsched/trace.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

namespace toolsched {

using ordered_json = nlohmann::ordered_json;

TraceRecord make_trace_record(const Transition& t, const UavState& after,
                              double cumulative_before) {
  TraceRecord r;
  r.step = after.steps_elapsed - 1;
  r.believed = after.pos_believed;
  r.truth = after.pos_true;
  r.drift_norm = after.drift.norm();
  r.velocity = t.action.velocity;
  r.proposed_activate = t.proposed.activate;
  r.final_activate = t.action.activate;
  r.overridden = t.info.overridden;
  r.predicted_cost = t.info.predicted_call_cost;
  if (t.info.server_index) r.server = static_cast<int>(*t.info.server_index);
  r.wasted = t.info.wasted_activation;
  r.charges = t.info.charges;
  r.reward = t.components;
  r.total_reward = t.reward;
  r.guidance_left = after.guidance_left;
  r.cumulative_return = cumulative_before + t.reward;
  r.cause = to_string(t.cause);
  return r;
}

std::vector<TraceRecord> make_trace(const std::vector<Transition>& transitions,
                                    const std::vector<UavState>& states) {
  std::vector<TraceRecord> out;
  double cumulative = 0.0;
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    out.push_back(make_trace_record(transitions[i], states[i], cumulative));
    cumulative = out.back().cumulative_return;
  }
  return out;
}

namespace {

ordered_json pair(const Vec2& v) { return ordered_json::array({v.x(), v.y()}); }

Vec2 pair_from(const ordered_json& j) {
  if (!j.is_array() || j.size() != 2) throw std::runtime_error("expected a 2-element array");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

std::string to_json_line(const TraceRecord& r) {
  ordered_json j;
  j["step"] = r.step;
  j["believed"] = pair(r.believed);
  j["truth"] = pair(r.truth);
  j["drift_norm"] = r.drift_norm;
  j["velocity"] = pair(r.velocity);
  j["proposed_activate"] = r.proposed_activate;
  j["final_activate"] = r.final_activate;
  j["overridden"] = r.overridden;
  j["predicted_cost"] = r.predicted_cost ? ordered_json(*r.predicted_cost) : ordered_json(nullptr);
  j["server"] = r.server ? ordered_json(*r.server) : ordered_json(nullptr);
  j["wasted"] = r.wasted;
  j["charges"] = {{"flight", r.charges[0]}, {"transmission", r.charges[1]},
                  {"compute", r.charges[2]}};
  j["reward"] = {{"progress", r.reward.progress}, {"time", r.reward.time},
                 {"energy", r.reward.energy},     {"shield", r.reward.shield},
                 {"waste", r.reward.waste},       {"terminal", r.reward.terminal}};
  j["total_reward"] = r.total_reward;
  j["guidance_left"] = r.guidance_left;
  j["cumulative_return"] = r.cumulative_return;
  j["cause"] = r.cause;
  return j.dump();
}

TraceRecord from_json_line(const std::string& line, int line_number) {
  try {
    const ordered_json j = ordered_json::parse(line);
    TraceRecord r;
    r.step = j.at("step").get<int>();
    r.believed = pair_from(j.at("believed"));
    r.truth = pair_from(j.at("truth"));
    r.drift_norm = j.at("drift_norm").get<double>();
    r.velocity = pair_from(j.at("velocity"));
    r.proposed_activate = j.at("proposed_activate").get<bool>();
    r.final_activate = j.at("final_activate").get<bool>();
    r.overridden = j.at("overridden").get<bool>();
    if (!j.at("predicted_cost").is_null()) r.predicted_cost = j["predicted_cost"].get<double>();
    if (!j.at("server").is_null()) r.server = j["server"].get<int>();
    r.wasted = j.at("wasted").get<bool>();
    const auto& c = j.at("charges");
    r.charges = {c.at("flight").get<double>(), c.at("transmission").get<double>(),
                 c.at("compute").get<double>()};
    const auto& w = j.at("reward");
    r.reward.progress = w.at("progress").get<double>();
    r.reward.time = w.at("time").get<double>();
    r.reward.energy = w.at("energy").get<double>();
    r.reward.shield = w.at("shield").get<double>();
    r.reward.waste = w.at("waste").get<double>();
    r.reward.terminal = w.at("terminal").get<double>();
    r.total_reward = j.at("total_reward").get<double>();
    r.guidance_left = j.at("guidance_left").get<int>();
    r.cumulative_return = j.at("cumulative_return").get<double>();
    r.cause = j.at("cause").get<std::string>();
    return r;
  } catch (const std::exception& e) {
    throw TraceError(line_number, e.what());
  }
}

void write_trace(const std::vector<TraceRecord>& records, std::ostream& out) {
  for (const auto& r : records) out << to_json_line(r) << '\n';
}

void write_trace(const std::vector<TraceRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write trace '" + path.string() + "'");
  write_trace(records, out);
}

std::vector<TraceRecord> read_trace(std::istream& in) {
  std::vector<TraceRecord> records;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    records.push_back(from_json_line(line, line_number));
  }
  return records;
}

std::vector<TraceRecord> read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open trace '" + path.string() + "'");
  return read_trace(in);
}

std::vector<ReplayIssue> verify_trace(const std::vector<TraceRecord>& records) {
  std::vector<ReplayIssue> issues;
  double cumulative = 0.0;
  for (const auto& r : records) {
    const double total = r.reward.total();
    if (total != r.total_reward)
      issues.push_back({r.step, "reward components do not sum to the logged reward"});
    cumulative += r.total_reward;
    if (cumulative != r.cumulative_return)
      issues.push_back({r.step, "cumulative return does not match the running sum"});
    cumulative = r.cumulative_return;
  }
  return issues;
}

void print_replay(const std::vector<TraceRecord>& records, std::ostream& out) {
  char buf[256];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf,
                  "t=%3d belief=(%7.1f,%7.1f) truth=(%7.1f,%7.1f) drift=%6.2f v=(%6.2f,%6.2f) "
                  "act=%d/%d%s%s guid=%2d r=%9.3f G=%9.3f %s\n",
                  r.step, r.believed.x(), r.believed.y(), r.truth.x(), r.truth.y(), r.drift_norm,
                  r.velocity.x(), r.velocity.y(), r.proposed_activate ? 1 : 0,
                  r.final_activate ? 1 : 0, r.overridden ? " OVERRIDE" : "",
                  r.server ? (" srv" + std::to_string(*r.server)).c_str() : "", r.guidance_left,
                  r.total_reward, r.cumulative_return, r.cause.c_str());
    out << buf;
  }
}

}  // namespace toolsched
