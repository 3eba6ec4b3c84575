#include "toolsched/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace toolsched {

Action LearnedPolicy::act(const Observation& obs, const UavState& /*state*/,
                          const WorldConfig& cfg, RngStream& rng) {
  const PolicyOutput<double> out = net_.forward(obs);
  const PolicySample<double> s = stochastic_ ? sample_from(out, rng) : mode_of(out);
  return decode_action(s.raw_velocity, s.activate, cfg);
}

std::vector<double> EvalReport::returns() const {
  std::vector<double> r;
  r.reserve(episodes.size());
  for (const auto& e : episodes) r.push_back(e.episode_return);
  return r;
}

std::vector<double> EvalReport::activation_ratios(ToolKind kind) const {
  std::vector<double> r;
  for (const auto& e : episodes) {
    const auto& v = e.activation_ratio[static_cast<int>(kind)];
    r.insert(r.end(), v.begin(), v.end());
  }
  return r;
}

EvalReport evaluate(Policy& policy, const WorldConfig& base_cfg, int n_episodes,
                    std::uint64_t seed, bool shield_on, const EpisodeHook& hook) {
  if (n_episodes < 1) throw std::invalid_argument("evaluate: n_episodes must be >= 1");
  WorldConfig cfg = base_cfg;
  cfg.seed = seed;
  Env env(cfg, shield_on);

  EvalReport report;
  report.method = policy.name();
  report.scenario = scenario_fingerprint(cfg);
  report.seed = seed;
  report.shield_on = shield_on;

  std::vector<Transition> transitions;
  std::vector<UavState> states;
  for (int ep = 0; ep < n_episodes; ++ep) {
    const auto episode = static_cast<std::uint64_t>(ep);
    Observation obs = env.reset(episode);
    RngStream rng(seed, streams::kBaseline, episode);
    EpisodeRecord rec;
    rec.episode = episode;
    transitions.clear();
    states.clear();
    while (!env.done()) {
      const Action proposed = policy.act(obs, env.state(), env.episode_config(), rng);
      Transition t = env.step(proposed);
      rec.episode_return += t.reward;
      if (t.info.guidance_before > 0 && t.info.server_accessible_before) {
        ++rec.guided_in_range_steps;
        if (t.proposed.activate) ++rec.redundant_activations;
      }
      if (t.info.overridden) ++rec.overrides;
      if (t.info.server_index) {
        const ToolServer& s = env.episode_config().servers[*t.info.server_index];
        const int k = static_cast<int>(s.kind);
        ++rec.activations[static_cast<std::size_t>(k)];
        rec.activation_distance[static_cast<std::size_t>(k)].push_back(t.info.activation_distance);
        rec.activation_ratio[static_cast<std::size_t>(k)].push_back(t.info.activation_distance /
                                                                   s.range);
      }
      obs = env.observe();
      if (hook) {
        transitions.push_back(std::move(t));
        states.push_back(env.state());
      }
    }
    rec.cause = env.cause();
    rec.length = env.state().steps_elapsed;
    rec.energy = env.ledger().totals_by_category();
    if (hook) hook(episode, env.episode_config(), transitions, states);
    report.episodes.push_back(std::move(rec));
  }
  summarize(report);
  return report;
}

void summarize(EvalReport& r) {
  r.n_episodes = static_cast<int>(r.episodes.size());
  const double n = static_cast<double>(r.n_episodes);
  if (r.n_episodes == 0) return;
  double sum = 0.0;
  int goal = 0;
  int crash = 0;
  int timeout = 0;
  double length = 0.0;
  r.mean_energy = {0.0, 0.0, 0.0};
  r.activation_count = {0, 0};
  std::array<double, 2> dist_sum{0.0, 0.0};
  std::array<double, 2> ratio_sum{0.0, 0.0};
  r.guided_in_range_steps = 0;
  r.redundant_activations = 0;
  r.overrides = 0;
  for (const auto& e : r.episodes) {
    sum += e.episode_return;
    goal += e.cause == TerminationCause::Goal;
    crash += e.cause == TerminationCause::Depleted;
    timeout += e.cause == TerminationCause::Timeout;
    length += e.length;
    for (int c = 0; c < 3; ++c) r.mean_energy[c] += e.energy[c];
    for (int k = 0; k < 2; ++k) {
      r.activation_count[k] += e.activations[k];
      for (double d : e.activation_distance[k]) dist_sum[k] += d;
      for (double q : e.activation_ratio[k]) ratio_sum[k] += q;
    }
    r.guided_in_range_steps += e.guided_in_range_steps;
    r.redundant_activations += e.redundant_activations;
    r.overrides += e.overrides;
  }
  r.mean_return = sum / n;
  r.success_rate = goal / n;
  r.crash_rate = crash / n;
  r.timeout_rate = timeout / n;
  r.mean_length = length / n;
  for (double& e : r.mean_energy) e /= n;
  for (int k = 0; k < 2; ++k) {
    const double c = static_cast<double>(r.activation_count[k]);
    r.mean_activation_distance[k] = c > 0 ? dist_sum[k] / c : 0.0;
    r.mean_activation_ratio[k] = c > 0 ? ratio_sum[k] / c : 0.0;
  }
  r.redundant_rate = r.guided_in_range_steps > 0
                         ? static_cast<double>(r.redundant_activations) /
                               static_cast<double>(r.guided_in_range_steps)
                         : 0.0;

  r.ci_defined = r.n_episodes >= kMinEpisodesForCi;
  if (r.ci_defined) {
    double ss = 0.0;
    for (const auto& e : r.episodes) ss += (e.episode_return - r.mean_return) * (e.episode_return - r.mean_return);
    const double half = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    r.ci_low = r.mean_return - half;
    r.ci_high = r.mean_return + half;
  } else {
    r.ci_low = r.ci_high = r.mean_return;
  }
}

RankSumResult mann_whitney(std::span<const double> a, std::span<const double> b) {
  RankSumResult res;
  const std::size_t n1 = a.size();
  const std::size_t n2 = b.size();
  if (n1 == 0 || n2 == 0) return res;

  std::vector<std::pair<double, int>> pooled;
  pooled.reserve(n1 + n2);
  for (double v : a) pooled.emplace_back(v, 0);
  for (double v : b) pooled.emplace_back(v, 1);
  std::sort(pooled.begin(), pooled.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });

  const double N = static_cast<double>(n1 + n2);
  double rank_sum_a = 0.0;
  double tie_term = 0.0;
  for (std::size_t i = 0; i < pooled.size();) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j].first == pooled[i].first) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    for (std::size_t k = i; k < j; ++k)
      if (pooled[k].second == 0) rank_sum_a += avg_rank;
    i = j;
  }
  const double dn1 = static_cast<double>(n1);
  const double dn2 = static_cast<double>(n2);
  res.u = rank_sum_a - dn1 * (dn1 + 1.0) / 2.0;
  const double mean_u = dn1 * dn2 / 2.0;
  const double var_u = dn1 * dn2 / 12.0 * ((N + 1.0) - tie_term / (N * (N - 1.0)));
  if (!(var_u > 0.0)) return res;
  const double diff = res.u - mean_u;
  const double corrected = std::max(0.0, std::abs(diff) - 0.5);
  res.z = std::copysign(corrected / std::sqrt(var_u), diff);
  res.p_value = std::min(1.0, std::erfc(corrected / std::sqrt(var_u) / std::sqrt(2.0)));
  return res;
}

std::vector<ComparisonRow> compare(const std::vector<EvalReport>& reports) {
  if (reports.size() < 2) throw std::invalid_argument("compare: need at least two reports");
  for (const auto& r : reports)
    if (r.scenario != reports.front().scenario)
      throw std::invalid_argument("compare: reports were built on different scenarios ('" +
                                  r.method + "' vs '" + reports.front().method + "')");
  std::vector<const EvalReport*> sorted;
  for (const auto& r : reports) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const EvalReport* x, const EvalReport* y) {
    if (x->mean_return != y->mean_return) return x->mean_return > y->mean_return;
    return x->method < y->method;
  });
  std::vector<ComparisonRow> rows;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const EvalReport& r = *sorted[i];
    ComparisonRow row{r.method, r.mean_return, r.success_rate, r.crash_rate, r.n_episodes};
    if (i + 1 < sorted.size()) {
      const EvalReport& next = *sorted[i + 1];
      row.gap_to_next = r.mean_return - next.mean_return;
      const auto ra = r.returns();
      const auto rb = next.returns();
      row.p_to_next = mann_whitney(ra, rb).p_value;
    }
    rows.push_back(row);
  }
  return rows;
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

TerminationCause cause_from_string(const std::string& s) {
  if (s == "goal") return TerminationCause::Goal;
  if (s == "depleted") return TerminationCause::Depleted;
  if (s == "timeout") return TerminationCause::Timeout;
  if (s == "running") return TerminationCause::Running;
  throw std::runtime_error("unknown termination cause '" + s + "'");
}

constexpr const char* kReportHeader =
    "method,scenario,seed,shield_on,n_episodes,mean_return,ci_defined,ci_low,ci_high,"
    "success_rate,crash_rate,timeout_rate,mean_length,energy_flight,energy_transmission,"
    "energy_compute,activations_standard,activations_semantic,act_distance_standard,"
    "act_distance_semantic,act_ratio_standard,act_ratio_semantic,guided_in_range_steps,"
    "redundant_activations,redundant_rate,overrides";

constexpr const char* kEpisodeHeader =
    "method,episode,return,cause,length,energy_flight,energy_transmission,energy_compute,"
    "activations_standard,activations_semantic,guided_in_range_steps,redundant_activations,"
    "overrides,ratios_standard,ratios_semantic,distances_standard,distances_semantic";

std::string join_ratios(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ';';
    s += num(v[i]);
  }
  return s;
}

std::vector<double> split_ratios(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ';'))
    if (!cell.empty()) out.push_back(std::stod(cell));
  return out;
}

}  // namespace

void write_report_csv(const std::vector<EvalReport>& reports, std::ostream& out) {
  out << kReportHeader << '\n';
  for (const auto& r : reports) {
    out << r.method << ',' << r.scenario << ',' << r.seed << ',' << (r.shield_on ? 1 : 0) << ','
        << r.n_episodes << ',' << num(r.mean_return) << ',' << (r.ci_defined ? 1 : 0) << ','
        << num(r.ci_low) << ',' << num(r.ci_high) << ',' << num(r.success_rate) << ','
        << num(r.crash_rate) << ',' << num(r.timeout_rate) << ',' << num(r.mean_length) << ','
        << num(r.mean_energy[0]) << ',' << num(r.mean_energy[1]) << ',' << num(r.mean_energy[2])
        << ',' << r.activation_count[0] << ',' << r.activation_count[1] << ','
        << num(r.mean_activation_distance[0]) << ',' << num(r.mean_activation_distance[1]) << ','
        << num(r.mean_activation_ratio[0]) << ',' << num(r.mean_activation_ratio[1]) << ','
        << r.guided_in_range_steps << ',' << r.redundant_activations << ','
        << num(r.redundant_rate) << ',' << r.overrides << '\n';
  }
}

void write_episodes_csv(const std::vector<EvalReport>& reports, std::ostream& out) {
  out << kEpisodeHeader << '\n';
  for (const auto& r : reports) {
    for (const auto& e : r.episodes) {
      out << r.method << ',' << e.episode << ',' << num(e.episode_return) << ','
          << to_string(e.cause) << ',' << e.length << ',' << num(e.energy[0]) << ','
          << num(e.energy[1]) << ',' << num(e.energy[2]) << ',' << e.activations[0] << ','
          << e.activations[1] << ',' << e.guided_in_range_steps << ','
          << e.redundant_activations << ',' << e.overrides << ','
          << join_ratios(e.activation_ratio[0]) << ',' << join_ratios(e.activation_ratio[1])
          << ',' << join_ratios(e.activation_distance[0]) << ','
          << join_ratios(e.activation_distance[1]) << '\n';
    }
  }
}

std::vector<EvalReport> read_reports(const std::filesystem::path& report_csv,
                                     const std::filesystem::path& episodes_csv) {
  std::ifstream rin(report_csv);
  if (!rin) throw std::runtime_error("cannot open report '" + report_csv.string() + "'");
  std::string line;
  std::getline(rin, line);
  if (line != kReportHeader)
    throw std::runtime_error(report_csv.string() + ": unexpected header");
  std::vector<EvalReport> reports;
  std::map<std::string, std::size_t> by_method;
  int lineno = 1;
  while (std::getline(rin, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 26)
      throw std::runtime_error(report_csv.string() + ":" + std::to_string(lineno) +
                               ": expected 26 columns");
    EvalReport r;
    r.method = f[0];
    r.scenario = std::stoull(f[1]);
    r.seed = std::stoull(f[2]);
    r.shield_on = f[3] == "1";
    by_method[r.method] = reports.size();
    reports.push_back(std::move(r));
  }

  std::ifstream ein(episodes_csv);
  if (!ein) throw std::runtime_error("cannot open episodes '" + episodes_csv.string() + "'");
  std::getline(ein, line);
  if (line != kEpisodeHeader)
    throw std::runtime_error(episodes_csv.string() + ": unexpected header");
  lineno = 1;
  while (std::getline(ein, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 17)
      throw std::runtime_error(episodes_csv.string() + ":" + std::to_string(lineno) +
                               ": expected 17 columns");
    const auto it = by_method.find(f[0]);
    if (it == by_method.end())
      throw std::runtime_error(episodes_csv.string() + ":" + std::to_string(lineno) +
                               ": method '" + f[0] + "' not in report");
    EpisodeRecord e;
    e.episode = std::stoull(f[1]);
    e.episode_return = std::stod(f[2]);
    e.cause = cause_from_string(f[3]);
    e.length = std::stoi(f[4]);
    e.energy = {std::stod(f[5]), std::stod(f[6]), std::stod(f[7])};
    e.activations = {std::stoi(f[8]), std::stoi(f[9])};
    e.guided_in_range_steps = std::stoi(f[10]);
    e.redundant_activations = std::stoi(f[11]);
    e.overrides = std::stoi(f[12]);
    e.activation_ratio[0] = split_ratios(f[13]);
    e.activation_ratio[1] = split_ratios(f[14]);
    e.activation_distance[0] = split_ratios(f[15]);
    e.activation_distance[1] = split_ratios(f[16]);
    reports[it->second].episodes.push_back(std::move(e));
  }
  for (auto& r : reports) {
    summarize(r);
  }
  return reports;
}

void print_table(const std::vector<ComparisonRow>& rows, std::ostream& out) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-4s %-16s %12s %9s %9s %6s %12s\n", "rank", "method",
                "mean_return", "success", "crash", "n", "p(next)");
  out << buf;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    char p[32] = "-";
    if (i + 1 < rows.size()) std::snprintf(p, sizeof p, "%.3g", r.p_to_next);
    std::snprintf(buf, sizeof buf, "%-4zu %-16s %12.2f %9.3f %9.3f %6d %12s\n", i + 1,
                  r.method.c_str(), r.mean_return, r.success_rate, r.crash_rate, r.n_episodes, p);
    out << buf;
  }
}

}  // namespace toolsched
