#include "toolsched/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "toolsched/eval.hpp"
#include "toolsched/ppo.hpp"
#include "toolsched/svg.hpp"
#include "toolsched/trace.hpp"
#include "toolsched/world.hpp"

namespace fs = std::filesystem;

namespace toolsched {

namespace {

// Validation failures: bad configs, bad flag values.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("TOOLSCHED_OUT"); env != nullptr && *env != '\0') return env;
  return "out";
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (cell.empty()) continue;
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw ValidationError("--seeds: '" + cell + "' is not an unsigned integer");
    }
  }
  if (seeds.empty()) throw ValidationError("--seeds: empty list");
  return seeds;
}

bool parse_on_off(const std::string& v, const char* flag) {
  if (v == "on") return true;
  if (v == "off") return false;
  throw ValidationError(std::string(flag) + " must be 'on' or 'off'");
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

WorldConfig load_world(const std::string& path, std::optional<std::uint64_t> seed) {
  WorldConfig cfg = load_config(path);
  if (seed) cfg.seed = *seed;
  return cfg;
}

struct TrainArgs {
  std::string config;
  std::string ppo;
  std::optional<std::uint64_t> seed;
  std::string seeds;
  std::string shield = "on";
  std::optional<std::int64_t> total_steps;
  std::string out;
  bool quiet = false;
};

int run_train(const TrainArgs& a, std::ostream& out) {
  const WorldConfig cfg = load_world(a.config, std::nullopt);
  PpoConfig ppo = a.ppo.empty() ? PpoConfig{} : load_ppo_config(a.ppo);
  if (a.total_steps) ppo.total_steps = *a.total_steps;
  validate(ppo);
  const bool shield = parse_on_off(a.shield, "--shield");

  std::vector<std::uint64_t> seeds;
  const bool fan_out = !a.seeds.empty();
  if (fan_out) seeds = parse_seed_list(a.seeds);
  else seeds.push_back(a.seed.value_or(cfg.seed));

  const fs::path root = output_dir(a.out);
  for (std::uint64_t seed : seeds) {
    const fs::path dir = fan_out ? root / ("seed_" + std::to_string(seed)) : root;
    fs::create_directories(dir);
    TrainObserver observer;
    if (!a.quiet) {
      observer = [&out, seed](const CurvePoint& p) {
        if (p.update % 10 != 0) return;
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "seed %llu update %4d steps %8lld return %9.2f success %.2f depleted %.2f\n",
                      static_cast<unsigned long long>(seed), p.update,
                      static_cast<long long>(p.env_steps), p.mean_return, p.success_rate,
                      p.depletion_rate);
        out << buf << std::flush;
      };
    }
    TrainResult result = train(cfg, ppo, shield, seed, observer);
    save_checkpoint({result.net, ppo, seed, shield}, dir / "checkpoint.json");
    std::ostringstream curve;
    write_curve_csv(result.curve, curve);
    write_text(dir / "curve.csv", curve.str());
    out << "wrote " << (dir / "checkpoint.json").string() << " and " << (dir / "curve.csv").string()
        << '\n';
  }
  return kExitOk;
}

struct EvalArgs {
  std::string config;
  std::string checkpoint;
  std::string baseline;
  std::string name;
  int episodes = 200;
  std::optional<std::uint64_t> seed;
  std::string seeds;
  std::string shield = "off";
  bool stochastic = false;
  int traces = 5;
  std::string out;
};

int run_eval(const EvalArgs& a, std::ostream& out) {
  if (a.checkpoint.empty() == a.baseline.empty())
    throw ValidationError("eval needs exactly one of --checkpoint or --baseline");
  if (a.episodes < 1) throw ValidationError("--episodes must be >= 1");
  const WorldConfig cfg = load_world(a.config, std::nullopt);
  const bool shield = parse_on_off(a.shield, "--shield");

  std::unique_ptr<Policy> policy;
  if (!a.baseline.empty()) {
    try {
      policy = std::make_unique<BaselinePolicy>(baseline_kind_from_string(a.baseline));
    } catch (const std::invalid_argument& e) {
      throw ValidationError(e.what());
    }
  } else {
    Checkpoint ckpt = load_checkpoint(a.checkpoint);
    if (ckpt.net.obs_dim() != observation_size(cfg.servers.size()))
      throw ValidationError("checkpoint observation size does not match the scenario");
    policy = std::make_unique<LearnedPolicy>(std::move(ckpt.net),
                                             a.name.empty() ? "learned" : a.name, a.stochastic);
  }
  const std::string method = a.name.empty() ? policy->name() : a.name;

  std::vector<std::uint64_t> seeds;
  const bool fan_out = !a.seeds.empty();
  if (fan_out) seeds = parse_seed_list(a.seeds);
  else seeds.push_back(a.seed.value_or(cfg.seed));

  const fs::path root = output_dir(a.out);
  for (std::uint64_t seed : seeds) {
    const fs::path dir = fan_out ? root / ("seed_" + std::to_string(seed)) : root;
    fs::create_directories(dir / "traces");
    EpisodeHook hook = [&](std::uint64_t ep, const WorldConfig& ep_cfg,
                           const std::vector<Transition>& ts, const std::vector<UavState>& ss) {
      if (ep >= static_cast<std::uint64_t>(std::max(a.traces, 0))) return;
      char stem[64];
      std::snprintf(stem, sizeof stem, "episode_%04llu", static_cast<unsigned long long>(ep));
      write_trace(make_trace(ts, ss), dir / "traces" / (std::string(stem) + ".jsonl"));
      save_config(ep_cfg, dir / "traces" / (std::string(stem) + ".scenario.json"));
    };
    EvalReport report = evaluate(*policy, cfg, a.episodes, seed, shield, hook);
    report.method = method;
    std::ostringstream rcsv, ecsv;
    write_report_csv({report}, rcsv);
    write_episodes_csv({report}, ecsv);
    write_text(dir / "report.csv", rcsv.str());
    write_text(dir / "episodes.csv", ecsv.str());
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "%s seed %llu: return %.2f [%.2f, %.2f] success %.3f depleted %.3f timeout %.3f\n",
                  method.c_str(), static_cast<unsigned long long>(seed), report.mean_return,
                  report.ci_low, report.ci_high, report.success_rate, report.crash_rate,
                  report.timeout_rate);
    out << buf;
  }
  return kExitOk;
}

fs::path episodes_next_to(const fs::path& report) {
  return report.parent_path() / "episodes.csv";
}

int run_compare(const std::vector<std::string>& reports, const std::string& csv_out,
                std::ostream& out) {
  // Reports of the same method from several files are pooled.
  std::map<std::string, EvalReport> pooled;
  std::vector<std::string> order;
  for (const auto& path : reports) {
    for (auto& r : read_reports(path, episodes_next_to(path))) {
      auto it = pooled.find(r.method);
      if (it == pooled.end()) {
        order.push_back(r.method);
        pooled.emplace(r.method, std::move(r));
      } else {
        if (it->second.scenario != r.scenario)
          throw ValidationError("compare: '" + r.method + "' reports differ in scenario");
        for (auto& e : r.episodes) it->second.episodes.push_back(std::move(e));
      }
    }
  }
  std::vector<EvalReport> list;
  for (const auto& m : order) {
    EvalReport r = std::move(pooled[m]);
    summarize(r);
    list.push_back(std::move(r));
  }
  std::vector<ComparisonRow> rows;
  try {
    rows = compare(list);
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  print_table(rows, out);
  if (!csv_out.empty()) {
    std::ostringstream csv;
    csv << "rank,method,mean_return,success_rate,crash_rate,n_episodes,gap_to_next,p_to_next\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      char buf[256];
      std::snprintf(buf, sizeof buf, "%zu,%s,%.17g,%.17g,%.17g,%d,%.17g,%.17g\n", i + 1,
                    r.method.c_str(), r.mean_return, r.success_rate, r.crash_rate, r.n_episodes,
                    r.gap_to_next, r.p_to_next);
      csv << buf;
    }
    write_text(csv_out, csv.str());
  }
  return kExitOk;
}

int run_replay(const std::string& path, bool quiet, std::ostream& out) {
  const auto records = read_trace(fs::path(path));
  if (!quiet) print_replay(records, out);
  const auto issues = verify_trace(records);
  for (const auto& i : issues) out << "MISMATCH step " << i.step << ": " << i.what << '\n';
  out << records.size() << " steps, " << issues.size() << " mismatches\n";
  return issues.empty() ? kExitOk : kExitValidation;
}

// "label=path1,path2" -> (label, [paths])
std::pair<std::string, std::vector<std::string>> split_labelled(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ValidationError("expected label=path[,path...], got '" + arg + "'");
  std::vector<std::string> paths;
  std::stringstream ss(arg.substr(eq + 1));
  std::string p;
  while (std::getline(ss, p, ','))
    if (!p.empty()) paths.push_back(p);
  if (paths.empty()) throw ValidationError("no paths in '" + arg + "'");
  return {arg.substr(0, eq), paths};
}

int run_plot_trajectory(const std::string& trace, const std::string& scenario,
                        const std::string& out_path, const std::string& title, std::ostream& out) {
  fs::path scenario_path = scenario;
  if (scenario_path.empty()) {
    scenario_path = fs::path(trace);
    scenario_path.replace_extension(".scenario.json");
  }
  if (!fs::exists(trace)) throw std::runtime_error("missing trace '" + trace + "'");
  if (!fs::exists(scenario_path))
    throw std::runtime_error("missing scenario '" + scenario_path.string() + "'");
  const auto records = read_trace(fs::path(trace));
  const WorldConfig cfg = load_config(scenario_path);
  const fs::path target = out_path.empty() ? fs::path(trace).replace_extension(".svg") : fs::path(out_path);
  write_text(target, render_trajectory_svg(records, cfg, title.empty() ? trace : title));
  out << "wrote " << target.string() << '\n';
  return kExitOk;
}

int run_plot_curves(const std::vector<std::string>& curves, const std::vector<std::string>& refs,
                    const std::string& out_path, const std::string& title, std::ostream& out) {
  std::vector<CurveSeries> series;
  for (const auto& arg : curves) {
    auto [label, paths] = split_labelled(arg);
    CurveSeries s{label, {}};
    for (const auto& p : paths) s.seeds.push_back(read_curve_csv(p));
    series.push_back(std::move(s));
  }
  std::vector<ReferenceLine> lines;
  for (const auto& arg : refs) {
    auto [label, paths] = split_labelled(arg);
    double sum = 0.0;
    int n = 0;
    for (const auto& p : paths) {
      for (const auto& r : read_reports(p, episodes_next_to(p))) {
        sum += r.mean_return * r.n_episodes;
        n += r.n_episodes;
      }
    }
    if (n == 0) throw ValidationError("reference '" + label + "' has no episodes");
    lines.push_back({label, sum / n});
  }
  const fs::path target = output_dir("") / "curves.svg";
  const fs::path dest = out_path.empty() ? target : fs::path(out_path);
  write_text(dest, render_curves_svg(series, lines, title.empty() ? "mean episodic return" : title));
  out << "wrote " << dest.string() << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tool-assisted UAV navigation: simulator, shielded PPO, evaluation", "toolsched"};
  app.require_subcommand(1);

  // scenario
  auto* scenario = app.add_subcommand("scenario", "generate or validate scenario configs");
  scenario->require_subcommand(1);
  auto* gen = scenario->add_subcommand("generate", "write a random scenario");
  std::uint64_t gen_seed = 7;
  int n_standard = 2;
  int n_semantic = 2;
  std::string gen_layout = "fixed";
  std::string gen_out;
  gen->add_option("--seed", gen_seed, "scenario seed");
  gen->add_option("--n-standard", n_standard, "standard tool servers");
  gen->add_option("--n-semantic", n_semantic, "semantic tool servers");
  gen->add_option("--layout", gen_layout, "fixed | per_episode");
  gen->add_option("--out", gen_out, "output path (stdout when omitted)");
  auto* val = scenario->add_subcommand("validate", "check a scenario config");
  std::string val_config;
  val->add_option("--config", val_config, "config path")->required();

  // train
  TrainArgs targs;
  auto* train_cmd = app.add_subcommand("train", "train a PPO agent");
  train_cmd->add_option("--config", targs.config, "scenario config")->required();
  train_cmd->add_option("--ppo", targs.ppo, "PPO config JSON");
  train_cmd->add_option("--seed", targs.seed, "training seed (overrides the config seed)");
  train_cmd->add_option("--seeds", targs.seeds, "comma-separated seeds, one output dir each");
  train_cmd->add_option("--shield", targs.shield, "on | off");
  train_cmd->add_option("--total-steps", targs.total_steps, "override total env steps");
  train_cmd->add_option("--out", targs.out, "output directory");
  train_cmd->add_flag("--quiet", targs.quiet, "no progress output");

  // eval
  EvalArgs eargs;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint or a scripted baseline");
  eval_cmd->add_option("--config", eargs.config, "scenario config")->required();
  eval_cmd->add_option("--checkpoint", eargs.checkpoint, "trained checkpoint");
  eval_cmd->add_option("--baseline", eargs.baseline, "random | greedy | costaware | straight");
  eval_cmd->add_option("--name", eargs.name, "method label in the report");
  eval_cmd->add_option("--episodes", eargs.episodes, "episodes per seed");
  eval_cmd->add_option("--seed", eargs.seed, "evaluation seed");
  eval_cmd->add_option("--seeds", eargs.seeds, "comma-separated evaluation seeds");
  eval_cmd->add_option("--shield", eargs.shield, "on | off");
  eval_cmd->add_flag("--stochastic", eargs.stochastic, "sample actions instead of the mode");
  eval_cmd->add_option("--traces", eargs.traces, "episodes to write traces for");
  eval_cmd->add_option("--out", eargs.out, "output directory");

  // compare
  std::vector<std::string> compare_reports;
  std::string compare_out;
  auto* compare_cmd = app.add_subcommand("compare", "rank methods from report CSVs");
  compare_cmd->add_option("reports", compare_reports, "report.csv files")->required();
  compare_cmd->add_option("--out", compare_out, "write the ordering table as CSV");

  // replay
  std::string replay_trace;
  bool replay_quiet = false;
  auto* replay_cmd = app.add_subcommand("replay", "print a trace and verify its rewards");
  replay_cmd->add_option("trace", replay_trace, "trace JSONL")->required();
  replay_cmd->add_flag("--quiet", replay_quiet, "only report mismatches");

  // plot
  auto* plot_cmd = app.add_subcommand("plot", "render SVG figures from traces and curves");
  plot_cmd->require_subcommand(1);
  auto* plot_traj = plot_cmd->add_subcommand("trajectory", "trajectory figure from a trace");
  std::string pt_trace, pt_scenario, pt_out, pt_title;
  plot_traj->add_option("--trace", pt_trace, "trace JSONL")->required();
  plot_traj->add_option("--scenario", pt_scenario, "episode scenario (default: sibling file)");
  plot_traj->add_option("--out", pt_out, "SVG path");
  plot_traj->add_option("--title", pt_title, "figure title");
  auto* plot_curves = plot_cmd->add_subcommand("curves", "learning-curve figure");
  std::vector<std::string> pc_curves, pc_refs;
  std::string pc_out, pc_title;
  plot_curves->add_option("--curve", pc_curves, "label=curve.csv[,curve.csv...]");
  plot_curves->add_option("--reference", pc_refs, "label=report.csv[,report.csv...]");
  plot_curves->add_option("--out", pc_out, "SVG path");
  plot_curves->add_option("--title", pc_title, "figure title");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (scenario->parsed()) {
      if (gen->parsed()) {
        WorldConfig cfg = random_scenario(gen_seed, n_standard, n_semantic);
        if (gen_layout == "per_episode") cfg.layout = LayoutMode::PerEpisode;
        else if (gen_layout != "fixed") throw ValidationError("--layout must be fixed or per_episode");
        if (gen_out.empty()) out << serialize_config(cfg);
        else write_text(gen_out, serialize_config(cfg));
        return kExitOk;
      }
      const WorldConfig cfg = load_config(val_config);
      out << "ok: " << cfg.servers.size() << " servers, observation size "
          << observation_size(cfg.servers.size()) << '\n';
      return kExitOk;
    }
    if (train_cmd->parsed()) return run_train(targs, out);
    if (eval_cmd->parsed()) return run_eval(eargs, out);
    if (compare_cmd->parsed()) return run_compare(compare_reports, compare_out, out);
    if (replay_cmd->parsed()) return run_replay(replay_trace, replay_quiet, out);
    if (plot_traj->parsed()) return run_plot_trajectory(pt_trace, pt_scenario, pt_out, pt_title, out);
    if (plot_curves->parsed()) return run_plot_curves(pc_curves, pc_refs, pc_out, pc_title, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == ConfigError::Kind::Io ? kExitRuntime : kExitValidation;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const TraceError& e) {
    err << "error: trace " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace toolsched
