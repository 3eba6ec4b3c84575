#include "toolsched/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "toolsched/rng.hpp"

namespace toolsched {

using ordered_json = nlohmann::ordered_json;

const char* to_string(ToolKind kind) {
  return kind == ToolKind::Standard ? "standard" : "semantic";
}

ToolKind tool_kind_from_string(const std::string& name) {
  if (name == "standard") return ToolKind::Standard;
  if (name == "semantic") return ToolKind::Semantic;
  throw ConfigError(ConfigError::Kind::Parse, "unknown tool kind '" + name + "'");
}

int WorldConfig::max_validity_horizon() const {
  int h = 0;
  for (const auto& s : servers) h = std::max(h, s.validity_horizon);
  return h;
}

namespace {

[[noreturn]] void fail(const std::string& msg) {
  throw ConfigError(ConfigError::Kind::Validation, msg);
}

bool inside_arena(const Vec2& p, double size) {
  return p.x() >= 0.0 && p.y() >= 0.0 && p.x() <= size && p.y() <= size;
}

ordered_json point_json(const Vec2& p) { return ordered_json::array({p.x(), p.y()}); }

Vec2 point_from(const ordered_json& j, const char* field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError(ConfigError::Kind::Parse,
                      std::string(field) + " must be a 2-element number array");
  return {j[0].get<double>(), j[1].get<double>()};
}

template <typename T>
void read_field(const ordered_json& j, const char* name, T& out) {
  if (!j.contains(name)) return;
  try {
    out = j.at(name).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(ConfigError::Kind::Parse,
                      std::string("field '") + name + "': " + e.what());
  }
}

}  // namespace

void validate(const WorldConfig& cfg) {
  if (!(cfg.arena_size > 0.0)) fail("arena_size must be > 0");
  if (!(cfg.v_max > 0.0)) fail("v_max must be > 0");
  if (!(cfg.dt > 0.0)) fail("dt must be > 0");
  if (!(cfg.sigma_drift >= 0.0)) fail("sigma_drift must be >= 0");
  if (!(cfg.goal_radius > 0.0)) fail("goal_radius must be > 0");
  if (!(cfg.initial_energy > 0.0)) fail("initial_energy must be > 0");
  if (cfg.max_steps < 1) fail("max_steps must be >= 1");
  if (!inside_arena(cfg.start_pos, cfg.arena_size)) fail("start_pos outside arena");
  if (!inside_arena(cfg.goal_pos, cfg.arena_size)) fail("goal_pos outside arena");

  const auto& e = cfg.energy_params;
  for (double v : {e.p_hover, e.k_vel, e.e_tx_base, e.e_tx_dist, e.tx_exponent, e.e_llm})
    if (!(v >= 0.0)) fail("energy_params fields must be >= 0");

  const auto& r = cfg.reward_params;
  if (!(r.w_time >= 0.0) || !(r.w_energy >= 0.0)) fail("w_time and w_energy must be >= 0");
  if (!(r.rho_shield >= 0.0) || !(r.rho_waste >= 0.0)) fail("rho_shield and rho_waste must be >= 0");
  if (!(r.r_goal > 0.0) || !(r.r_crash > 0.0)) fail("r_goal and r_crash must be > 0");
  if (!std::isfinite(r.w_progress)) fail("w_progress must be finite");

  int min_standard = std::numeric_limits<int>::max();
  int max_semantic = std::numeric_limits<int>::min();
  for (std::size_t i = 0; i < cfg.servers.size(); ++i) {
    const auto& s = cfg.servers[i];
    const std::string tag = "server " + std::to_string(i);
    if (s.index != i) fail(tag + ": index must equal its list position");
    if (!(s.range > 0.0)) fail(tag + ": range must be > 0");
    if (s.validity_horizon < 1) fail(tag + ": validity_horizon must be >= 1");
    if (!inside_arena(s.position, cfg.arena_size)) fail(tag + ": position outside arena");
    if (s.kind == ToolKind::Standard) {
      min_standard = std::min(min_standard, s.validity_horizon);
      const double worst = e.e_tx_base + e.e_tx_dist * std::pow(s.range, e.tx_exponent);
      if (!(worst < cfg.initial_energy))
        fail(tag + ": a single call at full range costs at least initial_energy");
    } else {
      max_semantic = std::max(max_semantic, s.validity_horizon);
      if (!(e.e_llm < cfg.initial_energy)) fail(tag + ": e_llm must be < initial_energy");
    }
  }
  if (min_standard != std::numeric_limits<int>::max() &&
      max_semantic != std::numeric_limits<int>::min() && min_standard <= max_semantic)
    fail("every standard validity_horizon must exceed every semantic validity_horizon");
}

WorldConfig parse_config(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(ConfigError::Kind::Parse, e.what());
  }
  if (!j.is_object()) throw ConfigError(ConfigError::Kind::Parse, "config root must be an object");

  WorldConfig cfg;
  read_field(j, "arena_size", cfg.arena_size);
  if (j.contains("start_pos")) cfg.start_pos = point_from(j["start_pos"], "start_pos");
  if (j.contains("goal_pos")) cfg.goal_pos = point_from(j["goal_pos"], "goal_pos");
  read_field(j, "goal_radius", cfg.goal_radius);
  read_field(j, "dt", cfg.dt);
  read_field(j, "v_max", cfg.v_max);
  read_field(j, "sigma_drift", cfg.sigma_drift);
  read_field(j, "max_steps", cfg.max_steps);
  read_field(j, "initial_energy", cfg.initial_energy);
  read_field(j, "seed", cfg.seed);
  if (j.contains("layout")) {
    std::string mode;
    read_field(j, "layout", mode);
    if (mode == "fixed") cfg.layout = LayoutMode::Fixed;
    else if (mode == "per_episode") cfg.layout = LayoutMode::PerEpisode;
    else throw ConfigError(ConfigError::Kind::Parse, "layout must be 'fixed' or 'per_episode'");
  }

  if (j.contains("servers")) {
    const auto& arr = j["servers"];
    if (!arr.is_array()) throw ConfigError(ConfigError::Kind::Parse, "servers must be an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const auto& sj = arr[i];
      ToolServer s;
      s.index = i;
      read_field(sj, "index", s.index);
      std::string kind = "standard";
      read_field(sj, "kind", kind);
      s.kind = tool_kind_from_string(kind);
      if (!sj.contains("position"))
        throw ConfigError(ConfigError::Kind::Parse, "server " + std::to_string(i) + " lacks position");
      s.position = point_from(sj["position"], "position");
      read_field(sj, "range", s.range);
      s.validity_horizon =
          s.kind == ToolKind::Standard ? kDefaultStandardHorizon : kDefaultSemanticHorizon;
      read_field(sj, "validity_horizon", s.validity_horizon);
      cfg.servers.push_back(s);
    }
  }

  if (j.contains("energy_params")) {
    const auto& ej = j["energy_params"];
    auto& e = cfg.energy_params;
    read_field(ej, "p_hover", e.p_hover);
    read_field(ej, "k_vel", e.k_vel);
    read_field(ej, "e_tx_base", e.e_tx_base);
    read_field(ej, "e_tx_dist", e.e_tx_dist);
    read_field(ej, "tx_exponent", e.tx_exponent);
    read_field(ej, "e_llm", e.e_llm);
  }
  if (j.contains("reward_params")) {
    const auto& rj = j["reward_params"];
    auto& r = cfg.reward_params;
    read_field(rj, "w_progress", r.w_progress);
    read_field(rj, "w_time", r.w_time);
    read_field(rj, "w_energy", r.w_energy);
    read_field(rj, "r_goal", r.r_goal);
    read_field(rj, "r_crash", r.r_crash);
    read_field(rj, "rho_shield", r.rho_shield);
    read_field(rj, "rho_waste", r.rho_waste);
  }

  validate(cfg);
  return cfg;
}

WorldConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(ConfigError::Kind::Io, "cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const WorldConfig& cfg) {
  ordered_json j;
  j["arena_size"] = cfg.arena_size;
  j["start_pos"] = point_json(cfg.start_pos);
  j["goal_pos"] = point_json(cfg.goal_pos);
  j["goal_radius"] = cfg.goal_radius;
  j["dt"] = cfg.dt;
  j["v_max"] = cfg.v_max;
  j["sigma_drift"] = cfg.sigma_drift;
  j["max_steps"] = cfg.max_steps;
  j["initial_energy"] = cfg.initial_energy;
  j["seed"] = cfg.seed;
  j["layout"] = cfg.layout == LayoutMode::Fixed ? "fixed" : "per_episode";
  j["servers"] = ordered_json::array();
  for (const auto& s : cfg.servers) {
    ordered_json sj;
    sj["index"] = s.index;
    sj["kind"] = to_string(s.kind);
    sj["position"] = point_json(s.position);
    sj["range"] = s.range;
    sj["validity_horizon"] = s.validity_horizon;
    j["servers"].push_back(sj);
  }
  const auto& e = cfg.energy_params;
  j["energy_params"] = {{"p_hover", e.p_hover},     {"k_vel", e.k_vel},
                        {"e_tx_base", e.e_tx_base}, {"e_tx_dist", e.e_tx_dist},
                        {"tx_exponent", e.tx_exponent}, {"e_llm", e.e_llm}};
  const auto& r = cfg.reward_params;
  j["reward_params"] = {{"w_progress", r.w_progress}, {"w_time", r.w_time},
                        {"w_energy", r.w_energy},     {"r_goal", r.r_goal},
                        {"r_crash", r.r_crash},       {"rho_shield", r.rho_shield},
                        {"rho_waste", r.rho_waste}};
  return j.dump(2) + "\n";
}

void save_config(const WorldConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(ConfigError::Kind::Io, "cannot write config '" + path.string() + "'");
  out << serialize_config(cfg);
}

std::uint64_t scenario_fingerprint(const WorldConfig& cfg) {
  WorldConfig copy = cfg;
  copy.seed = 0;
  return mix64(hash_label(serialize_config(copy)));
}

WorldConfig random_scenario(std::uint64_t seed, int n_standard, int n_semantic) {
  if (n_standard < 0 || n_semantic < 0)
    throw ConfigError(ConfigError::Kind::Validation, "server counts must be >= 0");
  WorldConfig cfg;
  cfg.seed = seed;
  RngStream rng(seed, streams::kScenario, 0);
  const int total = n_standard + n_semantic;
  for (int i = 0; i < total; ++i) {
    ToolServer s;
    s.index = static_cast<std::size_t>(i);
    s.kind = i < n_standard ? ToolKind::Standard : ToolKind::Semantic;
    const double x = rng.uniform(0.0, cfg.arena_size);
    const double y = rng.uniform(0.0, cfg.arena_size);
    s.position = {x, y};
    s.range = kDefaultRange;
    s.validity_horizon =
        s.kind == ToolKind::Standard ? kDefaultStandardHorizon : kDefaultSemanticHorizon;
    cfg.servers.push_back(s);
  }
  validate(cfg);
  return cfg;
}

WorldConfig realize_layout(const WorldConfig& cfg, std::uint64_t episode_index) {
  if (cfg.layout == LayoutMode::Fixed) return cfg;
  WorldConfig out = cfg;
  out.layout = LayoutMode::Fixed;
  RngStream rng(cfg.seed, streams::kLayout, episode_index);
  for (auto& s : out.servers) {
    const double x = rng.uniform(0.0, cfg.arena_size);
    const double y = rng.uniform(0.0, cfg.arena_size);
    s.position = {x, y};
  }
  return out;
}

}  // namespace toolsched
