#include <fstream>
#include <map>
#include <set>

#include "ember/sim.hpp"

namespace ember {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::ConfigInvalid, "config field '" + field + "': " + why);
}

std::string join(const std::string& ctx, const std::string& key) {
  return ctx.empty() ? key : ctx + "." + key;
}

void check_keys(const json& j, const std::string& ctx, std::initializer_list<const char*> known) {
  if (!j.is_object()) bad(ctx.empty() ? "<root>" : ctx, "expected an object");
  const std::set<std::string> k(known.begin(), known.end());
  for (const auto& [key, _] : j.items())
    if (!k.count(key)) bad(join(ctx, key), "unknown field");
}

template <class T>
void read(const json& j, const std::string& ctx, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    bad(join(ctx, key), "wrong type");
  }
}

Vec2 read_vec2(const json& v, const std::string& field) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    bad(field, "expected [x, y]");
  return {v[0].get<double>(), v[1].get<double>()};
}

void require(bool ok, const std::string& field, const std::string& why) {
  if (!ok) bad(field, why);
}

bool finite_all(std::initializer_list<double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

std::size_t ScenarioConfig::tick_count() const {
  return static_cast<std::size_t>(std::llround(duration_s / dt_s));
}

void validate(const ScenarioConfig& c) {
  require(std::isfinite(c.dt_s) && c.dt_s > 0.0, "dt_s", "must be positive");
  require(std::isfinite(c.duration_s) && c.duration_s >= 0.0, "duration_s", "must be >= 0");
  require(c.world_size_m > 0.0, "world_size_m", "must be positive");
  require(c.front_radius_m > 0.0, "front.radius_m", "must be positive");
  require(c.base_rate_mps >= 0.0, "front.base_rate_mps", "must be >= 0");
  require(c.vertex_spacing_m > 0.0, "front.vertex_spacing_m", "must be positive");
  require(c.wind_gain >= 0.0, "wind.gain", "must be >= 0");
  require(c.smoke_density >= 0.0 && c.smoke_density <= 1.0, "smoke_density", "must lie in [0, 1]");
  require(c.saturation_frac >= 0.0 && c.saturation_frac <= 1.0, "saturation_frac", "must lie in [0, 1]");
  require(c.thermal.max_count > 0.0 && c.thermal.max_count <= 65535.0, "thermal.max_count", "must lie in (0, 65535]");
  require(c.thermal.ambient >= 0.0 && c.thermal.ambient < c.thermal.hot && c.thermal.hot <= c.thermal.max_count,
          "thermal.hot", "needs 0 <= ambient < hot <= max_count");
  require(c.thermal.noise_sigma >= 0.0, "thermal.noise_sigma", "must be >= 0");
  require(c.thermal.falloff_gsd >= 0.0, "thermal.falloff_gsd", "must be >= 0");
  require(c.rgb.noise_sigma >= 0.0, "rgb.noise_sigma", "must be >= 0");
  require(c.rgb.texture_scale_m > 0.0, "rgb.texture_scale_m", "must be positive");
  require(c.rgb.distractor_count >= 0, "rgb.distractor_count", "must be >= 0");
  require(c.rgb.falloff_gsd >= 0.0, "rgb.falloff_gsd", "must be >= 0");
  require(c.gps_noise_m >= 0.0, "gps.noise_m", "must be >= 0");
  require(c.nav_gain > 0.0 && c.nav_gain <= 1.0, "gps.nav_gain", "must lie in (0, 1]");
  for (const auto& o : c.outages) require(o.end_s >= o.start_s, "gps.outages", "end_s must be >= start_s");
  require(c.comms.loss_prob >= 0.0 && c.comms.loss_prob <= 1.0, "comms.loss_prob", "must lie in [0, 1]");
  require(c.comms.latency_ms >= 0.0, "comms.latency_ms", "must be >= 0");
  require(c.comms.beacon_hz > 0.0, "comms.beacon_hz", "must be positive");
  require(c.v0 > 0.0, "team.v0_mps", "must be positive");
  require(c.v_max_factor >= 1.0, "team.v_max_factor", "must be >= 1");
  require(c.turn_rate_dps > 0.0, "team.turn_rate_dps", "must be positive");
  require(c.kp >= 0.0, "team.kp", "must be >= 0");
  require(c.consensus_gain >= 0.0 && c.consensus_gain * c.dt_s < 1.0, "team.consensus_gain",
          "needs 0 <= gain * dt_s < 1");
  require(!c.uavs.empty(), "team.uavs", "must not be empty");
  std::set<int> ids;
  int leaders = 0;
  for (const auto& u : c.uavs) {
    require(ids.insert(u.id).second, "team.uavs", "duplicate id " + std::to_string(u.id));
    leaders += u.leader ? 1 : 0;
    require(u.battery >= 0.0 && u.battery <= 1.0, "team.uavs.battery", "must lie in [0, 1]");
    require(u.link_quality >= 0.0 && u.link_quality <= 1.0, "team.uavs.link_quality", "must lie in [0, 1]");
    require(u.battery_drain_per_s >= 0.0, "team.uavs.battery_drain_per_s", "must be >= 0");
  }
  require(leaders == 1, "team.uavs", "exactly one UAV must be the leader");
  require(c.sensor.width >= 16 && c.sensor.height >= 16, "sensor.width", "sensor must be at least 16x16");
  require(std::isfinite(c.sensor.gsd) && c.sensor.gsd > 0.0, "sensor.gsd_m", "must be positive");
  require(c.safety.collision_dist_m >= 0.0, "safety.collision_dist_m", "must be >= 0");
  require(c.safety.dr_timeout_s > 0.0, "safety.dr_timeout_s", "must be positive");
  require(c.safety.handover_health_min >= 0.0 && c.safety.handover_health_min <= 1.0,
          "safety.handover_health_min", "must lie in [0, 1]");
  require(c.band_width_gsd > 0.0, "metrics.band_width_gsd", "must be positive");
  require(finite_all({c.front_center.x, c.front_center.y, c.wind_dir_rad}), "front.center_m", "must be finite");
  validate(c.perception);
}

ScenarioConfig parse_scenario(const json& j) {
  ScenarioConfig c;
  check_keys(j, "", {"name", "duration_s", "dt_s", "seed", "world_size_m", "front", "wind", "smoke_density",
                     "saturation_frac", "thermal", "rgb", "gps", "comms", "team", "sensor", "pipeline", "safety",
                     "metrics"});
  read(j, "", "name", c.name);
  read(j, "", "duration_s", c.duration_s);
  read(j, "", "dt_s", c.dt_s);
  read(j, "", "seed", c.seed);
  read(j, "", "world_size_m", c.world_size_m);
  read(j, "", "smoke_density", c.smoke_density);
  read(j, "", "saturation_frac", c.saturation_frac);

  if (j.contains("front")) {
    const json& f = j["front"];
    check_keys(f, "front", {"center_m", "radius_m", "base_rate_mps", "vertex_spacing_m"});
    if (f.contains("center_m")) c.front_center = read_vec2(f["center_m"], "front.center_m");
    read(f, "front", "radius_m", c.front_radius_m);
    read(f, "front", "base_rate_mps", c.base_rate_mps);
    read(f, "front", "vertex_spacing_m", c.vertex_spacing_m);
  } else {
    c.front_center = {0.5 * c.world_size_m, 0.5 * c.world_size_m};
  }
  if (j.contains("wind")) {
    const json& w = j["wind"];
    check_keys(w, "wind", {"dir_rad", "gain"});
    read(w, "wind", "dir_rad", c.wind_dir_rad);
    read(w, "wind", "gain", c.wind_gain);
  }
  if (j.contains("thermal")) {
    const json& t = j["thermal"];
    check_keys(t, "thermal", {"ambient", "hot", "max_count", "noise_sigma", "falloff_gsd"});
    read(t, "thermal", "ambient", c.thermal.ambient);
    read(t, "thermal", "hot", c.thermal.hot);
    read(t, "thermal", "max_count", c.thermal.max_count);
    read(t, "thermal", "noise_sigma", c.thermal.noise_sigma);
    read(t, "thermal", "falloff_gsd", c.thermal.falloff_gsd);
  }
  if (j.contains("rgb")) {
    const json& r = j["rgb"];
    check_keys(r, "rgb", {"base", "step_amplitude", "texture_amplitude", "texture_scale_m", "distractor_count",
                          "distractor_amplitude", "distractor_length_m", "distractor_width_m", "noise_sigma",
                          "falloff_gsd"});
    read(r, "rgb", "base", c.rgb.base);
    read(r, "rgb", "step_amplitude", c.rgb.step_amplitude);
    read(r, "rgb", "texture_amplitude", c.rgb.texture_amplitude);
    read(r, "rgb", "texture_scale_m", c.rgb.texture_scale_m);
    read(r, "rgb", "distractor_count", c.rgb.distractor_count);
    read(r, "rgb", "distractor_amplitude", c.rgb.distractor_amplitude);
    read(r, "rgb", "distractor_length_m", c.rgb.distractor_length_m);
    read(r, "rgb", "distractor_width_m", c.rgb.distractor_width_m);
    read(r, "rgb", "noise_sigma", c.rgb.noise_sigma);
    read(r, "rgb", "falloff_gsd", c.rgb.falloff_gsd);
  }
  if (j.contains("gps")) {
    const json& g = j["gps"];
    check_keys(g, "gps", {"noise_m", "nav_gain", "outages"});
    read(g, "gps", "noise_m", c.gps_noise_m);
    read(g, "gps", "nav_gain", c.nav_gain);
    if (g.contains("outages")) {
      if (!g["outages"].is_array()) bad("gps.outages", "expected an array");
      for (const json& o : g["outages"]) {
        check_keys(o, "gps.outages", {"uav", "start_s", "end_s"});
        GpsOutage out;
        read(o, "gps.outages", "uav", out.uav);
        read(o, "gps.outages", "start_s", out.start_s);
        read(o, "gps.outages", "end_s", out.end_s);
        c.outages.push_back(out);
      }
    }
  }
  if (j.contains("comms")) {
    const json& m = j["comms"];
    check_keys(m, "comms", {"loss_prob", "latency_ms", "beacon_hz"});
    read(m, "comms", "loss_prob", c.comms.loss_prob);
    read(m, "comms", "latency_ms", c.comms.latency_ms);
    read(m, "comms", "beacon_hz", c.comms.beacon_hz);
  }
  if (j.contains("team")) {
    const json& t = j["team"];
    check_keys(t, "team", {"v0_mps", "v_max_factor", "turn_rate_dps", "kp", "consensus_gain", "uavs", "weights"});
    read(t, "team", "v0_mps", c.v0);
    read(t, "team", "v_max_factor", c.v_max_factor);
    read(t, "team", "turn_rate_dps", c.turn_rate_dps);
    read(t, "team", "kp", c.kp);
    read(t, "team", "consensus_gain", c.consensus_gain);
    if (t.contains("weights")) {
      const json& w = t["weights"];
      check_keys(w, "team.weights", {"battery", "link", "gnss"});
      read(w, "team.weights", "battery", c.weights.battery);
      read(w, "team.weights", "link", c.weights.link);
      read(w, "team.weights", "gnss", c.weights.gnss);
      require(c.weights.battery >= 0 && c.weights.link >= 0 && c.weights.gnss >= 0 &&
                  std::abs(c.weights.battery + c.weights.link + c.weights.gnss - 1.0) < 1e-9,
              "team.weights", "weights must be >= 0 and sum to 1");
    }
    if (t.contains("uavs")) {
      if (!t["uavs"].is_array()) bad("team.uavs", "expected an array");
      for (const json& u : t["uavs"]) {
        check_keys(u, "team.uavs", {"id", "role", "pose", "offset_m", "battery", "battery_drain_per_s",
                                    "link_quality"});
        UavInit ui;
        read(u, "team.uavs", "id", ui.id);
        std::string role = "follower";
        read(u, "team.uavs", "role", role);
        if (role != "leader" && role != "follower") bad("team.uavs.role", "expected 'leader' or 'follower'");
        ui.leader = role == "leader";
        if (u.contains("pose")) {
          const json& p = u["pose"];
          if (!p.is_array() || p.size() != 3) bad("team.uavs.pose", "expected [x, y, psi]");
          for (const auto& e : p)
            if (!e.is_number()) bad("team.uavs.pose", "expected numbers");
          ui.pose = make_pose(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
        }
        if (u.contains("offset_m")) ui.offset = read_vec2(u["offset_m"], "team.uavs.offset_m");
        read(u, "team.uavs", "battery", ui.battery);
        read(u, "team.uavs", "battery_drain_per_s", ui.battery_drain_per_s);
        read(u, "team.uavs", "link_quality", ui.link_quality);
        c.uavs.push_back(ui);
      }
    }
  }
  if (j.contains("sensor")) {
    const json& s = j["sensor"];
    check_keys(s, "sensor", {"width", "height", "gsd_m"});
    read(s, "sensor", "width", c.sensor.width);
    read(s, "sensor", "height", c.sensor.height);
    read(s, "sensor", "gsd_m", c.sensor.gsd);
  }
  if (j.contains("pipeline")) {
    const json& p = j["pipeline"];
    check_keys(p, "pipeline", {"variant", "k", "l_min_gsd", "theta_min_deg", "k_max_vertices", "alpha_smooth",
                               "c_g", "tau_e", "min_fragment_px", "contrast_factor", "carry_frames",
                               "hysteresis_low", "hysteresis_high", "texture_window", "coherence_min",
                               "histogram_margin_px", "clip_low", "clip_high", "stabilizer_alpha",
                               "feature_scale_m", "fallback_ratio"});
    PerceptionConfig& pc = c.perception;
    if (p.contains("variant")) {
      std::string v;
      read(p, "pipeline", "variant", v);
      try {
        c.variant = parse_variant(v);
      } catch (const Error&) {
        bad("pipeline.variant", "unknown variant '" + v + "'");
      }
    }
    read(p, "pipeline", "k", pc.simplify.k);
    read(p, "pipeline", "l_min_gsd", pc.simplify.l_min_gsd);
    read(p, "pipeline", "theta_min_deg", pc.simplify.theta_min_deg);
    read(p, "pipeline", "k_max_vertices", pc.simplify.k_max_vertices);
    read(p, "pipeline", "alpha_smooth", pc.simplify.alpha_smooth);
    read(p, "pipeline", "c_g", pc.fusion.c_g);
    read(p, "pipeline", "tau_e", pc.fusion.tau_e);
    read(p, "pipeline", "min_fragment_px", pc.fusion.min_fragment_px);
    read(p, "pipeline", "contrast_factor", pc.fusion.contrast_factor);
    read(p, "pipeline", "carry_frames", pc.fusion.carry_frames);
    read(p, "pipeline", "hysteresis_low", pc.hysteresis.low);
    read(p, "pipeline", "hysteresis_high", pc.hysteresis.high);
    read(p, "pipeline", "texture_window", pc.texture_window);
    read(p, "pipeline", "coherence_min", pc.coherence_min);
    read(p, "pipeline", "histogram_margin_px", pc.histogram_margin_px);
    read(p, "pipeline", "clip_low", pc.clip.low);
    read(p, "pipeline", "clip_high", pc.clip.high);
    read(p, "pipeline", "stabilizer_alpha", pc.stabilizer_alpha);
    read(p, "pipeline", "feature_scale_m", pc.feature_scale_m);
    read(p, "pipeline", "fallback_ratio", pc.fallback_ratio);
  }
  if (j.contains("safety")) {
    const json& s = j["safety"];
    check_keys(s, "safety", {"collision_dist_m", "collision_alt_m", "dr_timeout_s", "handover_health_min"});
    read(s, "safety", "collision_dist_m", c.safety.collision_dist_m);
    read(s, "safety", "collision_alt_m", c.safety.collision_alt_m);
    read(s, "safety", "dr_timeout_s", c.safety.dr_timeout_s);
    read(s, "safety", "handover_health_min", c.safety.handover_health_min);
  }
  if (j.contains("metrics")) {
    const json& m = j["metrics"];
    check_keys(m, "metrics", {"band_width_gsd"});
    read(m, "metrics", "band_width_gsd", c.band_width_gsd);
  }
  c.comms.seed = mix_seed(c.seed, 4);

  // Followers without an explicit pose start in their formation slot.
  const UavInit* lead = nullptr;
  for (const auto& u : c.uavs)
    if (u.leader) lead = &u;
  if (lead && !lead->pose) bad("team.uavs.pose", "the leader needs an initial pose");
  for (auto& u : c.uavs)
    if (!u.pose && lead) {
      const Vec2 p = formation_target(*lead->pose, u.offset - lead->offset);
      u.pose = make_pose(p.x, p.y, lead->pose->psi);
    }
  validate(c);
  return c;
}

json load_config_doc(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigInvalid, "config " + path.string() + " is not valid JSON: " + e.what());
  }
  return j;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) { return parse_scenario(load_config_doc(path)); }

std::string resolve_param_path(const std::string& path) {
  static const std::map<std::string, std::string> alias{
      {"beacon_hz", "comms.beacon_hz"},     {"loss_prob", "comms.loss_prob"},
      {"latency_ms", "comms.latency_ms"},   {"k", "pipeline.k"},
      {"gsd", "sensor.gsd_m"},              {"c_g", "pipeline.c_g"},
      {"tau_e", "pipeline.tau_e"},          {"wind_gain", "wind.gain"},
      {"v0", "team.v0_mps"},                {"gps_noise_m", "gps.noise_m"},
      {"variant", "pipeline.variant"}};
  const auto it = alias.find(path);
  return it == alias.end() ? path : it->second;
}

void set_param(json& doc, const std::string& path, const json& value) {
  const std::string full = resolve_param_path(path);
  json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = full.find('.', start);
    const std::string key = full.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) bad(full, "empty path component");
    if (!node->is_object()) bad(full, "path does not name an object field");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

}  // namespace ember
