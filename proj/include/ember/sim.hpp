#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ember/comms.hpp"
#include "ember/guide.hpp"
#include "ember/metrics.hpp"
#include "ember/pipeline.hpp"

namespace ember {

// ---- fire front ----

struct FireFront {
  Polyline boundary;  // closed, counterclockwise
  double base_rate = 0.0;
  double wind_dir = 0.0;
  double wind_gain = 0.0;
  double spacing = 2.0;  // initial vertex spacing; resampling keeps edges in [1, 4] x spacing
};

FireFront make_circle_front(Vec2 center, double radius, double spacing, double base_rate,
                            double wind_dir = 0.0, double wind_gain = 0.0);

double spread_rate(const FireFront& f, double normal_angle);

FireFront step_front(const FireFront& f, double dt);

// ---- camera and rendering ----

struct SensorConfig {
  int width = 160;
  int height = 128;
  double gsd = 0.5;
};

// North-up grid centred on a position, snapped to the GSD lattice.
struct Camera {
  Pixel origin_px;
  int width = 0;
  int height = 0;
  double gsd = 1.0;

  Vec2 pixel_center(int x, int y) const noexcept {
    return {gsd * (origin_px.x + x), gsd * (origin_px.y + y)};
  }
  Rect footprint() const noexcept {
    return {gsd * (origin_px.x - 0.5), gsd * (origin_px.y - 0.5), gsd * (origin_px.x + width - 0.5),
            gsd * (origin_px.y + height - 0.5)};
  }
};

Camera camera_at(Vec2 position, const SensorConfig& s);

struct ThermalRender {
  double ambient = 3000.0;
  double hot = 9000.0;
  double max_count = 16383.0;
  double noise_sigma = 0.0;
  double falloff_gsd = 2.0;  // 10-90 % width of the logistic edge
};

struct RgbRender {
  double base = 0.55;
  double step_amplitude = 0.25;  // burnt side is darker by this much
  double texture_amplitude = 0.0;
  double texture_scale_m = 4.0;
  int distractor_count = 0;
  double distractor_amplitude = 0.2;
  double distractor_length_m = 30.0;
  double distractor_width_m = 3.0;
  double noise_sigma = 0.0;
  double falloff_gsd = 2.0;
};

struct Distractor {
  Vec2 center;
  double angle = 0.0;
  double length = 0.0;
  double width = 0.0;
};

std::vector<Distractor> make_distractors(const RgbRender& cfg, double world_size, std::uint64_t seed);

// Soft inside fraction of the front per pixel: logistic in signed distance.
Grid<float> front_coverage(const FireFront& f, const Camera& cam, double falloff_width_m);

Grid<std::uint16_t> render_thermal(const FireFront& f, const Camera& cam, const ThermalRender& cfg,
                                   double saturation_frac, std::uint64_t seed);

Grid<std::uint16_t> render_rgb(const FireFront& f, const Camera& cam, const RgbRender& cfg,
                               double smoke_density, const std::vector<Distractor>& distractors,
                               std::uint64_t texture_seed, std::uint64_t noise_seed);

// ---- GPS ----

struct GpsOutage {
  int uav = 0;
  double start_s = 0.0;
  double end_s = 0.0;
};

std::optional<Vec2> gps_read(int uav, Vec2 truth, const std::vector<GpsOutage>& outages, double t,
                             double noise_m, Rng& rng);

// ---- scenario ----

struct UavInit {
  int id = 0;
  bool leader = false;
  std::optional<Pose> pose;  // followers default to their formation slot
  Vec2 offset;
  double battery = 1.0;
  double battery_drain_per_s = 0.0;
  double link_quality = 1.0;
};

struct ScenarioConfig {
  std::string name = "scenario";
  double duration_s = 120.0;
  double dt_s = 0.1;
  std::uint64_t seed = 1;
  double world_size_m = 400.0;

  Vec2 front_center{200.0, 200.0};
  double front_radius_m = 50.0;
  double base_rate_mps = 0.2;
  double vertex_spacing_m = 2.0;
  double wind_dir_rad = 0.0;
  double wind_gain = 0.0;

  double smoke_density = 0.0;
  double saturation_frac = 0.0;
  ThermalRender thermal;
  RgbRender rgb;

  double gps_noise_m = 1.5;
  std::vector<GpsOutage> outages;
  double nav_gain = 0.2;

  ChannelModel comms;

  double v0 = 12.0;
  double v_max_factor = 1.25;
  double turn_rate_dps = 60.0;
  double kp = 0.5;
  double consensus_gain = 0.2;
  std::vector<UavInit> uavs;

  SensorConfig sensor;
  PerceptionConfig perception;
  Variant variant = Variant::Fusion;
  SafetyConfig safety;
  LeaderWeights weights;

  double band_width_gsd = 2.0;

  std::size_t tick_count() const;
  double lookahead_m() const { return std::max(2.0 * v0 * dt_s, 5.0); }
};

// Throws ConfigInvalid naming the offending field.
void validate(const ScenarioConfig& cfg);
ScenarioConfig parse_scenario(const nlohmann::json& j);
// Reads a config document; Io when unreadable, ConfigInvalid when not JSON.
nlohmann::json load_config_doc(const std::filesystem::path& path);
ScenarioConfig load_scenario(const std::filesystem::path& path);

// Dotted-path override on a config document; short aliases (beacon_hz,
// loss_prob, k, gsd, smoke_density, ...) resolve to their full paths.
std::string resolve_param_path(const std::string& path);
void set_param(nlohmann::json& doc, const std::string& path, const nlohmann::json& value);

// ---- run ----

struct RunOptions {
  std::optional<Variant> variant;        // overrides the config
  unsigned threads = 1;                  // per-tick UAV parallelism
  std::optional<std::filesystem::path> export_dir;  // leader-id-0 frames for `track`
  int export_uav = 0;
};

struct TickRecord {
  double t = 0.0;
  int leader = 0;
  std::optional<Polyline> leader_polyline;
  bool leader_closed = false;
  Rect footprint;
  std::optional<double> iou;        // absent when no truth boundary is in view
  std::optional<double> hausdorff;  // perceived -> truth
  std::size_t false_px = 0;
  std::size_t vertex_count = 0;
  double front_area = 0.0;
  std::vector<std::pair<int, Vec2>> positions;
  double formation_err_sq = 0.0;
  int formation_n = 0;
};

struct UavTrace {
  int id = 0;
  std::vector<Vec2> positions;
  std::vector<std::optional<Polyline>> polylines;
};

struct RunResult {
  std::string log;  // NDJSON, byte-deterministic
  std::vector<TickRecord> ticks;
  std::vector<UavTrace> uavs;
  std::vector<double> staleness_ms;  // follower target age, one sample per follower tick
  std::vector<StageTimes> stage_times;  // leader perception wall times (not in the log)
  std::vector<std::size_t> pixels_processed;  // leader, per tick
  std::vector<std::size_t> pixels_budget;     // histogram + band size, per tick
  std::uint64_t message_bytes = 0;
  std::uint64_t messages_sent = 0;
  std::uint64_t messages_dropped = 0;
  std::size_t handovers = 0;
  double final_perimeter_m = 0.0;
  Polyline final_front;
};

RunResult run_scenario(const ScenarioConfig& cfg, const RunOptions& opts = {});

}  // namespace ember
