#pragma once

// Batch drivers behind the command line: single runs, variant ablations,
// parameter sweeps and offline tracking of exported frame pairs.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ember/report.hpp"

namespace ember {

// Worker cap: EMBER_THREADS when set to a positive integer, else the
// hardware concurrency (at least 1).
unsigned thread_cap();

struct RunRequest {
  std::optional<std::uint64_t> seed;
  std::optional<Variant> variant;
  std::optional<std::filesystem::path> export_dir;
};

struct RunArtifacts {
  MetricsReport report;
  nlohmann::json report_json;
  nlohmann::json timing_json;
  std::string log;
};

// Runs one scenario; a request seed replaces the document's seed before
// parsing so every derived stream follows it. When `out` is set writes
// log.ndjson, report.json and timing.json there.
RunArtifacts run_config(nlohmann::json doc, const RunRequest& req,
                        const std::optional<std::filesystem::path>& out, unsigned threads);

struct AblationRow {
  Variant variant;
  std::optional<MetricsReport> report;
  std::string error;
};

// One run per variant on a shared seed. Writes ablation.csv (one row per
// metric, one column per variant plus empty Snakes and GrabCut columns) and
// ablation.json when `out` is set.
std::vector<AblationRow> ablate(const nlohmann::json& doc, const std::vector<Variant>& variants,
                                const std::optional<std::filesystem::path>& out, unsigned threads);

struct SweepAxis {
  std::string path;  // as given; resolved with resolve_param_path
  std::vector<nlohmann::json> values;
};

// "k=1,2,4,8;loss_prob=0,0.2". Values are parsed as JSON scalars, falling
// back to strings ("variant=Fusion,RgbOnly").
std::vector<SweepAxis> parse_axes(const std::string& spec);

inline constexpr std::size_t kDefaultSweepLimit = 256;

struct SweepCell {
  std::vector<nlohmann::json> values;  // one per axis
  std::optional<MetricsReport> report;
  std::string error;
};

// Cross product in row-major axis order (last axis fastest). Every cell uses
// the document's seed. Rows of sweep.csv are written in cell order as soon as
// the prefix before them is complete, so a failing cell never hides others.
std::vector<SweepCell> sweep(const nlohmann::json& doc, const std::vector<SweepAxis>& axes,
                             const std::optional<std::filesystem::path>& out, unsigned threads,
                             std::size_t limit = kDefaultSweepLimit);

struct TrackFrame {
  int id = 0;
  std::uint64_t timestamp_us = 0;
  std::optional<GuidancePolyline> polyline;
  std::size_t mask_pixels = 0;
};

struct TrackResult {
  Variant variant = Variant::Fusion;
  std::vector<TrackFrame> frames;
};

// Perception only over NNNN_thermal.pgm / NNNN_rgb.pgm pairs listed in
// track.json. Without RGB frames the ThermalOnly wiring is used. Writes
// NNNN_mask.pbm, NNNN_polyline.csv and NNNN_wire.hex to `out`.
TrackResult track(const std::filesystem::path& in_dir, const std::filesystem::path& out,
                  const PerceptionConfig& perception, std::optional<Variant> variant = std::nullopt);

}  // namespace ember
