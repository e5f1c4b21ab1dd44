#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "ember/sim.hpp"

namespace ember {

inline constexpr int kReportVersion = 1;
inline constexpr std::size_t kWarmupTicks = 10;

struct MetricsReport {
  std::string scenario;
  std::string variant;
  std::uint64_t seed = 0;
  std::size_t ticks = 0;
  double gsd = 0.0;
  double band_width_m = 0.0;

  double iou = 0.0;
  std::size_t iou_ticks = 0;
  JitterStats jitter;
  std::size_t jitter_pairs = 0;
  std::vector<std::pair<int, PathLength>> paths;
  double formation_rms_m = 0.0;
  std::optional<Percentiles> staleness_ms;
  double fidelity_tol_m = 0.0;       // max(2 GSD, eps)
  double fidelity_pass_frac = 0.0;   // ticks after warm-up within the tolerance
  double mean_vertices = 0.0;
  std::size_t false_px_total = 0;
  std::uint64_t message_bytes_total = 0;
  std::uint64_t messages_sent = 0;
  std::uint64_t messages_dropped = 0;
  std::uint64_t pixels_processed_total = 0;
  std::size_t handovers = 0;
  double final_perimeter_m = 0.0;
};

MetricsReport summarize(const RunResult& run, const ScenarioConfig& cfg, Variant variant);

// Deterministic report document (no wall-clock values).
nlohmann::json to_json(const MetricsReport& r);

// Wall-clock stage latencies; kept out of the report so reports stay reproducible.
nlohmann::json timing_json(const RunResult& run);

std::vector<std::string> csv_columns();
std::vector<std::string> csv_values(const MetricsReport& r);
std::string csv_escape(const std::string& s);

}  // namespace ember
