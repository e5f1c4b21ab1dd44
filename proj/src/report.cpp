#include "ember/report.hpp"

#include <cstdio>

namespace ember {

using nlohmann::json;

MetricsReport summarize(const RunResult& run, const ScenarioConfig& cfg, Variant variant) {
  MetricsReport r;
  r.scenario = cfg.name;
  r.variant = to_string(variant);
  r.seed = cfg.seed;
  r.ticks = run.ticks.size();
  r.gsd = cfg.sensor.gsd;
  r.band_width_m = cfg.band_width_gsd * cfg.sensor.gsd;

  double iou_sum = 0.0, vert_sum = 0.0, ferr = 0.0;
  std::size_t vert_n = 0, ferr_n = 0, pass = 0, judged = 0;
  r.fidelity_tol_m = std::max(2.0 * cfg.sensor.gsd, cfg.perception.simplify.eps_m(cfg.sensor.gsd));
  std::vector<Polyline> seq;
  for (std::size_t i = 0; i < run.ticks.size(); ++i) {
    const TickRecord& t = run.ticks[i];
    if (t.iou) {
      iou_sum += *t.iou;
      ++r.iou_ticks;
    }
    if (t.leader_polyline) {
      vert_sum += static_cast<double>(t.vertex_count);
      ++vert_n;
    }
    r.false_px_total += t.false_px;
    ferr += t.formation_err_sq;
    ferr_n += static_cast<std::size_t>(t.formation_n);
    if (i >= kWarmupTicks) {
      ++judged;
      if (t.hausdorff && *t.hausdorff <= r.fidelity_tol_m) ++pass;
    }
  }
  r.iou = r.iou_ticks ? iou_sum / static_cast<double>(r.iou_ticks) : 0.0;
  r.mean_vertices = vert_n ? vert_sum / static_cast<double>(vert_n) : 0.0;
  r.formation_rms_m = ferr_n ? std::sqrt(ferr / static_cast<double>(ferr_n)) : 0.0;
  r.fidelity_pass_frac = judged ? static_cast<double>(pass) / static_cast<double>(judged) : 0.0;

  // Jitter over consecutive ticks that both carry a leader polyline.
  double sq = 0.0, heading = 0.0, signed_sum = 0.0;
  for (std::size_t i = 1; i < run.ticks.size(); ++i) {
    const auto& a = run.ticks[i - 1];
    const auto& b = run.ticks[i];
    if (!a.leader_polyline || !b.leader_polyline || a.leader != b.leader) continue;
    const JitterStats j = boundary_jitter({*a.leader_polyline, *b.leader_polyline}, false);
    sq += j.jitter_rms_m * j.jitter_rms_m;
    heading += j.heading_var;
    signed_sum += j.mean_signed_m;
    ++r.jitter_pairs;
  }
  if (r.jitter_pairs) {
    const auto n = static_cast<double>(r.jitter_pairs);
    r.jitter = {std::sqrt(sq / n), heading / n, signed_sum / n};
  }

  const double perimeter = run.final_perimeter_m > 0.0 ? run.final_perimeter_m : 1.0;
  for (const auto& u : run.uavs) r.paths.emplace_back(u.id, path_length(u.positions, perimeter));
  if (!run.staleness_ms.empty()) r.staleness_ms = latency_percentiles(run.staleness_ms);
  r.message_bytes_total = run.message_bytes;
  r.messages_sent = run.messages_sent;
  r.messages_dropped = run.messages_dropped;
  for (auto p : run.pixels_processed) r.pixels_processed_total += p;
  r.handovers = run.handovers;
  r.final_perimeter_m = run.final_perimeter_m;
  return r;
}

json to_json(const MetricsReport& r) {
  json paths = json::array();
  double mean_path = 0.0, mean_norm = 0.0;
  for (const auto& [id, p] : r.paths) {
    paths.push_back({{"uav", id}, {"path_len_m", p.meters}, {"path_len_norm", p.normalized}});
    mean_path += p.meters;
    mean_norm += p.normalized;
  }
  if (!r.paths.empty()) {
    mean_path /= static_cast<double>(r.paths.size());
    mean_norm /= static_cast<double>(r.paths.size());
  }
  json j{
      {"report_v", kReportVersion},
      {"definitions",
       {{"iou", "boundary-band IoU: predicted and true boundaries rasterized at the sensor GSD, each dilated by "
                "band_width_m, truth restricted to the leader camera footprint; mean over ticks with truth in view"},
        {"jitter_rms_m", "RMS unsigned distance from 100 arc-length samples of each leader polyline to the "
                         "previous tick's polyline"},
        {"mean_signed_m", "mean signed offset of the same samples, positive to the left of the older polyline"},
        {"formation_rms_m", "RMS over ticks and followers of |p_i - (p_L + R(psi_L) o_i)|"},
        {"fidelity", "share of ticks after warm-up whose leader polyline lies within fidelity_tol_m (directed "
                     "Hausdorff) of the true front"},
        {"compute_proxy", "pixels_processed_total and message_bytes_total stand in for CPU and power; no energy "
                          "model is simulated"},
        {"latency", "wall-clock stage latencies are written to timing.json; they are a desktop proxy, not an "
                    "embedded measurement"}}},
      {"scenario", r.scenario},
      {"variant", r.variant},
      {"seed", r.seed},
      {"ticks", r.ticks},
      {"gsd_m", r.gsd},
      {"band_width_m", r.band_width_m},
      {"iou", r.iou},
      {"iou_ticks", r.iou_ticks},
      {"jitter_rms_m", r.jitter.jitter_rms_m},
      {"heading_var", r.jitter.heading_var},
      {"mean_signed_m", r.jitter.mean_signed_m},
      {"jitter_pairs", r.jitter_pairs},
      {"path_len_mean_m", mean_path},
      {"path_len_norm_mean", mean_norm},
      {"paths", paths},
      {"formation_rms_m", r.formation_rms_m},
      {"fidelity_tol_m", r.fidelity_tol_m},
      {"fidelity_pass_frac", r.fidelity_pass_frac},
      {"mean_vertices", r.mean_vertices},
      {"false_px_total", r.false_px_total},
      {"message_bytes_total", r.message_bytes_total},
      {"messages_sent", r.messages_sent},
      {"messages_dropped", r.messages_dropped},
      {"pixels_processed_total", r.pixels_processed_total},
      {"handovers", r.handovers},
      {"final_perimeter_m", r.final_perimeter_m},
      {"baselines_not_run", json::array({"Snakes", "GrabCut"})},
  };
  if (r.staleness_ms)
    j["staleness_ms"] = {{"p50", r.staleness_ms->p50}, {"p95", r.staleness_ms->p95}};
  else
    j["staleness_ms"] = nullptr;
  return j;
}

json timing_json(const RunResult& run) {
  json j{{"note", "desktop wall-clock proxy for the embedded latency target"}};
  if (run.stage_times.empty()) return j;
  std::vector<double> sense, mask, edge, fuse, simp, total;
  for (const auto& s : run.stage_times) {
    sense.push_back(s.sense_ms);
    mask.push_back(s.mask_ms);
    edge.push_back(s.edge_ms);
    fuse.push_back(s.fuse_ms);
    simp.push_back(s.simplify_ms);
    total.push_back(s.total_ms());
  }
  auto pct = [](const std::vector<double>& v) {
    const Percentiles p = latency_percentiles(v);
    return json{{"p50_ms", p.p50}, {"p95_ms", p.p95}};
  };
  j["stages"] = {{"sense", pct(sense)}, {"mask", pct(mask)},         {"edge", pct(edge)},
                 {"fuse", pct(fuse)},   {"simplify", pct(simp)},     {"total", pct(total)}};
  return j;
}

std::vector<std::string> csv_columns() {
  return {"scenario",       "variant",          "seed",           "ticks",
          "iou",            "jitter_rms_m",     "heading_var",    "mean_signed_m",
          "path_len_mean_m", "path_len_norm_mean", "formation_rms_m", "staleness_p50_ms",
          "staleness_p95_ms", "fidelity_pass_frac", "mean_vertices", "false_px_total",
          "message_bytes_total", "messages_dropped", "pixels_processed_total", "handovers"};
}

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

std::vector<std::string> csv_values(const MetricsReport& r) {
  double mean_path = 0.0, mean_norm = 0.0;
  for (const auto& [id, p] : r.paths) {
    mean_path += p.meters;
    mean_norm += p.normalized;
  }
  if (!r.paths.empty()) {
    mean_path /= static_cast<double>(r.paths.size());
    mean_norm /= static_cast<double>(r.paths.size());
  }
  return {r.scenario,
          r.variant,
          std::to_string(r.seed),
          std::to_string(r.ticks),
          num(r.iou),
          num(r.jitter.jitter_rms_m),
          num(r.jitter.heading_var),
          num(r.jitter.mean_signed_m),
          num(mean_path),
          num(mean_norm),
          num(r.formation_rms_m),
          r.staleness_ms ? num(r.staleness_ms->p50) : "",
          r.staleness_ms ? num(r.staleness_ms->p95) : "",
          num(r.fidelity_pass_frac),
          num(r.mean_vertices),
          std::to_string(r.false_px_total),
          std::to_string(r.message_bytes_total),
          std::to_string(r.messages_dropped),
          std::to_string(r.pixels_processed_total),
          std::to_string(r.handovers)};
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace ember
