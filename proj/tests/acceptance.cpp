// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ember/comms.hpp"
#include "ember/harness.hpp"
#include "ember/simplify.hpp"
#include "ember/thermal_mask.hpp"
#include "oracles.hpp"

using namespace ember;
using nlohmann::json;

namespace {

const std::filesystem::path kConfigs = std::filesystem::path(EMBER_SOURCE_DIR) / "configs";

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

char buf[512];
template <class... A>
std::string fmt(const char* f, A... a) {
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

// ---- 1 ----
Outcome otsu_equivalence() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(1001);
  int ties = 0;
  for (int i = 0; i < 1000 && o.pass; ++i) {
    std::vector<std::uint64_t> counts(256, 0);
    switch (i % 4) {
      case 0:  // dense noise
        for (auto& c : counts) c = rng.below(1000);
        break;
      case 1: {  // bimodal with empty gaps
        const int a = static_cast<int>(rng.below(100)), b = 150 + static_cast<int>(rng.below(100));
        for (int k = -5; k <= 5; ++k) {
          counts[static_cast<std::size_t>(a + 5 + k)] += 1 + rng.below(50);
          counts[static_cast<std::size_t>(b + k)] += 1 + rng.below(50);
        }
        break;
      }
      case 2: {  // symmetric, so the criterion has exact ties to resolve
        const int n = 2 + static_cast<int>(rng.below(6));
        for (int k = 0; k < n; ++k) {
          const std::size_t at = rng.below(128);
          const std::uint64_t c = 1 + rng.below(20);
          counts[at] += c;
          counts[255 - at] += c;
        }
        break;
      }
      default:  // sparse
        for (int k = 0; k < 3 + static_cast<int>(rng.below(10)); ++k) counts[rng.below(256)] += 1 + rng.below(5);
        counts[rng.below(128)] += 1;
        counts[128 + rng.below(128)] += 1;
    }
    const Histogram h = histogram_from_counts(counts);
    const auto [t, s] = oracle::otsu(h.p);
    const OtsuResult r = otsu_threshold(h);
    int maxima = 0;
    for (double v : r.curve) maxima += v >= s * (1 - 1e-12) ? 1 : 0;
    ties += maxima > 1;
    o.require(r.t_star == t, fmt("histogram %d: t*=%d, oracle %d", i, r.t_star, t));
  }
  const double secs = seconds_since(t0);
  o.require(secs < 5.0, fmt("took %.2f s", secs));
  if (o.pass) o.detail = fmt("1000 histograms match, %d with tied maxima, %.2f s", ties, secs);
  return o;
}

// ---- 2 ----
Outcome morphology_laws() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(2002);
  for (int i = 0; i < 200 && o.pass; ++i) {
    BitGrid m(64, 64);
    const double p = rng.uniform(0.2, 0.8);
    for (std::size_t k = 0; k < m.size(); ++k) m[k] = rng.bernoulli(p);
    const int r = 1 + static_cast<int>(rng.below(3));
    const BitGrid op = open(m, r), cl = close(m, r);
    bool anti = true, ext = true;
    for (std::size_t k = 0; k < m.size(); ++k) {
      anti = anti && (!op[k] || m[k]);
      ext = ext && (!m[k] || cl[k]);
    }
    o.require(anti, fmt("mask %d: opening not anti-extensive", i));
    o.require(ext, fmt("mask %d: closing not extensive", i));
    o.require(open(op, r) == op, fmt("mask %d: opening not idempotent", i));
    o.require(close(cl, r) == cl, fmt("mask %d: closing not idempotent", i));
  }
  const double secs = seconds_since(t0);
  o.require(secs < 10.0, fmt("took %.2f s", secs));
  if (o.pass) o.detail = fmt("200 masks 64x64, r in 1..3, %.2f s", secs);
  return o;
}

// ---- 3 ----
Outcome rdp_bound() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(3003);
  for (int i = 0; i < 500 && o.pass; ++i) {
    const int n = 2 + static_cast<int>(rng.below(499));
    Polyline p;
    Vec2 v{rng.uniform(-100, 100), rng.uniform(-100, 100)};
    double heading = rng.uniform(-3, 3);
    for (int k = 0; k < n; ++k) {
      p.push_back(v);
      heading += rng.gaussian(0.0, 0.5);
      v += Vec2{std::cos(heading), std::sin(heading)} * rng.uniform(0.1, 2.0);
    }
    const double eps = rng.uniform(0.05, 5.0);
    const Polyline s = rdp(p, eps);
    for (Vec2 q : p) {
      const double d = oracle::poly_dist(q, s);
      if (d > eps + 1e-9) {
        o.require(false, fmt("chain %d: vertex %.3f m from the simplified chain (eps %.3f)", i, d, eps));
        break;
      }
    }
    std::size_t prev = p.size() + 1;
    for (double e : {eps / 8, eps / 4, eps / 2, eps, 2 * eps, 4 * eps}) {
      const std::size_t k = rdp(p, e).size();
      o.require(k <= prev, fmt("chain %d: count grew from %zu to %zu at eps %.3f", i, prev, k, e));
      prev = k;
    }
  }
  const double secs = seconds_since(t0);
  o.require(secs < 10.0, fmt("took %.2f s", secs));
  if (o.pass) o.detail = fmt("500 chains, bound and monotonicity hold, %.2f s", secs);
  return o;
}

// ---- 4 ----
Outcome wire_roundtrip() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(4004);
  auto bits_equal = [](float a, float b) { return std::memcmp(&a, &b, sizeof a) == 0; };
  for (int i = 0; i < 1000 && o.pass; ++i) {
    GuidanceMessage m;
    m.ts = rng.next_u64();
    m.gsd = static_cast<float>(rng.uniform(0.01, 5));
    m.eps_m = static_cast<float>(rng.uniform(0.01, 10));
    m.x = static_cast<float>(rng.uniform(-2e4, 2e4));
    m.y = static_cast<float>(rng.uniform(-2e4, 2e4));
    m.psi = static_cast<float>(rng.uniform(-3.14159, 3.14159));
    m.v = static_cast<float>(rng.uniform(0, 20));
    const std::size_t k = 1 + rng.below(64);
    Vec2 p{rng.uniform(-1e5, 1e5), rng.uniform(-1e5, 1e5)};
    for (std::size_t j = 0; j < k; ++j) {
      m.vertices.push_back(p);
      p += Vec2{rng.uniform(-3000, 3000), rng.uniform(-3000, 3000)};
    }
    const WireFrame f = encode(m);
    o.require(f.size() == 42 + 4 * k, fmt("message %d: length %zu for K=%zu", i, f.size(), k));
    const GuidanceMessage d = decode(f);
    o.require(d.ts == m.ts && bits_equal(d.gsd, m.gsd) && bits_equal(d.eps_m, m.eps_m) && bits_equal(d.x, m.x) &&
                  bits_equal(d.y, m.y) && bits_equal(d.psi, m.psi) && bits_equal(d.v, m.v),
              fmt("message %d: scalar mismatch", i));
    o.require(d.vertices.size() == k, fmt("message %d: vertex count", i));
    for (std::size_t j = 0; j < k && o.pass; ++j)
      o.require(std::abs(d.vertices[j].x - m.vertices[j].x) <= 0.05 + 1e-9 &&
                    std::abs(d.vertices[j].y - m.vertices[j].y) <= 0.05 + 1e-9,
                fmt("message %d: vertex %zu off by more than 0.05 m", i, j));
  }
  GuidanceMessage one;
  one.vertices = {{12.3, -4.5}};
  const WireFrame f = encode(one);
  int rejected = 0;
  for (std::size_t bit = 0; bit < 8 * f.size(); ++bit) {
    WireFrame g = f;
    g[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    try {
      decode(g);
    } catch (const Error& e) {
      rejected += e.code() == ErrorCode::CrcMismatch;
    }
  }
  o.require(rejected == 368, fmt("%d of 368 single-bit flips rejected", rejected));
  const char* check = "123456789";
  const auto* b = reinterpret_cast<const std::uint8_t*>(check);
  o.require(crc16(b, 9) == 0x29B1 && oracle::crc16(b, 9) == 0x29B1, "crc16 check value");
  const double secs = seconds_since(t0);
  o.require(secs < 5.0, fmt("took %.2f s", secs));
  if (o.pass) o.detail = fmt("1000 round trips, %d/368 flips rejected, crc 0x29B1, %.2f s", rejected, secs);
  return o;
}

// ---- 5 ----
// The mission graph written out independently of the implementation.
bool allowed_arc(MissionState from, MissionState to) {
  using enum MissionState;
  static const std::set<std::pair<MissionState, MissionState>> arcs{
      {Nominal, Nominal},   {Nominal, Degraded},  {Degraded, Degraded}, {Degraded, Handover},
      {Degraded, Nominal},  {Handover, Handover}, {Handover, Nominal},  {Handover, Degraded}};
  return arcs.count({from, to}) > 0;
}

Outcome mission_conformance() {
  Outcome o;
  using enum MissionState;
  std::size_t sequences = 0;
  // Depth-6 enumeration over single events and the empty step.
  std::function<void(MissionState, int)> walk = [&](MissionState s, int depth) {
    if (depth == 6) {
      ++sequences;
      return;
    }
    for (int e = -1; e < kMissionEventCount && o.pass; ++e) {
      EventSet ev;
      if (e >= 0) ev.add(static_cast<MissionEvent>(e));
      const MissionState t = mission_step(s, ev);
      o.require(allowed_arc(s, t), fmt("arc %s -> %s not in the mission graph", to_string(s), to_string(t)));
      walk(t, depth + 1);
    }
  };
  for (MissionState s : {Nominal, Degraded, Handover}) walk(s, 0);
  // Every simultaneous event combination, breadth first to depth 6.
  std::set<MissionState> frontier{Nominal, Degraded, Handover};
  for (int depth = 0; depth < 6; ++depth) {
    std::set<MissionState> next;
    for (MissionState s : frontier)
      for (int raw = 0; raw < 128; ++raw) {
        const MissionState t = mission_step(s, EventSet::from_raw(static_cast<std::uint8_t>(raw)));
        o.require(allowed_arc(s, t), fmt("combined events %d: %s -> %s", raw, to_string(s), to_string(t)));
        next.insert(t);
      }
    frontier = next;
  }
  // Leader uniqueness across random handovers.
  Rng rng(5005);
  int handovers = 0;
  for (int trial = 0; trial < 2000 && o.pass; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(5));
    std::vector<UavState> uavs;
    FormationSpec f;
    for (int i = 0; i < n; ++i) {
      UavState u;
      u.id = i;
      u.role = i == 0 ? Role::Leader : Role::Follower;
      f.offsets[i] = i == 0 ? Vec2{0, 0} : Vec2{-10.0 * i, 5.0 * i};
      uavs.push_back(u);
    }
    Team team(uavs, f);
    for (int round = 0; round < 5 && o.pass; ++round) {
      for (auto& u : team.uavs()) {
        u.battery = rng.uniform();
        u.link_quality = rng.uniform();
        u.gnss_ok = rng.bernoulli(0.5);
      }
      const int before = team.leader_id();
      try {
        handovers += team.handover({}, {}) != before;
      } catch (const Error& e) {
        o.require(e.code() == ErrorCode::NoViableLeader, "unexpected handover error");
      }
      o.require(team.leader_count() == 1, fmt("trial %d: %zu leaders", trial, team.leader_count()));
      o.require(team.formation().offsets.at(team.leader_id()) == Vec2{0, 0}, "leader offset not re-anchored");
    }
  }
  if (o.pass)
    o.detail = fmt("%zu sequences to depth 6 plus all event combinations; %d handovers, one leader each", sequences,
                   handovers);
  return o;
}

// ---- 6 ----
Outcome nominal_fidelity() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const RunArtifacts a = run_config(load_config_doc(kConfigs / "nominal_circle.json"), {}, std::nullopt, 1);
  const double secs = seconds_since(t0);
  const MetricsReport& r = a.report;
  o.require(r.gsd == 0.5 && r.fidelity_tol_m == 1.0, "scenario is not the GSD 0.5 m, tolerance 1 m case");
  o.require(r.fidelity_pass_frac >= 0.95, fmt("only %.1f%% of ticks within %.2f m", 100 * r.fidelity_pass_frac,
                                              r.fidelity_tol_m));
  o.require(secs < 60.0, fmt("took %.1f s", secs));
  o.detail = fmt("%.1f%% of %zu ticks within %.2f m (band-IoU %.3f), %.1f s", 100 * r.fidelity_pass_frac,
                 r.ticks - kWarmupTicks, r.fidelity_tol_m, r.iou, secs) +
             (o.pass ? "" : "; " + o.detail);
  return o;
}

// ---- 7 ----
Outcome ablation_direction(unsigned threads) {
  Outcome o;
  const json doc = load_config_doc(kConfigs / "textured_smoke.json");
  const auto rows = ablate(doc, {Variant::ThermalOnly, Variant::RgbOnly, Variant::Fusion, Variant::NaiveFollowEdge},
                           std::nullopt, threads);
  std::map<Variant, MetricsReport> by;
  for (const auto& row : rows) {
    o.require(row.report.has_value(), std::string(to_string(row.variant)) + " failed: " + row.error);
    if (row.report) by[row.variant] = *row.report;
  }
  if (!o.pass) return o;
  const auto& th = by[Variant::ThermalOnly];
  const auto& rgb = by[Variant::RgbOnly];
  const auto& fu = by[Variant::Fusion];
  const auto& nv = by[Variant::NaiveFollowEdge];
  o.require(fu.false_px_total < rgb.false_px_total,
            fmt("false pixels Fusion %zu vs RgbOnly %zu", fu.false_px_total, rgb.false_px_total));
  o.require(fu.jitter.jitter_rms_m <= nv.jitter.jitter_rms_m,
            fmt("jitter Fusion %.3f vs Naive %.3f", fu.jitter.jitter_rms_m, nv.jitter.jitter_rms_m));
  o.require(fu.iou >= th.iou - 0.05, fmt("band-IoU Fusion %.3f vs ThermalOnly %.3f", fu.iou, th.iou));
  const std::string numbers = fmt("false px %zu < %zu; jitter %.3f <= %.3f m; IoU %.3f vs thermal %.3f",
                                  fu.false_px_total, rgb.false_px_total, fu.jitter.jitter_rms_m,
                                  nv.jitter.jitter_rms_m, fu.iou, th.iou);
  o.detail = o.pass ? numbers : o.detail + " (" + numbers + ")";
  return o;
}

// ---- 8 ----
Outcome sensitivity(unsigned threads) {
  Outcome o;
  const json base = load_config_doc(kConfigs / "sensitivity_base.json");
  auto metric_series = [&](const json& doc, const std::string& axis, std::vector<json> values,
                           const std::function<double(const MetricsReport&)>& pick) {
    std::vector<double> out;
    for (const auto& cell : sweep(doc, {SweepAxis{axis, std::move(values)}}, std::nullopt, threads)) {
      o.require(cell.report.has_value(), axis + " cell failed: " + cell.error);
      out.push_back(cell.report ? pick(*cell.report) : 0.0);
    }
    return out;
  };
  auto non_increasing = [](const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
      if (v[i] > v[i - 1]) return false;
    return true;
  };
  const auto verts = metric_series(base, "k", {1, 2, 4, 8}, [](const MetricsReport& r) { return r.mean_vertices; });
  json at2 = base;
  set_param(at2, "beacon_hz", 2);
  const auto form = metric_series(at2, "loss_prob", {0.0, 0.2}, [](const MetricsReport& r) { return r.formation_rms_m; });
  json lossy = base;
  set_param(lossy, "loss_prob", 0.2);
  const auto stale = metric_series(lossy, "beacon_hz", {2, 5, 10}, [](const MetricsReport& r) {
    return r.staleness_ms ? r.staleness_ms->p95 : 1e300;
  });
  if (!o.pass) return o;
  o.require(non_increasing(verts), "vertex count rises with k");
  o.require(form[1] >= form[0], "formation RMS falls with packet loss");
  o.require(non_increasing(stale), "staleness p95 rises with beacon rate");
  const std::string numbers =
      fmt("vertices k=1,2,4,8: %.2f %.2f %.2f %.2f; formation RMS loss 0/0.2: %.2f %.2f m; "
          "staleness p95 2/5/10 Hz: %.0f %.0f %.0f ms",
          verts[0], verts[1], verts[2], verts[3], form[0], form[1], stale[0], stale[1], stale[2]);
  o.detail = o.pass ? numbers : o.detail + " (" + numbers + ")";
  return o;
}

// ---- 9 ----
Outcome latency_envelope() {
  Outcome o;
  ScenarioConfig cfg = parse_scenario(load_config_doc(kConfigs / "nominal_circle.json"));
  cfg.sensor = {320, 256, 0.5};
  const FireFront front = make_circle_front(cfg.front_center, cfg.front_radius_m, 2.0, 0.2);
  PerceptionPipeline pipe(cfg.perception, Variant::Fusion);
  std::vector<double> ms;
  std::size_t over_budget = 0, frames = 0;
  for (int n = 0; n < 120; ++n) {
    // Fly north along the east flank of the front.
    const Camera cam = camera_at({cfg.front_center.x + cfg.front_radius_m, cfg.front_center.y - 30 + 0.5 * n},
                                 cfg.sensor);
    SensorInput in;
    in.thermal = render_thermal(front, cam, cfg.thermal, 0.0, static_cast<std::uint64_t>(n));
    in.luminance = render_rgb(front, cam, cfg.rgb, 0.0, {}, 2, static_cast<std::uint64_t>(n));
    in.gsd = cam.gsd;
    in.origin_px = cam.origin_px;
    in.timestamp_us = 100000ull * static_cast<unsigned>(n);
    const PerceptionResult r = pipe.process(in);
    if (n < 10) continue;
    ms.push_back(r.times.total_ms());
    ++frames;
    over_budget += r.pixels_processed > r.histogram_pixels + r.band_pixels;
  }
  const Percentiles p = latency_percentiles(ms);
  o.require(p.p95 < 50.0, fmt("p95 %.1f ms", p.p95));
  o.require(over_budget == 0, fmt("%zu of %zu frames processed more than histogram + band pixels", over_budget,
                                  frames));
  if (o.pass)
    o.detail = fmt("320x256 p50 %.1f ms, p95 %.1f ms on this host (desktop proxy, not an embedded SoC); "
                   "pixel budget held on %zu frames",
                   p.p50, p.p95, frames);
  return o;
}

// ---- 10 ----
Outcome determinism(unsigned threads) {
  Outcome o;
  for (const char* name : {"textured_smoke.json", "nominal_circle.json"}) {
    json doc = load_config_doc(kConfigs / name);
    doc["duration_s"] = 10;
    const RunArtifacts a = run_config(doc, {}, std::nullopt, 1);
    const RunArtifacts b = run_config(doc, {}, std::nullopt, std::max(2u, threads));
    o.require(!a.log.empty() && a.log == b.log, std::string(name) + ": logs differ");
    o.require(a.report_json.dump() == b.report_json.dump(), std::string(name) + ": reports differ");
  }
  if (o.pass) o.detail = "two scenarios, runs with 1 and several workers are byte-identical";
  return o;
}

}  // namespace

int main() {
  const unsigned threads = thread_cap();
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all{
      {1, "Otsu oracle equivalence", otsu_equivalence},
      {2, "morphology laws", morphology_laws},
      {3, "RDP deviation bound", rdp_bound},
      {4, "wire round-trip and CRC", wire_roundtrip},
      {5, "mission state machine conformance", mission_conformance},
      {6, "end-to-end geometric fidelity", nominal_fidelity},
      {7, "fusion ablation direction", [&] { return ablation_direction(threads); }},
      {8, "sensitivity monotonicity", [&] { return sensitivity(threads); }},
      {9, "latency envelope", latency_envelope},
      {10, "determinism", [&] { return determinism(threads); }},
  };
  int failed = 0;
  for (const auto& c : all) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
