#include "ember/metrics.hpp"

#include <algorithm>
#include <complex>

#include "ember/thermal_mask.hpp"

namespace ember {

BitGrid rasterize_polyline(const Polyline& p, bool closed, Vec2 origin, double cell, int width,
                           int height) {
  BitGrid out(width, height);
  auto mark = [&](Vec2 q) {
    const int x = static_cast<int>(std::floor((q.x - origin.x) / cell));
    const int y = static_cast<int>(std::floor((q.y - origin.y) / cell));
    if (out.in_bounds(x, y)) out(x, y) = 1;
  };
  if (p.size() == 1) mark(p.front());
  const std::size_t segs = p.size() < 2 ? 0 : (closed ? p.size() : p.size() - 1);
  for (std::size_t i = 0; i < segs; ++i) {
    const Vec2 a = p[i], b = p[(i + 1) % p.size()];
    const int k = std::max(1, static_cast<int>(std::ceil(dist(a, b) / (0.25 * cell))));
    for (int j = 0; j <= k; ++j) mark(a + (static_cast<double>(j) / k) * (b - a));
  }
  return out;
}

double band_iou(const Polyline& pred, bool pred_closed, const Polyline& truth, bool truth_closed,
                double band_w_m, double grid_gsd, const std::vector<Rect>& footprints) {
  if (!(band_w_m > 0.0)) throw Error(ErrorCode::InvalidArgument, "band width must be positive");
  if (!(grid_gsd > 0.0)) throw Error(ErrorCode::InvalidArgument, "grid gsd must be positive");
  if (truth.empty()) throw Error(ErrorCode::EmptyTruth, "truth boundary is empty");
  const int r = static_cast<int>(std::lround(band_w_m / grid_gsd));

  Rect box;
  if (!footprints.empty()) {
    box = footprints.front();
    for (const Rect& f : footprints) {
      box.x0 = std::min(box.x0, f.x0);
      box.y0 = std::min(box.y0, f.y0);
      box.x1 = std::max(box.x1, f.x1);
      box.y1 = std::max(box.y1, f.y1);
    }
  } else {
    box = {truth[0].x, truth[0].y, truth[0].x, truth[0].y};
    for (const auto* poly : {&pred, &truth})
      for (Vec2 q : *poly) {
        box.x0 = std::min(box.x0, q.x);
        box.y0 = std::min(box.y0, q.y);
        box.x1 = std::max(box.x1, q.x);
        box.y1 = std::max(box.y1, q.y);
      }
    const double pad = (r + 2) * grid_gsd;
    box = {box.x0 - pad, box.y0 - pad, box.x1 + pad, box.y1 + pad};
  }
  const int w = std::max(1, static_cast<int>(std::ceil((box.x1 - box.x0) / grid_gsd - 1e-9)));
  const int h = std::max(1, static_cast<int>(std::ceil((box.y1 - box.y0) / grid_gsd - 1e-9)));
  const Vec2 origin{box.x0, box.y0};

  BitGrid a = rasterize_polyline(pred, pred_closed, origin, grid_gsd, w, h);
  BitGrid b = rasterize_polyline(truth, truth_closed, origin, grid_gsd, w, h);
  if (r > 0) {
    a = dilate(a, r);
    b = dilate(b, r);
  }
  if (!footprints.empty()) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const Vec2 c{origin.x + (x + 0.5) * grid_gsd, origin.y + (y + 0.5) * grid_gsd};
        const bool seen = std::any_of(footprints.begin(), footprints.end(),
                                      [&](const Rect& f) { return f.contains(c); });
        if (!seen) a(x, y) = b(x, y) = 0;
      }
  }
  std::size_t inter = 0, uni = 0, truth_cells = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += (a[i] && b[i]) ? 1 : 0;
    uni += (a[i] || b[i]) ? 1 : 0;
    truth_cells += b[i] ? 1 : 0;
  }
  if (truth_cells == 0) throw Error(ErrorCode::EmptyTruth, "no truth boundary inside the footprints");
  return static_cast<double>(inter) / static_cast<double>(uni);
}

JitterStats boundary_jitter(const std::vector<Polyline>& polys, bool closed, int samples) {
  if (polys.size() < 2) throw Error(ErrorCode::InvalidArgument, "jitter needs at least two polylines");
  if (samples < 1) throw Error(ErrorCode::InvalidArgument, "jitter needs at least one sample");
  double sq = 0.0, signed_sum = 0.0;
  std::complex<double> phase_sum = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 1; k < polys.size(); ++k) {
    const Polyline& older = polys[k - 1];
    const Polyline& newer = polys[k];
    if (older.empty() || newer.empty()) throw Error(ErrorCode::InvalidArgument, "jitter polyline is empty");
    const double ln = polyline_length(newer, closed), lo = polyline_length(older, closed);
    for (int i = 0; i < samples; ++i) {
      const double frac = closed ? static_cast<double>(i) / samples
                                 : (samples == 1 ? 0.0 : static_cast<double>(i) / (samples - 1));
      const Vec2 q = point_at_arclength(newer, frac * ln, closed);
      const double d = point_polyline_distance(q, older, closed);
      sq += d * d;
      const Vec2 qo = point_at_arclength(older, frac * lo, closed);
      const Vec2 to = tangent_at_arclength(older, frac * lo, closed);
      const Vec2 tn = tangent_at_arclength(newer, frac * ln, closed);
      signed_sum += (cross(to, q - qo) >= 0.0 ? d : -d);
      const double dpsi = std::atan2(tn.y, tn.x) - std::atan2(to.y, to.x);
      phase_sum += std::polar(1.0, dpsi);
      ++count;
    }
  }
  JitterStats s;
  s.jitter_rms_m = std::sqrt(sq / static_cast<double>(count));
  s.mean_signed_m = signed_sum / static_cast<double>(count);
  s.heading_var = std::max(0.0, 1.0 - std::abs(phase_sum) / static_cast<double>(count));
  if (s.heading_var < 1e-12) s.heading_var = 0.0;
  return s;
}

PathLength path_length(const std::vector<Vec2>& trace, double perimeter) {
  if (!(perimeter > 0.0)) throw Error(ErrorCode::InvalidArgument, "perimeter must be positive");
  PathLength out;
  for (std::size_t i = 1; i < trace.size(); ++i) out.meters += dist(trace[i - 1], trace[i]);
  out.normalized = out.meters / perimeter;
  return out;
}

double nearest_rank(std::vector<double> samples, double p) {
  if (samples.empty()) throw Error(ErrorCode::EmptySamples, "no samples");
  if (!(p > 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "percentile must lie in (0, 1]");
  const auto n = samples.size();
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n) - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(rank - 1), samples.end());
  return samples[rank - 1];
}

Percentiles latency_percentiles(std::vector<double> samples_ms) {
  if (samples_ms.empty()) throw Error(ErrorCode::EmptySamples, "no latency samples");
  return {nearest_rank(samples_ms, 0.50), nearest_rank(std::move(samples_ms), 0.95)};
}

double formation_rms(const std::vector<FormationTick>& ticks, const FormationSpec& spec) {
  double sq = 0.0;
  std::size_t n = 0;
  for (const auto& t : ticks)
    for (const auto& [id, p] : t.followers) {
      const auto it = spec.offsets.find(id);
      if (it == spec.offsets.end())
        throw Error(ErrorCode::InvalidArgument, "no formation offset for UAV " + std::to_string(id));
      const double e = dist(p, formation_target(t.leader, it->second));
      sq += e * e;
      ++n;
    }
  return n == 0 ? 0.0 : std::sqrt(sq / static_cast<double>(n));
}

}  // namespace ember
