#include "ember/simplify.hpp"

#include <algorithm>
#include <numbers>

namespace ember {

void validate(const SimplifyConfig& cfg) {
  if (!(cfg.k > 0.0)) throw Error(ErrorCode::InvalidArgument, "simplify k must be positive");
  if (cfg.k_max_vertices < 2) throw Error(ErrorCode::InvalidArgument, "k_max_vertices must be >= 2");
  if (!(cfg.theta_min_deg > 0.0 && cfg.theta_min_deg < 180.0))
    throw Error(ErrorCode::InvalidArgument, "theta_min_deg must lie in (0, 180)");
  if (!(cfg.alpha_smooth > 0.0 && cfg.alpha_smooth <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "alpha_smooth must lie in (0, 1]");
  if (cfg.l_min_gsd < 0.0) throw Error(ErrorCode::InvalidArgument, "l_min_gsd must be >= 0");
}

namespace {

// Marks RDP survivors strictly between lo and hi; both ends must already be kept.
// Indices are taken modulo n so a closed chain can be walked across its seam.
void rdp_span(const Polyline& p, std::size_t lo, std::size_t hi, double eps,
              std::vector<char>& keep) {
  const std::size_t n = p.size();
  std::vector<std::pair<std::size_t, std::size_t>> stack{{lo, hi}};
  while (!stack.empty()) {
    const auto [a, b] = stack.back();
    stack.pop_back();
    if (b <= a + 1) continue;
    const Vec2 pa = p[a % n], pb = p[b % n];
    double best = -1.0;
    std::size_t arg = a;
    for (std::size_t i = a + 1; i < b; ++i) {
      const double d = point_segment_distance(p[i % n], pa, pb);
      if (d > best) {
        best = d;
        arg = i;
      }
    }
    if (best > eps) {
      keep[arg % n] = 1;
      stack.push_back({arg, b});
      stack.push_back({a, arg});
    }
  }
}

}  // namespace

std::vector<std::size_t> rdp_indices(const Polyline& points, double eps_m, bool closed) {
  const std::size_t n = points.size();
  if (n < 2) throw Error(ErrorCode::TooFewPoints, "RDP needs at least two points");
  if (eps_m < 0.0) throw Error(ErrorCode::InvalidArgument, "RDP tolerance must be >= 0");
  std::vector<char> keep(n, 0);
  if (!closed || n < 3) {
    keep[0] = keep[n - 1] = 1;
    rdp_span(points, 0, n - 1, eps_m, keep);
  } else {
    std::size_t bi = 0, bj = 1;
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double d = dist(points[i], points[j]);
        if (d > best) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    keep[bi] = keep[bj] = 1;
    rdp_span(points, bi, bj, eps_m, keep);
    rdp_span(points, bj, bi + n, eps_m, keep);
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i)
    if (keep[i]) out.push_back(i);
  return out;
}

Polyline rdp(const Polyline& points, double eps_m, bool closed) {
  Polyline out;
  for (std::size_t i : rdp_indices(points, eps_m, closed)) out.push_back(points[i]);
  return out;
}

double turn_angle_deg(Vec2 a, Vec2 b, Vec2 c) {
  const Vec2 u = b - a, v = c - b;
  const double nu = norm(u), nv = norm(v);
  if (nu <= 0.0 || nv <= 0.0) return 0.0;
  const double cosv = std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
  return std::acos(cosv) * 180.0 / std::numbers::pi;
}

std::vector<std::size_t> constrain_indices(const Polyline& ref, std::vector<std::size_t> v,
                                           const ConstraintParams& params) {
  auto chord_ok = [&](std::size_t a, std::size_t b) {
    for (std::size_t i = a + 1; i < b; ++i)
      if (point_segment_distance(ref[i], ref[a], ref[b]) > params.tolerance_m) return false;
    return true;
  };
  auto len = [&](std::size_t i, std::size_t j) { return dist(ref[v[i]], ref[v[j]]); };
  const double lmin = params.l_min_m;

  // Short segments: drop vertices whose incident segments are both short.
  for (std::size_t i = 1; i + 1 < v.size();) {
    if (len(i - 1, i) < lmin && len(i, i + 1) < lmin && chord_ok(v[i - 1], v[i + 1]))
      v.erase(v.begin() + static_cast<std::ptrdiff_t>(i));
    else
      ++i;
  }
  while (v.size() > 2 && len(v.size() - 2, v.size() - 1) < lmin &&
         chord_ok(v[v.size() - 3], v.back()))
    v.erase(v.end() - 2);
  while (v.size() > 2 && len(0, 1) < lmin && chord_ok(v[0], v[2])) v.erase(v.begin() + 1);

  // Near-straight turns, subject to the same veto.
  for (std::size_t i = 1; i + 1 < v.size();) {
    if (turn_angle_deg(ref[v[i - 1]], ref[v[i]], ref[v[i + 1]]) < params.theta_min_deg &&
        chord_ok(v[i - 1], v[i + 1]))
      v.erase(v.begin() + static_cast<std::ptrdiff_t>(i));
    else
      ++i;
  }
  return v;
}

Polyline enforce_constraints(const Polyline& points, const ConstraintParams& params) {
  if (points.size() < 2) throw Error(ErrorCode::TooFewPoints, "constraints need two points");
  std::vector<std::size_t> all(points.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  Polyline out;
  for (std::size_t i : constrain_indices(points, std::move(all), params)) out.push_back(points[i]);
  return out;
}

Polyline smooth_vertices(const std::optional<GuidancePolyline>& prev, const Polyline& cur,
                         double alpha, bool cur_closed, double gate_m) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "smoothing alpha must lie in (0, 1]");
  if (!prev || prev->vertices.size() < 2 || cur.size() < 2 || alpha == 1.0 ||
      prev->closed != cur_closed)
    return cur;
  const double total_cur = polyline_length(cur, cur_closed);
  const double total_prev = polyline_length(prev->vertices, prev->closed);
  if (total_cur <= 0.0 || total_prev <= 0.0) return cur;

  Polyline matched;
  matched.reserve(cur.size());
  double s = 0.0;
  for (std::size_t i = 0; i < cur.size(); ++i) {
    if (i > 0) s += dist(cur[i - 1], cur[i]);
    const Vec2 q = point_at_arclength(prev->vertices, s / total_cur * total_prev, prev->closed);
    if (dist(q, cur[i]) > gate_m) return cur;
    matched.push_back(q);
  }
  Polyline out(cur.size());
  for (std::size_t i = 0; i < cur.size(); ++i)
    out[i] = (1.0 - alpha) * matched[i] + alpha * cur[i];
  return out;
}

Polyline cap_vertices(const Polyline& points, int k_max, double eps_start_m, bool closed) {
  if (k_max < 2) throw Error(ErrorCode::InvalidArgument, "vertex cap must be >= 2");
  if (static_cast<int>(points.size()) <= k_max) return points;
  double eps = eps_start_m;
  if (!(eps > 0.0)) {
    double extent = 0.0;
    for (const Vec2& q : points) extent = std::max(extent, dist(q, points.front()));
    eps = 1e-6 * std::max(1.0, extent);
  }
  for (;;) {
    eps *= 2.0;
    Polyline r = rdp(points, eps, closed);
    if (static_cast<int>(r.size()) <= k_max) return r;
  }
}

Polyline pixel_to_world(const std::vector<Pixel>& chain, Vec2 origin, double gsd) {
  if (!(gsd > 0.0)) throw Error(ErrorCode::InvalidArgument, "gsd must be positive");
  Polyline out;
  out.reserve(chain.size());
  for (Pixel p : chain) out.push_back({origin.x + gsd * p.x, origin.y + gsd * p.y});
  return out;
}

Pixel world_to_pixel(Vec2 p, Vec2 origin, double gsd) {
  return {static_cast<int>(std::lround((p.x - origin.x) / gsd)),
          static_cast<int>(std::lround((p.y - origin.y) / gsd))};
}

GuidancePolyline simplify_chain(const Polyline& dense, bool closed, const SimplifyConfig& cfg,
                                double gsd, std::uint64_t timestamp_us,
                                const std::optional<GuidancePolyline>& prev, bool use_rdp) {
  if (dense.size() < 2) throw Error(ErrorCode::TooFewPoints, "chain needs at least two points");
  const double eps = cfg.eps_m(gsd);
  const double eps_rdp = std::max(0.25 * eps, eps - cfg.quantization_allowance_px * gsd);

  GuidancePolyline out;
  out.closed = closed;
  out.timestamp_us = timestamp_us;
  out.gsd = gsd;
  out.eps_m = eps;
  if (!use_rdp) {
    out.vertices = cap_vertices(dense, cfg.k_max_vertices, 0.0, closed);
    return out;
  }
  auto idx = rdp_indices(dense, eps_rdp, closed);
  idx = constrain_indices(dense, std::move(idx),
                          ConstraintParams{cfg.l_min_m(gsd), cfg.theta_min_deg, eps_rdp});
  Polyline pts;
  pts.reserve(idx.size());
  for (std::size_t i : idx) pts.push_back(dense[i]);
  Polyline smoothed = smooth_vertices(prev, pts, cfg.alpha_smooth, closed, cfg.smooth_gate_gsd * gsd);
  // Blending toward the older polyline may cut corners; keep it only while it
  // stays within the simplification tolerance of this frame's chain.
  if (smoothed != pts && directed_hausdorff(smoothed, dense, 0.5 * gsd, closed, closed) <= eps_rdp)
    pts = std::move(smoothed);
  out.vertices = cap_vertices(pts, cfg.k_max_vertices, eps_rdp, closed);
  return out;
}

}  // namespace ember
