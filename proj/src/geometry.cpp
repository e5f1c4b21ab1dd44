#include "ember/geometry.hpp"

#include <algorithm>
#include <limits>

namespace ember {

namespace {

std::size_t segment_count(const Polyline& p, bool closed) {
  if (p.size() < 2) return 0;
  return closed ? p.size() : p.size() - 1;
}

Vec2 seg_end(const Polyline& p, std::size_t i) { return p[(i + 1) % p.size()]; }

}  // namespace

double polyline_length(const Polyline& p, bool closed) {
  double len = 0.0;
  const std::size_t n = segment_count(p, closed);
  for (std::size_t i = 0; i < n; ++i) len += dist(p[i], seg_end(p, i));
  return len;
}

double point_polyline_distance(Vec2 q, const Polyline& p, bool closed) {
  if (p.empty()) return std::numeric_limits<double>::infinity();
  if (p.size() == 1) return dist(q, p.front());
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = segment_count(p, closed);
  for (std::size_t i = 0; i < n; ++i) best = std::min(best, point_segment_distance(q, p[i], seg_end(p, i)));
  return best;
}

Vec2 point_at_arclength(const Polyline& p, double s, bool closed) {
  if (p.empty()) return {};
  if (p.size() == 1) return p.front();
  const double total = polyline_length(p, closed);
  if (total <= 0.0) return p.front();
  if (closed) {
    s = std::fmod(s, total);
    if (s < 0.0) s += total;
  } else {
    s = std::clamp(s, 0.0, total);
  }
  const std::size_t n = segment_count(p, closed);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = p[i], b = seg_end(p, i);
    const double l = dist(a, b);
    if (s <= l || i + 1 == n) {
      const double t = l > 0.0 ? std::clamp(s / l, 0.0, 1.0) : 0.0;
      return a + t * (b - a);
    }
    s -= l;
  }
  return p.back();
}

Vec2 tangent_at_arclength(const Polyline& p, double s, bool closed) {
  if (p.size() < 2) return {1.0, 0.0};
  const double total = polyline_length(p, closed);
  if (closed && total > 0.0) {
    s = std::fmod(s, total);
    if (s < 0.0) s += total;
  } else {
    s = std::clamp(s, 0.0, total);
  }
  const std::size_t n = segment_count(p, closed);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = p[i], b = seg_end(p, i);
    const double l = dist(a, b);
    if ((s <= l || i + 1 == n) && l > 0.0) return (1.0 / l) * (b - a);
    s -= l;
  }
  return {1.0, 0.0};
}

Polyline resample_uniform(const Polyline& p, int n, bool closed) {
  Polyline out;
  if (p.empty() || n <= 0) return out;
  const double total = polyline_length(p, closed);
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double frac = closed ? static_cast<double>(i) / n
                               : (n == 1 ? 0.0 : static_cast<double>(i) / (n - 1));
    out.push_back(point_at_arclength(p, frac * total, closed));
  }
  return out;
}

double directed_hausdorff(const Polyline& a, const Polyline& b, double step, bool a_closed,
                          bool b_closed) {
  if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  auto visit = [&](Vec2 q) { worst = std::max(worst, point_polyline_distance(q, b, b_closed)); };
  if (a.size() == 1) {
    visit(a.front());
    return worst;
  }
  const std::size_t n = segment_count(a, a_closed);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 p0 = a[i], p1 = seg_end(a, i);
    const int k = std::max(1, static_cast<int>(std::ceil(dist(p0, p1) / step)));
    for (int j = 0; j < k; ++j) visit(p0 + (static_cast<double>(j) / k) * (p1 - p0));
  }
  if (!a_closed) visit(a.back());
  return worst;
}

double hausdorff(const Polyline& a, const Polyline& b, double step, bool a_closed, bool b_closed) {
  return std::max(directed_hausdorff(a, b, step, a_closed, b_closed),
                  directed_hausdorff(b, a, step, b_closed, a_closed));
}

double signed_area(const Polyline& polygon) {
  double s = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i) s += cross(polygon[i], seg_end(polygon, i));
  return 0.5 * s;
}

bool point_in_polygon(Vec2 q, const Polyline& polygon) {
  bool inside = false;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = polygon[i], b = polygon[j];
    if ((a.y > q.y) != (b.y > q.y)) {
      const double xc = a.x + (q.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (q.x < xc) inside = !inside;
    }
  }
  return inside;
}

bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  auto orient = [](Vec2 p, Vec2 q, Vec2 r) {
    const double v = cross(q - p, r - p);
    return (v > 0.0) - (v < 0.0);
  };
  auto on_seg = [](Vec2 p, Vec2 q, Vec2 r) {
    return std::min(p.x, r.x) <= q.x && q.x <= std::max(p.x, r.x) && std::min(p.y, r.y) <= q.y &&
           q.y <= std::max(p.y, r.y);
  };
  const int o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_seg(a, c, b)) return true;
  if (o2 == 0 && on_seg(a, d, b)) return true;
  if (o3 == 0 && on_seg(c, a, d)) return true;
  if (o4 == 0 && on_seg(c, b, d)) return true;
  return false;
}

bool has_self_intersection(const Polyline& polygon) {
  const std::size_t n = polygon.size();
  if (n < 4) return false;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;  // adjacent through the closing edge
      if (segments_intersect(polygon[i], seg_end(polygon, i), polygon[j], seg_end(polygon, j)))
        return true;
    }
  return false;
}

}  // namespace ember
