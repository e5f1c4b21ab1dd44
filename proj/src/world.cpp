#include <algorithm>
#include <numbers>

#include "ember/sim.hpp"

namespace ember {

FireFront make_circle_front(Vec2 center, double radius, double spacing, double base_rate,
                            double wind_dir, double wind_gain) {
  if (!(radius > 0.0) || !(spacing > 0.0))
    throw Error(ErrorCode::InvalidArgument, "circle front needs positive radius and spacing");
  if (base_rate < 0.0 || wind_gain < 0.0)
    throw Error(ErrorCode::InvalidArgument, "spread rate and wind gain must be >= 0");
  const int n = std::max(16, static_cast<int>(std::ceil(2.0 * std::numbers::pi * radius / spacing)));
  FireFront f;
  f.base_rate = base_rate;
  f.wind_dir = wind_dir;
  f.wind_gain = wind_gain;
  f.spacing = 2.0 * std::numbers::pi * radius / n;
  f.boundary.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * i / n;
    f.boundary.push_back({center.x + radius * std::cos(a), center.y + radius * std::sin(a)});
  }
  return f;
}

double spread_rate(const FireFront& f, double normal_angle) {
  return f.base_rate * (1.0 + f.wind_gain * std::max(0.0, std::cos(normal_angle - f.wind_dir)));
}

namespace {

Vec2 catmull_rom(Vec2 p0, Vec2 p1, Vec2 p2, Vec2 p3, double u) {
  const double u2 = u * u, u3 = u2 * u;
  return 0.5 * ((2.0 * p1) + u * (p2 - p0) + u2 * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) +
                u3 * (-1.0 * p0 + 3.0 * p1 - 3.0 * p2 + p3));
}

Polyline respace(const Polyline& q, double s) {
  Polyline merged;
  merged.reserve(q.size());
  for (const Vec2& p : q)
    if (merged.empty() || dist(merged.back(), p) >= s) merged.push_back(p);
  while (merged.size() > 3 && dist(merged.back(), merged.front()) < s) merged.pop_back();

  const std::size_t n = merged.size();
  Polyline out;
  out.reserve(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 p0 = merged[(i + n - 1) % n], p1 = merged[i], p2 = merged[(i + 1) % n],
               p3 = merged[(i + 2) % n];
    out.push_back(p1);
    const double len = dist(p1, p2);
    if (len > 2.0 * s) {
      const int k = static_cast<int>(std::ceil(len / (2.0 * s)));
      for (int j = 1; j < k; ++j) out.push_back(catmull_rom(p0, p1, p2, p3, static_cast<double>(j) / k));
    }
  }
  return out;
}

bool segment_intersection(Vec2 a, Vec2 b, Vec2 c, Vec2 d, Vec2& x) {
  const Vec2 r = b - a, s = d - c;
  const double den = cross(r, s);
  if (den == 0.0) return false;
  const double t = cross(c - a, s) / den, u = cross(c - a, r) / den;
  if (t < 0.0 || t > 1.0 || u < 0.0 || u > 1.0) return false;
  x = a + t * r;
  return true;
}

// Cuts self-intersection loops, keeping the larger-area side each time.
Polyline remove_loops(Polyline p) {
  for (int guard = 0; guard < 1000; ++guard) {
    const std::size_t n = p.size();
    if (n < 4) return p;
    bool found = false;
    for (std::size_t i = 0; i < n && !found; ++i) {
      const Vec2 a = p[i], b = p[(i + 1) % n];
      const double ax0 = std::min(a.x, b.x), ax1 = std::max(a.x, b.x);
      const double ay0 = std::min(a.y, b.y), ay1 = std::max(a.y, b.y);
      for (std::size_t j = i + 2; j < n; ++j) {
        if (i == 0 && j == n - 1) continue;
        const Vec2 c = p[j], d = p[(j + 1) % n];
        if (std::max(c.x, d.x) < ax0 || std::min(c.x, d.x) > ax1 || std::max(c.y, d.y) < ay0 ||
            std::min(c.y, d.y) > ay1)
          continue;
        Vec2 x;
        if (!segment_intersection(a, b, c, d, x)) continue;
        Polyline inner{x}, outer;
        for (std::size_t k = i + 1; k <= j; ++k) inner.push_back(p[k]);
        for (std::size_t k = 0; k <= i; ++k) outer.push_back(p[k]);
        outer.push_back(x);
        for (std::size_t k = j + 1; k < n; ++k) outer.push_back(p[k]);
        p = std::abs(signed_area(inner)) > std::abs(signed_area(outer)) ? inner : outer;
        found = true;
        break;
      }
    }
    if (!found) return p;
  }
  return p;
}

}  // namespace

FireFront step_front(const FireFront& f, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "front step needs dt > 0");
  const std::size_t n = f.boundary.size();
  if (n < 3 || !(signed_area(f.boundary) > 0.0))
    throw Error(ErrorCode::DegeneratePolygon, "front must be a counterclockwise polygon");
  Polyline moved(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 t = f.boundary[(i + 1) % n] - f.boundary[(i + n - 1) % n];
    const double len = norm(t);
    if (len <= 0.0) throw Error(ErrorCode::DegeneratePolygon, "front has coincident vertices");
    const Vec2 normal{t.y / len, -t.x / len};
    moved[i] = f.boundary[i] + (dt * spread_rate(f, std::atan2(normal.y, normal.x))) * normal;
  }
  FireFront out = f;
  out.boundary = remove_loops(respace(moved, f.spacing));
  if (out.boundary.size() < 3 || !(signed_area(out.boundary) > 0.0))
    throw Error(ErrorCode::DegeneratePolygon, "front collapsed during resampling");
  return out;
}

Camera camera_at(Vec2 position, const SensorConfig& s) {
  Camera c;
  c.width = s.width;
  c.height = s.height;
  c.gsd = s.gsd;
  c.origin_px = {static_cast<int>(std::lround(position.x / s.gsd - 0.5 * (s.width - 1))),
                 static_cast<int>(std::lround(position.y / s.gsd - 0.5 * (s.height - 1)))};
  return c;
}

Grid<float> front_coverage(const FireFront& f, const Camera& cam, double falloff_width_m) {
  const int w = cam.width, h = cam.height;
  const double g = cam.gsd;
  Grid<float> cov(w, h);
  const Polyline& p = f.boundary;
  const std::size_t n = p.size();
  if (n < 3) return cov;

  std::vector<double> xs;
  for (int y = 0; y < h; ++y) {
    const double yw = g * (cam.origin_px.y + y);
    xs.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 a = p[i], b = p[(i + 1) % n];
      if ((a.y > yw) != (b.y > yw)) xs.push_back(a.x + (yw - a.y) * (b.x - a.x) / (b.y - a.y));
    }
    std::sort(xs.begin(), xs.end());
    std::size_t k = 0;
    for (int x = 0; x < w; ++x) {
      const double xw = g * (cam.origin_px.x + x);
      while (k < xs.size() && xs[k] < xw) ++k;
      cov(x, y) = (k % 2 == 1) ? 1.0f : 0.0f;
    }
  }

  if (!(falloff_width_m > 0.0)) return cov;
  const double scale = falloff_width_m / (2.0 * std::log(9.0));
  const double reach = 2.5 * falloff_width_m;
  constexpr int kCell = 8;
  const int cw = (w + kCell - 1) / kCell, ch = (h + kCell - 1) / kCell;
  std::vector<std::vector<std::size_t>> buckets(static_cast<std::size_t>(cw * ch));
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = p[i], b = p[(i + 1) % n];
    const int x0 = static_cast<int>(std::floor((std::min(a.x, b.x) - reach) / g)) - cam.origin_px.x;
    const int x1 = static_cast<int>(std::ceil((std::max(a.x, b.x) + reach) / g)) - cam.origin_px.x;
    const int y0 = static_cast<int>(std::floor((std::min(a.y, b.y) - reach) / g)) - cam.origin_px.y;
    const int y1 = static_cast<int>(std::ceil((std::max(a.y, b.y) + reach) / g)) - cam.origin_px.y;
    if (x1 < 0 || y1 < 0 || x0 >= w || y0 >= h) continue;
    for (int cy = std::max(0, y0) / kCell; cy <= std::min(h - 1, y1) / kCell; ++cy)
      for (int cx = std::max(0, x0) / kCell; cx <= std::min(w - 1, x1) / kCell; ++cx)
        buckets[static_cast<std::size_t>(cy * cw + cx)].push_back(i);
  }
  for (int cy = 0; cy < ch; ++cy)
    for (int cx = 0; cx < cw; ++cx) {
      const auto& segs = buckets[static_cast<std::size_t>(cy * cw + cx)];
      if (segs.empty()) continue;
      for (int y = cy * kCell; y < std::min(h, (cy + 1) * kCell); ++y)
        for (int x = cx * kCell; x < std::min(w, (cx + 1) * kCell); ++x) {
          const Vec2 q = cam.pixel_center(x, y);
          double d = std::numeric_limits<double>::infinity();
          for (std::size_t i : segs) d = std::min(d, point_segment_distance(q, p[i], p[(i + 1) % n]));
          if (d >= reach) continue;
          const double sd = cov(x, y) > 0.5f ? d : -d;
          cov(x, y) = static_cast<float>(1.0 / (1.0 + std::exp(-sd / scale)));
        }
    }
  return cov;
}

Grid<std::uint16_t> render_thermal(const FireFront& f, const Camera& cam, const ThermalRender& cfg,
                                   double saturation_frac, std::uint64_t seed) {
  const Grid<float> cov = front_coverage(f, cam, cfg.falloff_gsd * cam.gsd);
  Rng rng(seed);
  Grid<double> counts(cam.width, cam.height);
  std::vector<std::size_t> inside;
  for (std::size_t i = 0; i < cov.size(); ++i) {
    double v = cfg.ambient + (cfg.hot - cfg.ambient) * cov[i];
    if (cfg.noise_sigma > 0.0) v += rng.gaussian(0.0, cfg.noise_sigma);
    counts[i] = v;
    if (cov[i] >= 0.5f) inside.push_back(i);
  }
  if (saturation_frac > 0.0 && !inside.empty()) {
    const auto m = std::min(inside.size(), static_cast<std::size_t>(std::ceil(
                                               saturation_frac * static_cast<double>(inside.size()) - 1e-9)));
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(inside.size() - i));
      std::swap(inside[i], inside[j]);
      counts[inside[i]] = cfg.max_count;
    }
  }
  Grid<std::uint16_t> out(cam.width, cam.height);
  for (std::size_t i = 0; i < counts.size(); ++i)
    out[i] = static_cast<std::uint16_t>(std::lround(std::clamp(counts[i], 0.0, cfg.max_count)));
  return out;
}

std::vector<Distractor> make_distractors(const RgbRender& cfg, double world_size, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Distractor> out;
  for (int i = 0; i < cfg.distractor_count; ++i) {
    Distractor d;
    d.center = {rng.uniform(0.0, world_size), rng.uniform(0.0, world_size)};
    d.angle = rng.uniform(0.0, std::numbers::pi);
    d.length = cfg.distractor_length_m;
    d.width = cfg.distractor_width_m;
    out.push_back(d);
  }
  return out;
}

namespace {

double lattice(std::int64_t i, std::int64_t j, std::uint64_t seed) {
  const std::uint64_t h = mix_seed(seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j));
  return static_cast<double>(h >> 11) * 0x1.0p-52 - 1.0;
}

double value_noise(Vec2 q, double scale, std::uint64_t seed) {
  const double gx = q.x / scale, gy = q.y / scale;
  const double fx = std::floor(gx), fy = std::floor(gy);
  const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy);
  auto smooth = [](double t) { return t * t * (3.0 - 2.0 * t); };
  const double u = smooth(gx - fx), v = smooth(gy - fy);
  const double a = lattice(ix, iy, seed), b = lattice(ix + 1, iy, seed);
  const double c = lattice(ix, iy + 1, seed), d = lattice(ix + 1, iy + 1, seed);
  return (a * (1 - u) + b * u) * (1 - v) + (c * (1 - u) + d * u) * v;
}

}  // namespace

Grid<std::uint16_t> render_rgb(const FireFront& f, const Camera& cam, const RgbRender& cfg,
                               double smoke, const std::vector<Distractor>& distractors,
                               std::uint64_t texture_seed, std::uint64_t noise_seed) {
  const int w = cam.width, h = cam.height;
  const Grid<float> cov = front_coverage(f, cam, cfg.falloff_gsd * cam.gsd);
  Grid<double> detail(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double v = -cfg.step_amplitude * cov(x, y);
      if (cfg.texture_amplitude > 0.0)
        v += cfg.texture_amplitude * value_noise(cam.pixel_center(x, y), cfg.texture_scale_m, texture_seed);
      detail(x, y) = v;
    }
  const Rect fp = cam.footprint();
  for (const Distractor& d : distractors) {
    const double r = 0.5 * std::hypot(d.length, d.width);
    if (d.center.x + r < fp.x0 || d.center.x - r > fp.x1 || d.center.y + r < fp.y0 || d.center.y - r > fp.y1)
      continue;
    const Vec2 u{std::cos(d.angle), std::sin(d.angle)}, nrm{-u.y, u.x};
    const int x0 = std::max(0, static_cast<int>(std::floor((d.center.x - r) / cam.gsd)) - cam.origin_px.x);
    const int x1 = std::min(w - 1, static_cast<int>(std::ceil((d.center.x + r) / cam.gsd)) - cam.origin_px.x);
    const int y0 = std::max(0, static_cast<int>(std::floor((d.center.y - r) / cam.gsd)) - cam.origin_px.y);
    const int y1 = std::min(h - 1, static_cast<int>(std::ceil((d.center.y + r) / cam.gsd)) - cam.origin_px.y);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const Vec2 q = cam.pixel_center(x, y) - d.center;
        if (std::abs(dot(q, u)) <= 0.5 * d.length && std::abs(dot(q, nrm)) <= 0.5 * d.width)
          detail(x, y) += cfg.distractor_amplitude;
      }
  }
  Rng rng(noise_seed);
  const double contrast = 1.0 - smoke;
  Grid<std::uint16_t> out(w, h);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double v = cfg.base + contrast * detail[i];
    if (cfg.noise_sigma > 0.0) v += rng.gaussian(0.0, cfg.noise_sigma);
    out[i] = static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
  }
  return out;
}

std::optional<Vec2> gps_read(int uav, Vec2 truth, const std::vector<GpsOutage>& outages, double t,
                             double noise_m, Rng& rng) {
  for (const auto& o : outages)
    if (o.uav == uav && t >= o.start_s && t < o.end_s) return std::nullopt;
  if (noise_m <= 0.0) return truth;
  const double nx = rng.gaussian(0.0, noise_m);
  const double ny = rng.gaussian(0.0, noise_m);
  return Vec2{truth.x + nx, truth.y + ny};
}

}  // namespace ember
