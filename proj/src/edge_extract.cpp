#include "ember/edge_extract.hpp"

#include <algorithm>
#include <deque>
#include <numbers>

namespace ember {

GradientField sobel_gradients(const Frame& lum, const BitGrid* region) {
  const int w = lum.width(), h = lum.height();
  if (w < 3 || h < 3) throw Error(ErrorCode::FrameTooSmall, "Sobel needs at least 3x3 pixels");
  if (region) require_same_shape(lum.pixels, *region, "sobel_gradients");

  GradientField g{Grid<float>(w, h), Grid<float>(w, h), Grid<float>(w, h), Grid<float>(w, h)};
  const auto& I = lum.pixels;
  auto eval = [&](int x, int y) {
    const bool interior = x > 0 && y > 0 && x < w - 1 && y < h - 1;
    auto at = [&](int xx, int yy) -> double {
      return interior ? I(xx, yy) : I.clamped(xx, yy);
    };
    const double a = at(x - 1, y - 1), b = at(x, y - 1), c = at(x + 1, y - 1);
    const double d = at(x - 1, y), f = at(x + 1, y);
    const double p = at(x - 1, y + 1), q = at(x, y + 1), r = at(x + 1, y + 1);
    const double gx = (c + 2.0 * f + r) - (a + 2.0 * d + p);
    const double gy = (p + 2.0 * q + r) - (a + 2.0 * b + c);
    g.gx(x, y) = static_cast<float>(gx);
    g.gy(x, y) = static_cast<float>(gy);
    g.magnitude(x, y) = static_cast<float>(std::sqrt(gx * gx + gy * gy));
    g.direction(x, y) = static_cast<float>(std::atan2(gy, gx));
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (!region || (*region)(x, y)) eval(x, y);
  return g;
}

BitGrid mask_boundary(const BitGrid& mask, bool outside_is_background) {
  const int w = mask.width(), h = mask.height();
  BitGrid out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask(x, y)) continue;
      bool edge = false;
      for (int dy = -1; dy <= 1 && !edge; ++dy)
        for (int dx = -1; dx <= 1 && !edge; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int nx = x + dx, ny = y + dy;
          if (!mask.in_bounds(nx, ny)) edge = outside_is_background;
          else edge = !mask(nx, ny);
        }
      out(x, y) = edge ? 1 : 0;
    }
  }
  return out;
}

BandRegion band_from_mask(const HotspotMask& mask, double d_g_m, double gsd) {
  if (!(d_g_m > 0.0)) throw Error(ErrorCode::InvalidArgument, "band distance must be positive");
  if (!(gsd > 0.0)) throw Error(ErrorCode::InvalidArgument, "gsd must be positive");
  const BitGrid boundary = mask_boundary(mask.bits, true);
  BandRegion band;
  band.empty = count_set(boundary) == 0;
  const int r = static_cast<int>(std::lround(d_g_m / gsd));
  band.bits = band.empty ? BitGrid(mask.bits.width(), mask.bits.height()) : dilate(boundary, r);
  return band;
}

namespace {

// Neighbour offset along the quantized gradient direction.
Pixel direction_step(float dir) {
  double deg = static_cast<double>(dir) * 180.0 / std::numbers::pi;
  if (deg < 0.0) deg += 180.0;
  if (deg >= 180.0) deg -= 180.0;
  if (deg < 22.5 || deg >= 157.5) return {1, 0};
  if (deg < 67.5) return {1, 1};
  if (deg < 112.5) return {0, 1};
  return {-1, 1};
}

}  // namespace

Grid<float> non_max_suppress(const GradientField& g, const BitGrid* region) {
  const auto& m = g.magnitude;
  const int w = m.width(), h = m.height();
  Grid<float> out(w, h, 0.0f);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (region && !(*region)(x, y)) continue;
      const float v = m(x, y);
      if (!(v > 0.0f)) continue;
      const Pixel s = direction_step(g.direction(x, y));
      const float a = m.clamped(x + s.x, y + s.y);
      const float b = m.clamped(x - s.x, y - s.y);
      if (v >= a && v >= b) out(x, y) = v;
    }
  }
  return out;
}

EdgeMap hysteresis(const Grid<float>& thinned, HysteresisThresholds t) {
  if (!(t.low > 0.0 && t.low < t.high && t.high <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "hysteresis needs 0 < low < high <= 1");
  const int w = thinned.width(), h = thinned.height();
  EdgeMap e{BitGrid(w, h), Grid<float>(w, h, 0.0f)};
  float max_mag = 0.0f;
  for (float v : thinned.data()) max_mag = std::max(max_mag, v);
  if (!(max_mag > 0.0f)) return e;

  const double lo = t.low * max_mag, hi = t.high * max_mag;
  std::deque<Pixel> queue;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (thinned(x, y) >= hi) {
        e.bits(x, y) = 1;
        queue.push_back({x, y});
      }
  while (!queue.empty()) {
    const Pixel p = queue.front();
    queue.pop_front();
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = p.x + dx, ny = p.y + dy;
        if (!thinned.in_bounds(nx, ny) || e.bits(nx, ny)) continue;
        if (thinned(nx, ny) >= lo) {
          e.bits(nx, ny) = 1;
          queue.push_back({nx, ny});
        }
      }
  }
  for (std::size_t i = 0; i < e.bits.size(); ++i)
    if (e.bits[i]) e.confidence[i] = thinned[i] / max_mag;
  return e;
}

double direction_coherence(const EdgeMap& e, const GradientField& g, int x, int y, int window) {
  const int half = window / 2;
  double sc = 0.0, ss = 0.0;
  int count = 0;
  for (int yy = y - half; yy <= y + half; ++yy)
    for (int xx = x - half; xx <= x + half; ++xx) {
      if (!e.bits.in_bounds(xx, yy) || !e.bits(xx, yy)) continue;
      const double a = 2.0 * g.direction(xx, yy);
      sc += std::cos(a);
      ss += std::sin(a);
      ++count;
    }
  return count == 0 ? 0.0 : std::hypot(sc, ss) / count;
}

EdgeMap texture_suppress(const EdgeMap& e, const GradientField& g, int window,
                         double coherence_min) {
  if (window < 3 || window % 2 == 0)
    throw Error(ErrorCode::InvalidArgument, "coherence window must be odd and >= 3");
  require_same_shape(e.bits, g.direction, "texture_suppress");
  EdgeMap out = e;
  const int w = e.bits.width(), h = e.bits.height();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!e.bits(x, y)) continue;
      if (direction_coherence(e, g, x, y, window) < coherence_min) {
        out.bits(x, y) = 0;
        out.confidence(x, y) = 0.0f;
      }
    }
  return out;
}

}  // namespace ember
