#include "ember/pipeline.hpp"

#include <algorithm>
#include <chrono>

namespace ember {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::ThermalOnly: return "ThermalOnly";
    case Variant::RgbOnly: return "RgbOnly";
    case Variant::Fusion: return "Fusion";
    case Variant::FusionNoRdp: return "FusionNoRdp";
    case Variant::NaiveFollowEdge: return "NaiveFollowEdge";
    case Variant::CannyContours: return "CannyContours";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  for (Variant v : kAllVariants)
    if (name == to_string(v)) return v;
  throw Error(ErrorCode::InvalidArgument, "unknown variant '" + name + "'");
}

bool uses_rgb(Variant v) { return v != Variant::ThermalOnly; }

void validate(const PerceptionConfig& cfg) {
  if (!(cfg.clip.low >= 0.0 && cfg.clip.low < cfg.clip.high && cfg.clip.high <= 1.0))
    throw Error(ErrorCode::ConfigInvalid, "clip quantiles must satisfy 0 <= low < high <= 1");
  if (cfg.histogram_margin_px < 0) throw Error(ErrorCode::ConfigInvalid, "histogram_margin_px must be >= 0");
  if (cfg.levels < 2) throw Error(ErrorCode::ConfigInvalid, "levels must be >= 2");
  if (!(cfg.feature_scale_m > 0.0)) throw Error(ErrorCode::ConfigInvalid, "feature_scale_m must be positive");
  if (!(cfg.stabilizer_alpha > 0.0 && cfg.stabilizer_alpha <= 1.0))
    throw Error(ErrorCode::ConfigInvalid, "stabilizer_alpha must lie in (0, 1]");
  if (!(cfg.hysteresis.low > 0.0 && cfg.hysteresis.low < cfg.hysteresis.high && cfg.hysteresis.high <= 1.0))
    throw Error(ErrorCode::ConfigInvalid, "hysteresis thresholds must satisfy 0 < low < high <= 1");
  if (cfg.texture_window < 3 || cfg.texture_window % 2 == 0)
    throw Error(ErrorCode::ConfigInvalid, "texture_window must be odd and >= 3");
  if (!(cfg.coherence_min >= 0.0 && cfg.coherence_min <= 1.0))
    throw Error(ErrorCode::ConfigInvalid, "coherence_min must lie in [0, 1]");
  if (!(cfg.fallback_ratio >= 0.0)) throw Error(ErrorCode::ConfigInvalid, "fallback_ratio must be >= 0");
  try {
    validate(cfg.fusion);
    validate(cfg.simplify);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigInvalid, e.what());
  }
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point& t) {
  const auto now = Clock::now();
  const double ms = std::chrono::duration<double, std::milli>(now - t).count();
  t = now;
  return ms;
}

double mean_confidence(const PixelChain& c, const Grid<float>& conf) {
  if (c.vertices.empty()) return 0.0;
  double s = 0.0;
  for (Pixel p : c.vertices) s += conf(p.x, p.y);
  return s / static_cast<double>(c.vertices.size());
}

std::optional<PixelChain> longest(const RawPolylines& r) {
  for (const auto& c : r.chains)
    if (c.vertices.size() >= 2) return c;
  return std::nullopt;
}

RawPolylines thermal_chains(const HotspotMask& mask, std::uint64_t ts) {
  return polygonize(thin_lines(mask_boundary(mask.bits, false)), ts);
}

}  // namespace

PixelChain orient_hot_left(PixelChain chain, const BitGrid& mask) {
  const auto& v = chain.vertices;
  const std::size_t n = v.size();
  if (n < 2) return chain;
  long votes = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t a, b;
    if (chain.closed) {
      a = (i + n - 1) % n;
      b = (i + 1) % n;
    } else {
      a = i == 0 ? 0 : i - 1;
      b = i + 1 == n ? n - 1 : i + 1;
    }
    const Vec2 d{static_cast<double>(v[b].x - v[a].x), static_cast<double>(v[b].y - v[a].y)};
    const double len = norm(d);
    if (len <= 0.0) continue;
    const Vec2 left{-d.y / len, d.x / len};
    auto hot = [&](double sgn) {
      const int x = static_cast<int>(std::lround(v[i].x + sgn * 2.0 * left.x));
      const int y = static_cast<int>(std::lround(v[i].y + sgn * 2.0 * left.y));
      return mask.in_bounds(x, y) && mask(x, y) != 0;
    };
    votes += static_cast<long>(hot(1.0)) - static_cast<long>(hot(-1.0));
  }
  if (votes < 0) std::reverse(chain.vertices.begin(), chain.vertices.end());
  return chain;
}

Polyline decimate(const Polyline& p, int k_max) {
  if (k_max < 2) throw Error(ErrorCode::InvalidArgument, "vertex cap must be >= 2");
  const std::size_t n = p.size();
  const auto k = static_cast<std::size_t>(k_max);
  if (n <= k) return p;
  Polyline out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i)
    out.push_back(p[(i * (n - 1) + (k - 1) / 2) / (k - 1)]);
  return out;
}

PerceptionPipeline::PerceptionPipeline(PerceptionConfig cfg, Variant variant)
    : cfg_(std::move(cfg)),
      variant_(variant),
      stabilizer_(cfg_.stabilizer_alpha),
      cache_(cfg_.fusion.carry_frames) {
  validate(cfg_);
}

PerceptionResult PerceptionPipeline::process(const SensorInput& in) {
  PerceptionResult res;
  auto clock = Clock::now();
  const double gsd = in.gsd;
  const std::uint64_t ts = in.timestamp_us;

  // Sense
  const Frame thermal = normalize_thermal(in.thermal, cfg_.clip, ts, gsd);
  std::optional<Frame> lum;
  if (uses_rgb(variant_)) {
    if (!in.luminance) throw Error(ErrorCode::MissingPair, std::string(to_string(variant_)) + " needs a luminance frame");
    require_same_shape(in.thermal, *in.luminance, "thermal/luminance pair");
    lum = luminance_from_u16(*in.luminance, ts, gsd);
  }
  res.times.sense_ms = ms_since(clock);

  // Mask
  const int w = thermal.width(), h = thermal.height();
  const int margin = std::min({cfg_.histogram_margin_px, (w - 1) / 2, (h - 1) / 2});
  const Histogram hist = build_histogram(thermal, margin_crop(w, h, margin), cfg_.levels);
  res.histogram_pixels = hist.total_count;
  std::optional<double> t = stabilizer_.threshold();
  try {
    t = stabilizer_.update_threshold(otsu_threshold(hist).t_star);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateHistogram) throw;
  }
  HotspotMask raw = t ? binarize(thermal, *t, cfg_.levels) : HotspotMask{BitGrid(w, h), ts};
  const int r = struct_radius(gsd, cfg_.feature_scale_m);
  if (r >= 1) raw = morph_open_close(raw, r);
  const Pixel shift = last_origin_ ? Pixel{in.origin_px.x - last_origin_->x, in.origin_px.y - last_origin_->y}
                                   : Pixel{0, 0};
  res.mask = stabilizer_.update_mask(raw, shift.x, shift.y);
  res.mask.timestamp_us = ts;
  res.threshold = t.value_or(0.0);
  last_origin_ = in.origin_px;
  res.times.mask_ms = ms_since(clock);

  // Edge
  std::optional<EdgeMap> edges;
  BandRegion band;
  if (lum) {
    const bool banded = variant_ == Variant::Fusion || variant_ == Variant::FusionNoRdp;
    if (banded) {
      band = band_from_mask(res.mask, cfg_.fusion.d_g(gsd), gsd);
      res.band_pixels = count_set(band.bits);
    } else {
      band = BandRegion{BitGrid(w, h, 1), false};
      res.band_pixels = band.bits.size();
    }
    const BitGrid* region = banded ? &band.bits : nullptr;
    const GradientField g = sobel_gradients(*lum, region);
    edges = hysteresis(non_max_suppress(g, region), cfg_.hysteresis);
    if (variant_ == Variant::Fusion || variant_ == Variant::FusionNoRdp || variant_ == Variant::RgbOnly)
      edges = texture_suppress(*edges, g, cfg_.texture_window, cfg_.coherence_min);
  }
  res.pixels_processed = res.histogram_pixels + res.band_pixels;
  res.times.edge_ms = ms_since(clock);

  // Fuse
  BitGrid c;
  switch (variant_) {
    case Variant::ThermalOnly:
      c = mask_boundary(res.mask.bits, false);
      break;
    case Variant::Fusion:
    case Variant::FusionNoRdp:
    case Variant::RgbOnly:
      c = gate_edges(*edges, band, cfg_.fusion);
      c = prune_fragments(c, edges->confidence, cfg_.fusion);
      c = bridge_gaps(c, band.bits, cache_, in.origin_px);
      break;
    case Variant::NaiveFollowEdge:
    case Variant::CannyContours:
      c = edges->bits;
      break;
  }
  res.accepted = thin_lines(c);
  res.chains = polygonize(res.accepted, ts);

  std::optional<PixelChain> tracked;
  if (variant_ == Variant::NaiveFollowEdge) {
    double best = -1.0;
    for (const auto& ch : res.chains.chains) {
      if (static_cast<int>(ch.vertices.size()) < std::max(2, cfg_.fusion.min_fragment_px)) continue;
      const double mc = mean_confidence(ch, edges->confidence);
      if (mc > best) {
        best = mc;
        tracked = ch;
      }
    }
  } else {
    tracked = longest(res.chains);
  }
  if (variant_ == Variant::Fusion || variant_ == Variant::FusionNoRdp) {
    const auto thermal_track = longest(thermal_chains(res.mask, ts));
    const double own = tracked ? static_cast<double>(tracked->vertices.size()) : 0.0;
    if (thermal_track && own < cfg_.fallback_ratio * static_cast<double>(thermal_track->vertices.size())) {
      tracked = thermal_track;
      res.thermal_fallback = true;
    }
  }
  if (tracked) tracked = orient_hot_left(std::move(*tracked), res.mask.bits);
  res.tracked = tracked;
  res.times.fuse_ms = ms_since(clock);

  // Simplify
  if (tracked) {
    const Polyline dense = pixel_to_world(tracked->vertices, in.origin_m(), gsd);
    const SimplifyConfig& sc = cfg_.simplify;
    GuidancePolyline gp;
    switch (variant_) {
      case Variant::Fusion:
      case Variant::RgbOnly:
      case Variant::ThermalOnly:
        gp = simplify_chain(dense, tracked->closed, sc, gsd, ts, prev_, true);
        break;
      case Variant::FusionNoRdp:
        gp = simplify_chain(dense, tracked->closed, sc, gsd, ts, prev_, false);
        break;
      case Variant::NaiveFollowEdge:
        gp = GuidancePolyline{decimate(dense, sc.k_max_vertices), tracked->closed, ts, gsd, sc.eps_m(gsd)};
        break;
      case Variant::CannyContours: {
        const double eps = sc.eps_m(gsd);
        gp = GuidancePolyline{cap_vertices(rdp(dense, eps, tracked->closed), sc.k_max_vertices, eps, tracked->closed),
                              tracked->closed, ts, gsd, eps};
        break;
      }
    }
    res.polyline = gp;
    prev_ = gp;
  }
  res.times.simplify_ms = ms_since(clock);
  return res;
}

}  // namespace ember
