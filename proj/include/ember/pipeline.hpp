#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "ember/edge_extract.hpp"
#include "ember/fuse.hpp"
#include "ember/imaging.hpp"
#include "ember/simplify.hpp"
#include "ember/thermal_mask.hpp"

namespace ember {

enum class Variant { ThermalOnly, RgbOnly, Fusion, FusionNoRdp, NaiveFollowEdge, CannyContours };

const char* to_string(Variant v);
Variant parse_variant(const std::string& name);  // throws InvalidArgument
inline constexpr Variant kAllVariants[] = {Variant::ThermalOnly, Variant::RgbOnly,
                                           Variant::Fusion,      Variant::FusionNoRdp,
                                           Variant::NaiveFollowEdge, Variant::CannyContours};

bool uses_rgb(Variant v);

struct PerceptionConfig {
  ClipQuantiles clip;
  int histogram_margin_px = 5;
  int levels = kDefaultLevels;
  double feature_scale_m = 1.5;
  double stabilizer_alpha = 0.3;
  HysteresisThresholds hysteresis;
  int texture_window = 7;
  double coherence_min = 0.6;
  FusionConfig fusion;
  SimplifyConfig simplify;
  // Fusion falls back to the thermal boundary chain when its own tracked
  // chain is shorter than this share of the thermal one.
  double fallback_ratio = 0.8;
};

void validate(const PerceptionConfig& cfg);

// One sensor frame pair with its georeference. origin_px is the absolute
// pixel-lattice position of grid cell (0, 0); world = gsd * (origin_px + (x, y)).
struct SensorInput {
  Grid<std::uint16_t> thermal;
  std::optional<Grid<std::uint16_t>> luminance;
  std::uint64_t timestamp_us = 0;
  double gsd = 1.0;
  Pixel origin_px;

  Vec2 origin_m() const noexcept { return {gsd * origin_px.x, gsd * origin_px.y}; }
};

struct StageTimes {
  double sense_ms = 0.0;
  double mask_ms = 0.0;
  double edge_ms = 0.0;
  double fuse_ms = 0.0;
  double simplify_ms = 0.0;
  double total_ms() const noexcept { return sense_ms + mask_ms + edge_ms + fuse_ms + simplify_ms; }
};

struct PerceptionResult {
  HotspotMask mask;
  double threshold = 0.0;   // stabilized Otsu bin
  BitGrid accepted;         // boundary pixels that reached polygonization
  RawPolylines chains;
  std::optional<PixelChain> tracked;   // oriented with the hot side on the left
  std::optional<GuidancePolyline> polyline;
  bool thermal_fallback = false;
  std::size_t histogram_pixels = 0;
  std::size_t band_pixels = 0;
  std::size_t pixels_processed = 0;
  StageTimes times;
};

// Stateful per-UAV perception chain (stabilizer, carry-over cache, previous
// polyline). Not thread-safe; one instance per UAV.
class PerceptionPipeline {
 public:
  PerceptionPipeline(PerceptionConfig cfg, Variant variant);

  PerceptionResult process(const SensorInput& in);

  Variant variant() const noexcept { return variant_; }
  const PerceptionConfig& config() const noexcept { return cfg_; }
  const std::optional<GuidancePolyline>& previous() const noexcept { return prev_; }

 private:
  PerceptionConfig cfg_;
  Variant variant_;
  MaskStabilizer stabilizer_;
  CarryOverCache cache_;
  std::optional<GuidancePolyline> prev_;
  std::optional<Pixel> last_origin_;
};

// Reverses `chain` when the majority of its samples have the set side of
// `mask` on the right.
PixelChain orient_hot_left(PixelChain chain, const BitGrid& mask);

// Uniform index decimation to at most k_max vertices, ends kept.
Polyline decimate(const Polyline& p, int k_max);

}  // namespace ember
