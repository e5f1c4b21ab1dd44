#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "ember/core.hpp"
#include "ember/edge_extract.hpp"

namespace ember {

struct FusionConfig {
  double c_g = 4.0;           // band half-width in GSD units (d_g = c_g * GSD)
  double tau_e = 0.2;         // minimum edge confidence
  int min_fragment_px = 5;    // continuity check
  double contrast_factor = 1.5;  // component mean confidence must reach factor * tau_e
  int carry_frames = 3;       // temporal carry-over horizon

  double d_g(double gsd) const noexcept { return c_g * gsd; }
};

void validate(const FusionConfig& cfg, std::size_t ring_capacity = 4);

// C(x) = E(x) and band(x) and confidence(x) >= tau_e.
BitGrid gate_edges(const EdgeMap& e, const BandRegion& band, const FusionConfig& cfg);

// Removes 8-connected components that are too small or too weak on average.
BitGrid prune_fragments(const BitGrid& c, const Grid<float>& confidence, const FusionConfig& cfg);

// Recently accepted pixels keyed by absolute pixel position (frame origin +
// pixel), so the cache stays registered while the camera moves.
class CarryOverCache {
 public:
  explicit CarryOverCache(int carry_frames = 3) : carry_frames_(carry_frames) {}

  int carry_frames() const noexcept { return carry_frames_; }
  std::size_t size() const noexcept { return ages_.size(); }
  // Age of the cached absolute pixel, or -1 when absent.
  int age(Pixel absolute) const;

  friend BitGrid bridge_gaps(const BitGrid& c, const BitGrid& band, CarryOverCache& cache,
                             Pixel origin);

 private:
  static std::int64_t key(int x, int y) {
    return (static_cast<std::int64_t>(y) << 32) ^ static_cast<std::uint32_t>(x);
  }
  int carry_frames_;
  std::unordered_map<std::int64_t, int> ages_;
};

// Output is c plus cached pixels (age <= carry_frames) inside the band. The
// cache ages by one frame, expired entries drop, and c enters at age 0.
// `origin` is the absolute pixel position of the grid's (0, 0).
BitGrid bridge_gaps(const BitGrid& c, const BitGrid& band, CarryOverCache& cache,
                    Pixel origin = {});

// Zhang-Suen thinning followed by removal of staircase corners, leaving
// 8-connected curves one pixel wide.
BitGrid thin_lines(const BitGrid& in);

struct PixelChain {
  std::vector<Pixel> vertices;
  bool closed = false;
};

struct RawPolylines {
  std::vector<PixelChain> chains;
  std::uint64_t timestamp_us = 0;
};

// Number of set 8-neighbours.
int degree8(const BitGrid& g, int x, int y);

// Links pixels into chains between endpoints/junctions; pure cycles become
// closed chains. Longest first, ties by first vertex in row-major order.
RawPolylines polygonize(const BitGrid& c, std::uint64_t timestamp_us = 0);

}  // namespace ember
