#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ember/core.hpp"
#include "ember/imaging.hpp"

namespace ember {

inline constexpr int kDefaultLevels = 256;

struct Histogram {
  std::vector<double> p;  // normalized bin probabilities, size L
  std::size_t total_count = 0;

  int levels() const noexcept { return static_cast<int>(p.size()); }
};

struct CropRect {
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;
};

// Crop that drops a fixed margin on every side.
CropRect margin_crop(int width, int height, int margin);

// Intensity v in [0, 1] maps to bin floor(v * (L - 1) + 0.5).
int bin_index(float v, int levels = kDefaultLevels);

Histogram build_histogram(const Frame& frame, std::optional<CropRect> crop = std::nullopt,
                          int levels = kDefaultLevels);
Histogram histogram_from_counts(const std::vector<std::uint64_t>& counts);

struct OtsuResult {
  int t_star = 0;
  double sigma_b2 = 0.0;
  std::vector<double> curve;  // between-class variance per t in [0, L-2]; 0 where undefined
};

// Global Otsu threshold. Class 0 is bins [0, t], class 1 is bins [t+1, L-1].
OtsuResult otsu_threshold(const Histogram& h);

struct HotspotMask {
  BitGrid bits;
  std::uint64_t timestamp_us = 0;
};

// Sets a pixel iff its bin index is strictly above the threshold.
HotspotMask binarize(const Frame& frame, double threshold, int levels = kDefaultLevels);

// Structuring element radius in pixels for a physical feature scale.
int struct_radius(double gsd, double feature_scale_m = 1.5);

// Half-width of the discrete disk {dx^2 + dy^2 <= r^2} for each row offset dy in [-r, r].
std::vector<int> disk_half_widths(int r);

// Binary morphology with a discrete disk. Pixels outside the image count as
// background for both erosion and dilation.
BitGrid erode(const BitGrid& in, int r);
BitGrid dilate(const BitGrid& in, int r);
BitGrid open(const BitGrid& in, int r);
// Dual of open(): complement of the opening of the complement.
BitGrid close(const BitGrid& in, int r);
// Background 4-components that do not reach the image border become foreground.
BitGrid fill_holes(const BitGrid& in);

HotspotMask morph_open_close(const HotspotMask& mask, int r);

// EMA over the Otsu threshold and per-pixel mask occupancy.
class MaskStabilizer {
 public:
  explicit MaskStabilizer(double alpha = 0.3);

  double alpha() const noexcept { return alpha_; }
  std::optional<double> threshold() const noexcept { return t_ema_; }
  const Grid<double>& occupancy() const noexcept { return occupancy_; }

  double update_threshold(double t_new);

  // shift_x/shift_y: how far the frame origin moved since the last update, in
  // pixels; occupancy is re-registered before blending. Pixels with no
  // history are seeded from the new mask.
  HotspotMask update_mask(const HotspotMask& mask_new, int shift_x = 0, int shift_y = 0);

  struct Output {
    double threshold;
    HotspotMask mask;
  };
  Output stabilize(double t_new, const HotspotMask& mask_new);

  static constexpr double kDecisionLevel = 0.5;

 private:
  double alpha_;
  std::optional<double> t_ema_;
  Grid<double> occupancy_;
  bool has_occupancy_ = false;
};

}  // namespace ember
