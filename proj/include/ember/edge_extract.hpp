#pragma once

#include "ember/core.hpp"
#include "ember/imaging.hpp"
#include "ember/thermal_mask.hpp"

namespace ember {

struct GradientField {
  Grid<float> gx;
  Grid<float> gy;
  Grid<float> magnitude;
  Grid<float> direction;  // atan2(gy, gx), (-pi, pi]
};

// 3x3 Sobel with replicate border. When `region` is given, only pixels set in
// it are evaluated and all others are left at zero.
GradientField sobel_gradients(const Frame& lum, const BitGrid* region = nullptr);

struct BandRegion {
  BitGrid bits;
  bool empty = true;  // no thermal boundary was found
};

// Mask pixels with an 8-neighbour in the background. With
// `outside_is_background` the frame border counts as background.
BitGrid mask_boundary(const BitGrid& mask, bool outside_is_background = true);

// Dilation of the mask boundary by a disk of radius round(d_g / gsd).
BandRegion band_from_mask(const HotspotMask& mask, double d_g_m, double gsd);

// Keeps pixels whose magnitude is >= both neighbours along the gradient
// direction quantized to 0/45/90/135 degrees. Zero-magnitude pixels never survive.
Grid<float> non_max_suppress(const GradientField& g, const BitGrid* region = nullptr);

struct EdgeMap {
  BitGrid bits;
  Grid<float> confidence;  // magnitude / max magnitude at edge pixels, 0 elsewhere
};

struct HysteresisThresholds {
  double low = 0.1;
  double high = 0.25;
};

// Double-threshold hysteresis; thresholds are fractions of the maximum thinned magnitude.
EdgeMap hysteresis(const Grid<float>& thinned, HysteresisThresholds t = {});

// Doubled-angle mean resultant length of edge directions in a window around (x, y).
double direction_coherence(const EdgeMap& e, const GradientField& g, int x, int y, int window);

// Drops edge pixels whose local direction coherence falls below coherence_min.
EdgeMap texture_suppress(const EdgeMap& e, const GradientField& g, int window = 7,
                         double coherence_min = 0.6);

}  // namespace ember
