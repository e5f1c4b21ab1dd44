#pragma once

#include <utility>
#include <vector>

#include "ember/core.hpp"
#include "ember/geometry.hpp"
#include "ember/guide.hpp"

namespace ember {

// Axis-aligned world rectangle, half-open: [x0, x1) x [y0, y1).
struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  bool contains(Vec2 p) const noexcept { return p.x >= x0 && p.x < x1 && p.y >= y0 && p.y < y1; }
};

// Cells of a world-aligned raster hit by the polyline (sampled at a quarter cell).
BitGrid rasterize_polyline(const Polyline& p, bool closed, Vec2 grid_origin, double cell, int width,
                           int height);

// Boundary-band IoU: both curves rasterized at grid_gsd, dilated by
// round(band_w / grid_gsd), restricted to the union of footprints (when
// given). Throws EmptyTruth when no truth cell survives the restriction.
double band_iou(const Polyline& pred, bool pred_closed, const Polyline& truth, bool truth_closed,
                double band_w_m, double grid_gsd, const std::vector<Rect>& footprints = {});

struct JitterStats {
  double jitter_rms_m = 0.0;
  double heading_var = 0.0;   // circular variance of matched heading differences
  double mean_signed_m = 0.0; // positive when the newer curve lies left of the older
};

// Needs at least two polylines; closed flags apply to every polyline.
JitterStats boundary_jitter(const std::vector<Polyline>& polylines, bool closed = false,
                            int samples = 100);

struct PathLength {
  double meters = 0.0;
  double normalized = 0.0;
};

PathLength path_length(const std::vector<Vec2>& trace, double truth_perimeter_m);

struct Percentiles {
  double p50 = 0.0;
  double p95 = 0.0;
};

// Nearest rank: the ceil(p*n)-th smallest sample.
Percentiles latency_percentiles(std::vector<double> samples_ms);
double nearest_rank(std::vector<double> samples, double p);

// One tick of team state: leader pose and follower positions.
struct FormationTick {
  Pose leader;
  std::vector<std::pair<int, Vec2>> followers;  // (id, position)
};

// RMS over ticks and followers of |p_i - (p_L + R(psi_L) o_i)|.
double formation_rms(const std::vector<FormationTick>& ticks, const FormationSpec& spec);

}  // namespace ember
