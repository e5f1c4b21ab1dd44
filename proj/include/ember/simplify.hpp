#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "ember/core.hpp"
#include "ember/fuse.hpp"
#include "ember/geometry.hpp"

namespace ember {

struct SimplifyConfig {
  double k = 2.0;                 // RDP tolerance in GSD units
  double l_min_gsd = 4.0;         // minimum segment length in GSD units
  double theta_min_deg = 25.0;    // turns below this are candidates for removal
  int k_max_vertices = 64;
  double alpha_smooth = 0.3;
  // Share of the tolerance reserved for pixel quantization of the raw chain;
  // the simplifier itself spends eps - allowance * GSD.
  double quantization_allowance_px = 0.5;
  double smooth_gate_gsd = 8.0;   // larger frame-to-frame moves reset smoothing

  double eps_m(double gsd) const noexcept { return k * gsd; }
  double l_min_m(double gsd) const noexcept { return l_min_gsd * gsd; }
};

void validate(const SimplifyConfig& cfg);

struct GuidancePolyline {
  Polyline vertices;
  bool closed = false;
  std::uint64_t timestamp_us = 0;
  double gsd = 1.0;
  double eps_m = 0.0;
};

// Ramer-Douglas-Peucker on segment distance. Closed input is first split at
// its two mutually farthest vertices. Returns kept indices in input order.
std::vector<std::size_t> rdp_indices(const Polyline& points, double eps_m, bool closed = false);
Polyline rdp(const Polyline& points, double eps_m, bool closed = false);

struct ConstraintParams {
  double l_min_m = 0.0;
  double theta_min_deg = 25.0;
  double tolerance_m = 0.0;  // removal veto: the replacing chord must stay this close to the reference
};

// Removes interior vertices that sit on short segments or nearly straight
// turns, unless the removal would move the curve more than tolerance_m from
// `reference`. `kept` are indices into reference; the result is a subset.
std::vector<std::size_t> constrain_indices(const Polyline& reference, std::vector<std::size_t> kept,
                                           const ConstraintParams& params);

// constrain_indices over every vertex, with tolerance eps_m.
Polyline enforce_constraints(const Polyline& points, const ConstraintParams& params);

// Turn angle at b in degrees (0 for straight).
double turn_angle_deg(Vec2 a, Vec2 b, Vec2 c);

// Vertex EMA against the previous polyline, matched by normalized arc length.
Polyline smooth_vertices(const std::optional<GuidancePolyline>& prev, const Polyline& cur,
                         double alpha, bool cur_closed = false,
                         double gate_m = std::numeric_limits<double>::infinity());

// Re-runs RDP with doubling tolerance until at most k_max vertices remain.
Polyline cap_vertices(const Polyline& points, int k_max, double eps_start_m = 0.0,
                      bool closed = false);

Polyline pixel_to_world(const std::vector<Pixel>& chain, Vec2 origin, double gsd);
Pixel world_to_pixel(Vec2 p, Vec2 origin, double gsd);

// Full simplify stage on a dense world-frame chain.
GuidancePolyline simplify_chain(const Polyline& dense, bool closed, const SimplifyConfig& cfg,
                                double gsd, std::uint64_t timestamp_us,
                                const std::optional<GuidancePolyline>& prev, bool use_rdp = true);

}  // namespace ember
