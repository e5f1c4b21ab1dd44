#pragma once

#include <vector>

#include "ember/core.hpp"

namespace ember {

using Polyline = std::vector<Vec2>;

double polyline_length(const Polyline& p, bool closed = false);

// Distance from q to the polyline (segments; closing segment when closed).
double point_polyline_distance(Vec2 q, const Polyline& p, bool closed = false);

// Point at arc length s from the start (clamped for open, wrapped for closed).
Vec2 point_at_arclength(const Polyline& p, double s, bool closed = false);

// Unit tangent of the segment containing arc length s.
Vec2 tangent_at_arclength(const Polyline& p, double s, bool closed = false);

// n points evenly spaced by arc length, endpoints included for open polylines.
Polyline resample_uniform(const Polyline& p, int n, bool closed = false);

// Max over points sampled along `a` (spacing <= step) of the distance to `b`.
double directed_hausdorff(const Polyline& a, const Polyline& b, double step, bool a_closed = false,
                          bool b_closed = false);

double hausdorff(const Polyline& a, const Polyline& b, double step, bool a_closed = false,
                 bool b_closed = false);

// Shoelace area, positive for counterclockwise.
double signed_area(const Polyline& polygon);

bool point_in_polygon(Vec2 q, const Polyline& polygon);

// True if any two non-adjacent edges of the closed polygon intersect.
bool has_self_intersection(const Polyline& polygon);

bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d);

}  // namespace ember
