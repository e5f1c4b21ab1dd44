#include "ember/guide.hpp"

#include <algorithm>
#include <limits>

namespace ember {

Pose make_pose(double x, double y, double psi, std::uint64_t timestamp_us) {
  return Pose{x, y, wrap_angle(psi), timestamp_us};
}

const char* to_string(MissionState s) {
  switch (s) {
    case MissionState::Nominal: return "Nominal";
    case MissionState::Degraded: return "Degraded";
    case MissionState::Handover: return "Handover";
  }
  return "?";
}

const char* to_string(MissionEvent e) {
  switch (e) {
    case MissionEvent::GpsDegrade: return "GpsDegrade";
    case MissionEvent::GpsRecovered: return "GpsRecovered";
    case MissionEvent::LeaderWeak: return "LeaderWeak";
    case MissionEvent::LeaderFailed: return "LeaderFailed";
    case MissionEvent::HandoverComplete: return "HandoverComplete";
    case MissionEvent::CollisionBuffer: return "CollisionBuffer";
    case MissionEvent::DrTimeout: return "DrTimeout";
  }
  return "?";
}

const char* to_string(Role r) { return r == Role::Leader ? "Leader" : "Follower"; }

const char* to_string(CommandSource s) {
  switch (s) {
    case CommandSource::TangentFollow: return "TangentFollow";
    case CommandSource::FormationHold: return "FormationHold";
    case CommandSource::DeadReckon: return "DeadReckon";
    case CommandSource::Loiter: return "Loiter";
  }
  return "?";
}

Vec2 formation_target(const Pose& leader, Vec2 o) {
  const double c = std::cos(leader.psi), s = std::sin(leader.psi);
  return {leader.x + c * o.x - s * o.y, leader.y + s * o.x + c * o.y};
}

std::vector<double> spacing_consensus(const std::vector<double>& s,
                                      const std::vector<double>& s_desired,
                                      const std::vector<std::vector<char>>& neighbors,
                                      double gain, double dt) {
  const std::size_t n = s.size();
  if (s_desired.size() != n || neighbors.size() != n)
    throw Error(ErrorCode::DimensionMismatch, "consensus inputs differ in length");
  if (!(gain * dt < 1.0) || gain < 0.0 || dt < 0.0)
    throw Error(ErrorCode::InvalidArgument, "consensus requires 0 <= gain*dt < 1");
  std::vector<double> delta(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (neighbors[i].size() != n)
      throw Error(ErrorCode::DimensionMismatch, "consensus adjacency row has wrong length");
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && neighbors[i][j]) sum += (s[j] - s[i]) - (s_desired[j] - s_desired[i]);
    delta[i] = gain * dt * sum;
  }
  return delta;
}

namespace {

struct Nearest {
  double s = 0.0;  // arc length of the nearest point
  double d = std::numeric_limits<double>::infinity();
};

Nearest nearest_on(const Polyline& p, bool closed, Vec2 q) {
  Nearest best;
  double acc = 0.0;
  const std::size_t segs = closed ? p.size() : p.size() - 1;
  for (std::size_t i = 0; i < segs; ++i) {
    const Vec2 a = p[i], b = p[(i + 1) % p.size()];
    const Vec2 ab = b - a;
    const double l2 = dot(ab, ab);
    const double t = l2 > 0.0 ? std::clamp(dot(q - a, ab) / l2, 0.0, 1.0) : 0.0;
    const double d = dist(q, a + t * ab);
    if (d < best.d) {
      best.d = d;
      best.s = acc + t * std::sqrt(l2);
    }
    acc += std::sqrt(l2);
  }
  return best;
}

// First arc length >= s_from where the path exits the circle (c, r); -1 if none.
double circle_exit(const Polyline& p, bool closed, double s_from, Vec2 c, double r) {
  const std::size_t n = p.size();
  const std::size_t segs = closed ? n : n - 1;
  const double total = polyline_length(p, closed);
  double acc = 0.0;
  // Closed paths are walked for at most one lap past s_from.
  for (std::size_t lap = 0; lap < (closed ? 2u : 1u); ++lap) {
    for (std::size_t i = 0; i < segs; ++i) {
      const Vec2 a = p[i], b = p[(i + 1) % n];
      const double l = dist(a, b);
      const double seg_lo = acc, seg_hi = acc + l;
      acc = seg_hi;
      if (l <= 0.0 || seg_hi < s_from) continue;
      if (closed && seg_lo > s_from + total) return -1.0;
      const double t0 = std::max(0.0, (s_from - seg_lo) / l);
      const Vec2 d = b - a, f = a - c;
      const double qa = dot(d, d), qb = 2.0 * dot(d, f), qc = dot(f, f) - r * r;
      const double disc = qb * qb - 4.0 * qa * qc;
      if (disc < 0.0) continue;
      const double t = (-qb + std::sqrt(disc)) / (2.0 * qa);
      if (t >= t0 && t <= 1.0) return seg_lo + t * l;
    }
  }
  return -1.0;
}

}  // namespace

GuidanceCommand tangent_follow(const GuidancePolyline& poly, const Pose& pose, double v0,
                               double lookahead_m) {
  const Polyline& p = poly.vertices;
  if (p.size() < 2 || polyline_length(p, poly.closed) <= 0.0)
    throw Error(ErrorCode::DegeneratePolyline, "tangent_follow needs a polyline with length");
  if (!(lookahead_m > 0.0)) throw Error(ErrorCode::InvalidArgument, "lookahead must be positive");

  const Vec2 here = pose.position();
  const double total = polyline_length(p, poly.closed);
  const Nearest near = nearest_on(p, poly.closed, here);

  Vec2 target;
  bool clamped_end = false;
  if (near.d < lookahead_m) {
    const double s = circle_exit(p, poly.closed, near.s, here, lookahead_m);
    if (s >= 0.0) {
      target = point_at_arclength(p, s, poly.closed);
    } else {
      target = p.back();
      clamped_end = !poly.closed;
    }
  } else {
    const double s = near.s + lookahead_m;
    clamped_end = !poly.closed && s >= total;
    target = point_at_arclength(p, s, poly.closed);
  }

  GuidanceCommand cmd;
  const Vec2 to = target - here;
  cmd.target_heading = norm(to) > 0.0 ? std::atan2(to.y, to.x) : pose.psi;
  if (clamped_end && dist(here, p.back()) <= 1.0) {
    cmd.source = CommandSource::Loiter;
    cmd.target_speed = 0.0;
  } else {
    cmd.source = CommandSource::TangentFollow;
    cmd.target_speed = v0;
  }
  return cmd;
}

DeadReckonOutput dead_reckon(const UavState& last, double elapsed_s, const SafetyConfig& safety) {
  if (elapsed_s < 0.0) throw Error(ErrorCode::InvalidArgument, "dead-reckoning time must be >= 0");
  DeadReckonOutput out;
  out.position = last.pose.position() + elapsed_s * last.velocity;
  out.timed_out = elapsed_s > safety.dr_timeout_s;
  if (out.timed_out) {
    out.command = GuidanceCommand{0.0, last.pose.psi, CommandSource::Loiter};
  } else {
    const double speed = norm(last.velocity);
    const double heading = speed > 0.0 ? std::atan2(last.velocity.y, last.velocity.x) : last.pose.psi;
    out.command = GuidanceCommand{speed, heading, CommandSource::DeadReckon};
  }
  return out;
}

double leader_score(const UavState& s, const LeaderWeights& w) {
  if (w.battery < 0.0 || w.link < 0.0 || w.gnss < 0.0 ||
      std::abs(w.battery + w.link + w.gnss - 1.0) > 1e-9)
    throw Error(ErrorCode::InvalidArgument, "leader weights must be >= 0 and sum to 1");
  return w.battery * s.battery + w.link * s.link_quality + w.gnss * (s.gnss_ok ? 1.0 : 0.0);
}

MissionState mission_step(MissionState state, EventSet ev) {
  using E = MissionEvent;
  if (ev.has(E::CollisionBuffer) || ev.has(E::DrTimeout)) return MissionState::Degraded;
  switch (state) {
    case MissionState::Nominal:
      return ev.has(E::GpsDegrade) ? MissionState::Degraded : state;
    case MissionState::Degraded:
      if (ev.has(E::LeaderWeak) || ev.has(E::LeaderFailed)) return MissionState::Handover;
      if (ev.has(E::GpsRecovered)) return MissionState::Nominal;
      return state;
    case MissionState::Handover:
      return ev.has(E::HandoverComplete) ? MissionState::Nominal : state;
  }
  return state;
}

bool is_mission_arc(MissionState from, MissionState to) {
  using S = MissionState;
  if (from == to) return true;
  if (to == S::Degraded) return true;  // GPS degrade, or the safety re-entry arc from anywhere
  if (from == S::Degraded && to == S::Handover) return true;
  if (from == S::Handover && to == S::Nominal) return true;
  if (from == S::Degraded && to == S::Nominal) return true;
  return false;
}

Team::Team(std::vector<UavState> uavs, FormationSpec formation)
    : uavs_(std::move(uavs)), formation_(std::move(formation)) {
  if (uavs_.empty()) throw Error(ErrorCode::InvalidArgument, "team is empty");
  if (leader_count() != 1) throw Error(ErrorCode::InvalidArgument, "team needs exactly one leader");
  for (const auto& u : uavs_)
    if (!formation_.offsets.count(u.id)) formation_.offsets[u.id] = Vec2{};
  formation_.offsets[leader_id()] = Vec2{};
}

int Team::leader_id() const {
  for (const auto& u : uavs_)
    if (u.role == Role::Leader) return u.id;
  throw Error(ErrorCode::InvalidArgument, "team has no leader");
}

UavState& Team::by_id(int id) {
  for (auto& u : uavs_)
    if (u.id == id) return u;
  throw Error(ErrorCode::InvalidArgument, "no UAV with id " + std::to_string(id));
}

const UavState& Team::by_id(int id) const {
  for (const auto& u : uavs_)
    if (u.id == id) return u;
  throw Error(ErrorCode::InvalidArgument, "no UAV with id " + std::to_string(id));
}

std::size_t Team::leader_count() const {
  return static_cast<std::size_t>(std::count_if(
      uavs_.begin(), uavs_.end(), [](const UavState& u) { return u.role == Role::Leader; }));
}

int Team::handover(const LeaderWeights& w, const SafetyConfig& safety) {
  const int current = leader_id();
  if (leader_score(by_id(current), w) >= safety.handover_health_min) return current;

  int best_id = -1;
  double best = -1.0;
  for (const auto& u : uavs_) {
    if (u.id == current) continue;
    const double sc = leader_score(u, w);
    if (sc > best || (sc == best && u.id < best_id)) {
      best = sc;
      best_id = u.id;
    }
  }
  if (best_id < 0 || best < safety.handover_health_min)
    throw Error(ErrorCode::NoViableLeader, "no UAV meets the leader health minimum");

  const Vec2 anchor = formation_.offsets.at(best_id);
  for (auto& [id, o] : formation_.offsets) o = o - anchor;
  for (auto& u : uavs_) u.role = u.id == best_id ? Role::Leader : Role::Follower;
  return best_id;
}

}  // namespace ember
