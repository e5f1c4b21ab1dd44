#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "ember/core.hpp"
#include "ember/simplify.hpp"

namespace ember {

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;  // heading, radians in (-pi, pi]
  std::uint64_t timestamp_us = 0;

  Vec2 position() const noexcept { return {x, y}; }
};

Pose make_pose(double x, double y, double psi, std::uint64_t timestamp_us = 0);

enum class Role { Leader, Follower };
enum class MissionState { Nominal, Degraded, Handover };

enum class MissionEvent : std::uint8_t {
  GpsDegrade,
  GpsRecovered,
  LeaderWeak,
  LeaderFailed,
  HandoverComplete,
  CollisionBuffer,
  DrTimeout,
};
inline constexpr int kMissionEventCount = 7;

class EventSet {
 public:
  EventSet() = default;
  EventSet(std::initializer_list<MissionEvent> events) {
    for (auto e : events) add(e);
  }
  void add(MissionEvent e) { bits_ |= bit(e); }
  bool has(MissionEvent e) const noexcept { return (bits_ & bit(e)) != 0; }
  bool empty() const noexcept { return bits_ == 0; }
  std::uint8_t raw() const noexcept { return bits_; }
  static EventSet from_raw(std::uint8_t bits) {
    EventSet s;
    s.bits_ = bits & 0x7F;
    return s;
  }

 private:
  static std::uint8_t bit(MissionEvent e) {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(e));
  }
  std::uint8_t bits_ = 0;
};

const char* to_string(MissionState s);
const char* to_string(MissionEvent e);
const char* to_string(Role r);

struct UavState {
  int id = 0;
  Pose pose;
  Vec2 velocity;
  bool gnss_ok = true;
  double battery = 1.0;
  double link_quality = 1.0;
  Role role = Role::Follower;
  MissionState mission = MissionState::Nominal;
};

// Follower offsets in the leader body frame (x forward, y left).
struct FormationSpec {
  std::map<int, Vec2> offsets;
};

struct SafetyConfig {
  double collision_dist_m = 8.0;
  double collision_alt_m = 5.0;  // planar simulator: carried, not used
  double dr_timeout_s = 5.0;
  double handover_health_min = 0.25;
};

enum class CommandSource { TangentFollow, FormationHold, DeadReckon, Loiter };
const char* to_string(CommandSource s);

struct GuidanceCommand {
  double target_speed = 0.0;
  double target_heading = 0.0;
  CommandSource source = CommandSource::Loiter;
};

// p* = p_L + R(psi_L) o
Vec2 formation_target(const Pose& leader, Vec2 offset);

// One consensus step on along-path coordinates:
//   ds_i = gain*dt * sum_j [(s_j - s_i) - (s*_j - s*_i)]
// over neighbours j (neighbors[i][j] != 0).
std::vector<double> spacing_consensus(const std::vector<double>& s,
                                      const std::vector<double>& s_desired,
                                      const std::vector<std::vector<char>>& neighbors,
                                      double gain, double dt);

// Pure pursuit along the polyline: the target is where the lookahead circle
// around the pose leaves the path ahead of the nearest point (or the point one
// lookahead further along the arc when the pose is farther away than that).
GuidanceCommand tangent_follow(const GuidancePolyline& p, const Pose& pose, double v0,
                               double lookahead_m);

struct DeadReckonOutput {
  GuidanceCommand command;
  Vec2 position;      // constant-velocity estimate
  bool timed_out = false;
};

// Constant-velocity propagation from the last good state after elapsed_s of
// dead reckoning; loiters once elapsed_s exceeds the timeout.
DeadReckonOutput dead_reckon(const UavState& last, double elapsed_s, const SafetyConfig& safety);

struct LeaderWeights {
  double battery = 0.4;
  double link = 0.3;
  double gnss = 0.3;
};

double leader_score(const UavState& s, const LeaderWeights& w = {});

MissionState mission_step(MissionState state, EventSet events);

// Whether mission_step(from, ...) = to is an arc of the mission graph.
bool is_mission_arc(MissionState from, MissionState to);

// Team container: owns states and the formation, keeps exactly one leader.
class Team {
 public:
  Team(std::vector<UavState> uavs, FormationSpec formation);

  const std::vector<UavState>& uavs() const noexcept { return uavs_; }
  std::vector<UavState>& uavs() noexcept { return uavs_; }
  const FormationSpec& formation() const noexcept { return formation_; }
  int leader_id() const;
  UavState& by_id(int id);
  const UavState& by_id(int id) const;
  std::size_t leader_count() const;

  // Transfers leadership when the leader's score is below the health minimum.
  // Returns the (possibly unchanged) leader id; throws NoViableLeader.
  int handover(const LeaderWeights& w, const SafetyConfig& safety);

 private:
  std::vector<UavState> uavs_;
  FormationSpec formation_;
};

}  // namespace ember
