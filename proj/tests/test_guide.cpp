#include <cmath>
#include <numbers>

#include "ember/guide.hpp"
#include "support.hpp"

using namespace ember;

namespace {

UavState uav(int id, double battery, double link, bool gnss, Role role = Role::Follower) {
  UavState s;
  s.id = id;
  s.battery = battery;
  s.link_quality = link;
  s.gnss_ok = gnss;
  s.role = role;
  return s;
}

GuidancePolyline line_x(double len, bool closed = false) {
  GuidancePolyline p;
  p.vertices = {{0, 0}, {len, 0}};
  p.closed = closed;
  return p;
}

}  // namespace

TEST_SUITE("guide") {
  TEST_CASE("formation target") {
    Vec2 t = formation_target(make_pose(0, 0, 0), {1, 0});
    CHECK(t.x == doctest::Approx(1.0));
    CHECK(t.y == doctest::Approx(0.0));
    t = formation_target(make_pose(0, 0, std::numbers::pi / 2), {1, 0});
    CHECK(t.x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(t.y == doctest::Approx(1.0));
    t = formation_target(make_pose(10, 5, std::numbers::pi / 4), {1, 1});
    CHECK(t.x == doctest::Approx(10.0));
    CHECK(t.y == doctest::Approx(5.0 + std::sqrt(2.0)));
  }

  TEST_CASE("formation target is an isometry in the offset") {
    Rng rng(1);
    for (int i = 0; i < 500; ++i) {
      const Pose p = make_pose(rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(-4, 4));
      const Vec2 a{rng.uniform(-50, 50), rng.uniform(-50, 50)}, b{rng.uniform(-50, 50), rng.uniform(-50, 50)};
      CHECK(dist(formation_target(p, a), formation_target(p, b)) == doctest::Approx(dist(a, b)));
    }
  }

  TEST_CASE("spacing consensus examples") {
    const std::vector<std::vector<char>> pair{{0, 1}, {1, 0}};
    const auto eq = spacing_consensus({0, 10}, {0, 10}, pair, 1.0, 0.1);
    CHECK(eq[0] == 0.0);
    CHECK(eq[1] == 0.0);

    // Agent 1 trails the desired 10 m gap by 2 m.
    const auto d = spacing_consensus({0, 8}, {0, 10}, pair, 1.0, 0.1);
    CHECK(d[0] == doctest::Approx(-0.2));
    CHECK(d[1] == doctest::Approx(0.2));

    const std::vector<std::vector<char>> alone{{0, 0}, {0, 0}};
    const auto z = spacing_consensus({0, 3}, {0, 10}, alone, 1.0, 0.1);
    CHECK(z[0] == 0.0);
    CHECK(z[1] == 0.0);
  }

  TEST_CASE("spacing consensus conserves the sum and shrinks the error") {
    Rng rng(6);
    const std::vector<std::vector<char>> full{{0, 1, 1}, {1, 0, 1}, {1, 1, 0}};
    const std::vector<double> desired{0, -20, -40};
    std::vector<double> s{rng.uniform(-5, 5), rng.uniform(-30, -10), rng.uniform(-50, -30)};
    auto error_norm = [&] {
      const double m = (s[0] - desired[0] + s[1] - desired[1] + s[2] - desired[2]) / 3.0;
      double e = 0;
      for (int i = 0; i < 3; ++i) e += std::pow(s[i] - desired[i] - m, 2);
      return std::sqrt(e);
    };
    double prev = error_norm();
    for (int step = 0; step < 100; ++step) {
      const auto d = spacing_consensus(s, desired, full, 0.5, 0.1);
      CHECK(d[0] + d[1] + d[2] == doctest::Approx(0.0).epsilon(1e-12));
      for (int i = 0; i < 3; ++i) s[i] += d[i];
      const double now = error_norm();
      CHECK(now <= prev + 1e-12);
      prev = now;
    }
    CHECK(prev < 1e-2);
  }

  TEST_CASE("tangent follow") {
    const GuidancePolyline p = line_x(100);
    GuidanceCommand c = tangent_follow(p, make_pose(20, 0, 0), 12.0, 5.0);
    CHECK(c.target_heading == doctest::Approx(0.0));
    CHECK(c.target_speed == 12.0);
    CHECK(c.source == CommandSource::TangentFollow);

    c = tangent_follow(p, make_pose(20, 3, 0), 12.0, 5.0);
    CHECK(c.target_heading == doctest::Approx(std::atan2(-3.0, std::sqrt(25.0 - 9.0))));

    c = tangent_follow(p, make_pose(103, 0, 0), 12.0, 5.0);
    CHECK(std::abs(wrap_angle(c.target_heading - std::numbers::pi)) < 1e-9);
    c = tangent_follow(p, make_pose(100.5, 0, 0), 12.0, 5.0);
    CHECK(c.source == CommandSource::Loiter);

    GuidancePolyline bad;
    bad.vertices = {{1, 1}};
    try {
      tangent_follow(bad, make_pose(0, 0, 0), 12.0, 5.0);
      FAIL("expected DegeneratePolyline");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DegeneratePolyline);
    }
  }

  TEST_CASE("dead reckoning") {
    UavState s = uav(0, 1, 1, false);
    s.pose = make_pose(5, 5, 0.3);
    s.velocity = {10, 0};
    const SafetyConfig safety;
    DeadReckonOutput o = dead_reckon(s, 0.0, safety);
    CHECK(o.command.source == CommandSource::DeadReckon);
    CHECK(o.command.target_heading == doctest::Approx(0.0));
    CHECK(o.command.target_speed == doctest::Approx(10.0));
    o = dead_reckon(s, 2.0, safety);
    CHECK(o.position.x == doctest::Approx(25.0));
    CHECK(o.position.y == doctest::Approx(5.0));
    o = dead_reckon(s, 6.0, safety);
    CHECK(o.timed_out);
    CHECK(o.command.source == CommandSource::Loiter);
    CHECK(o.command.target_speed == 0.0);
  }

  TEST_CASE("leader score") {
    CHECK(leader_score(uav(0, 1, 1, true)) == doctest::Approx(1.0));
    CHECK(leader_score(uav(0, 0, 0, false)) == 0.0);
    CHECK(leader_score(uav(0, 0.5, 0.8, true), {0.5, 0.3, 0.2}) == doctest::Approx(0.69));
  }

  TEST_CASE("mission transitions") {
    using enum MissionState;
    using enum MissionEvent;
    CHECK(mission_step(Nominal, {GpsDegrade}) == Degraded);
    CHECK(mission_step(Degraded, {LeaderFailed}) == Handover);
    CHECK(mission_step(Degraded, {LeaderWeak}) == Handover);
    CHECK(mission_step(Handover, {HandoverComplete}) == Nominal);
    CHECK(mission_step(Degraded, {GpsRecovered}) == Nominal);
    CHECK(mission_step(Nominal, {CollisionBuffer}) == Degraded);
    CHECK(mission_step(Handover, {DrTimeout}) == Degraded);
    for (MissionState s : {Nominal, Degraded, Handover}) CHECK(mission_step(s, {}) == s);
  }

  TEST_CASE("mission graph is closed under every event sequence") {
    using enum MissionState;
    // Depth-4 enumeration over all 128 event subsets per step.
    std::vector<MissionState> frontier{Nominal};
    for (int depth = 0; depth < 4; ++depth) {
      std::vector<MissionState> next;
      for (MissionState s : frontier)
        for (int raw = 0; raw < 128; ++raw) {
          const MissionState t = mission_step(s, EventSet::from_raw(static_cast<std::uint8_t>(raw)));
          CHECK((t == Nominal || t == Degraded || t == Handover));
          CHECK(is_mission_arc(s, t));
          next.push_back(t);
        }
      std::sort(next.begin(), next.end());
      next.erase(std::unique(next.begin(), next.end()), next.end());
      frontier = next;
    }
    CHECK(frontier.size() == 3);
  }

  TEST_CASE("handover") {
    FormationSpec f;
    f.offsets = {{0, {0, 0}}, {1, {-20, 10}}, {2, {-20, -10}}};
    const SafetyConfig safety;

    Team weak({uav(0, 0, 0, false, Role::Leader), uav(1, 1, 1, true), uav(2, 0.5, 1, true)}, f);
    CHECK(weak.handover({}, safety) == 1);
    CHECK(weak.leader_id() == 1);
    CHECK(weak.leader_count() == 1);
    const Vec2 o = weak.formation().offsets.at(1);
    CHECK(o.x == 0.0);
    CHECK(o.y == 0.0);
    // Composing offsets keeps relative geometry: old leader now sits at (20, -10).
    CHECK(weak.formation().offsets.at(0).x == doctest::Approx(20.0));
    CHECK(weak.formation().offsets.at(0).y == doctest::Approx(-10.0));
    CHECK(weak.formation().offsets.at(2).y == doctest::Approx(-20.0));

    Team healthy({uav(0, 1, 1, true, Role::Leader), uav(1, 1, 1, true), uav(2, 1, 1, true)}, f);
    CHECK(healthy.handover({}, safety) == 0);

    Team tied({uav(0, 0, 0, false, Role::Leader), uav(2, 0.5, 1, true), uav(1, 0.5, 1, true)}, f);
    CHECK(tied.handover({}, safety) == 1);
    CHECK(tied.leader_count() == 1);

    Team dead({uav(0, 0, 0, false, Role::Leader), uav(1, 0.1, 0, false), uav(2, 0, 0.1, false)}, f);
    try {
      dead.handover({}, safety);
      FAIL("expected NoViableLeader");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NoViableLeader);
    }
  }
}
