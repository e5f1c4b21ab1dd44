#include <cmath>
#include <numbers>

#include "ember/simplify.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace ember;

namespace {

Polyline random_walk(Rng& rng, int n) {
  Polyline p;
  Vec2 v{0, 0};
  double heading = 0.0;
  for (int i = 0; i < n; ++i) {
    p.push_back(v);
    heading += rng.gaussian(0.0, 0.4);
    v += Vec2{std::cos(heading), std::sin(heading)} * rng.uniform(0.2, 1.5);
  }
  return p;
}

Polyline circle(int n, double r) {
  Polyline p;
  for (int i = 0; i < n; ++i) {
    const double a = 2 * std::numbers::pi * i / n;
    p.push_back({r * std::cos(a), r * std::sin(a)});
  }
  return p;
}

}  // namespace

TEST_SUITE("simplify") {
  TEST_CASE("rdp examples") {
    CHECK(rdp({{0, 0}, {1, 0}, {2, 0}}, 0.1) == Polyline{{0, 0}, {2, 0}});
    CHECK(rdp({{0, 0}, {1, 1}, {2, 0}}, 0.5) == Polyline{{0, 0}, {1, 1}, {2, 0}});
    CHECK(rdp({{0, 0}, {1, 1}, {2, 0}}, 1.5) == Polyline{{0, 0}, {2, 0}});
    try {
      rdp({{0, 0}}, 1.0);
      FAIL("expected TooFewPoints");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::TooFewPoints);
    }
  }

  TEST_CASE("rdp bound, subsequence and monotonicity on random chains") {
    Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
      const Polyline p = random_walk(rng, 20 + static_cast<int>(rng.below(200)));
      const double eps = rng.uniform(0.1, 3.0);
      const auto idx = rdp_indices(p, eps);
      REQUIRE(idx.size() >= 2);
      CHECK(idx.front() == 0);
      CHECK(idx.back() == p.size() - 1);
      for (std::size_t i = 1; i < idx.size(); ++i) CHECK(idx[i - 1] < idx[i]);
      // Every dropped vertex lies within eps of the segment spanning it.
      for (std::size_t s = 0; s + 1 < idx.size(); ++s)
        for (std::size_t j = idx[s] + 1; j < idx[s + 1]; ++j)
          CHECK(oracle::seg_dist(p[j], p[idx[s]], p[idx[s + 1]]) <= eps + 1e-12);
      CHECK(rdp_indices(p, eps * 0.5).size() >= idx.size());
    }
  }

  TEST_CASE("closed rdp splits at the farthest pair") {
    const Polyline c = circle(200, 20.0);
    const Polyline s = rdp(c, 0.5, true);
    CHECK(s.size() >= 4);
    for (Vec2 v : c) CHECK(oracle::poly_dist(v, [&] {
                               Polyline q = s;
                               q.push_back(s.front());
                               return q;
                             }()) <= 0.5 + 1e-9);
  }

  TEST_CASE("constraints decimate a dense straight chain") {
    Polyline p;
    for (int i = 0; i <= 200; ++i) p.push_back({0.1 * i, 0.0});
    const Polyline out = enforce_constraints(p, {2.0, 25.0, 0.5});
    CHECK(out.front() == p.front());
    CHECK(out.back() == p.back());
    // 20 m of arc at >= 2 m spacing; the straight run collapses entirely.
    CHECK(out.size() <= 11);
    for (std::size_t i = 1; i + 1 < out.size(); ++i) CHECK(dist(out[i - 1], out[i]) >= 2.0 - 1e-9);
  }

  TEST_CASE("constraints keep a right angle and drop a slight wiggle") {
    const Polyline corner{{0, 0}, {10, 0}, {10, 10}};
    CHECK(enforce_constraints(corner, {2.0, 25.0, 0.5}) == corner);
    CHECK(turn_angle_deg({0, 0}, {10, 0}, {10, 10}) == doctest::Approx(90.0));

    const double h = 10.0 * std::tan(2.5 * std::numbers::pi / 180.0);
    const Polyline wiggle{{0, 0}, {10, h}, {20, 0}};
    CHECK(turn_angle_deg(wiggle[0], wiggle[1], wiggle[2]) == doctest::Approx(5.0).epsilon(1e-6));
    CHECK(enforce_constraints(wiggle, {2.0, 25.0, 1.0}) == Polyline{{0, 0}, {20, 0}});
  }

  TEST_CASE("constraints never move the curve beyond the tolerance") {
    Rng rng(44);
    for (int trial = 0; trial < 100; ++trial) {
      const Polyline p = random_walk(rng, 30 + static_cast<int>(rng.below(100)));
      const double tol = rng.uniform(0.2, 2.0);
      const Polyline out = enforce_constraints(p, {rng.uniform(0.5, 3.0), 25.0, tol});
      for (Vec2 v : p) CHECK(oracle::poly_dist(v, out) <= tol + 1e-9);
    }
  }

  TEST_CASE("smoothing") {
    const Polyline cur{{0, 0}, {10, 0}, {20, 0}};
    GuidancePolyline prev{{{0, 1}, {10, 1}, {20, 1}}, false, 0, 1.0, 2.0};
    CHECK(smooth_vertices(std::nullopt, cur, 0.3) == cur);
    CHECK(smooth_vertices(prev, cur, 1.0) == cur);
    GuidancePolyline same{cur, false, 0, 1.0, 2.0};
    CHECK(smooth_vertices(same, cur, 0.3) == cur);
    const Polyline s = smooth_vertices(prev, cur, 0.3);
    REQUIRE(s.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(s[i].x == doctest::Approx(cur[i].x));
      CHECK(s[i].y == doctest::Approx(0.7));
    }
  }

  TEST_CASE("vertex cap") {
    Rng rng(2);
    const Polyline ten = random_walk(rng, 10);
    CHECK(cap_vertices(ten, 64) == ten);

    const Polyline c = circle(500, 50.0);
    const Polyline capped = cap_vertices(c, 16, 0.05, true);
    CHECK(capped.size() <= 16);
    Polyline ring = capped;
    ring.push_back(capped.front());
    double dev = 0.0;
    for (Vec2 v : c) dev = std::max(dev, oracle::poly_dist(v, ring));
    MESSAGE("max radial deviation at K=16: " << dev);
    CHECK(dev < 50.0 * (1 - std::cos(std::numbers::pi / 8)) * 2.0 + 1e-9);

    const Polyline two = cap_vertices(random_walk(rng, 80), 2);
    CHECK(two.size() == 2);
    for (int k : {2, 3, 5, 9, 17}) CHECK(cap_vertices(random_walk(rng, 300), k).size() <= static_cast<std::size_t>(k));
  }

  TEST_CASE("pixel to world") {
    CHECK(pixel_to_world({{3, 4}}, {0, 0}, 1.0) == Polyline{{3, 4}});
    CHECK(pixel_to_world({{10, 20}}, {100, 50}, 0.5) == Polyline{{105, 60}});
    Rng rng(9);
    for (int i = 0; i < 1000; ++i) {
      const Vec2 origin{rng.uniform(-500, 500), rng.uniform(-500, 500)};
      const double gsd = rng.uniform(0.05, 2.0);
      const Vec2 w{origin.x + rng.uniform(0, 300) * gsd, origin.y + rng.uniform(0, 300) * gsd};
      const Vec2 back = pixel_to_world({world_to_pixel(w, origin, gsd)}, origin, gsd)[0];
      CHECK(std::abs(back.x - w.x) <= gsd / 2 + 1e-9);
      CHECK(std::abs(back.y - w.y) <= gsd / 2 + 1e-9);
    }
  }

  TEST_CASE("simplify_chain stays within tolerance of the dense chain") {
    SimplifyConfig cfg;
    const double gsd = 0.5;
    Rng rng(5);
    std::optional<GuidancePolyline> prev;
    for (int frame = 0; frame < 20; ++frame) {
      Polyline dense;
      for (int i = 0; i <= 120; ++i) {
        const double x = 0.25 * i;
        dense.push_back({x, 3.0 * std::sin(x / 5.0) + 0.05 * frame + rng.uniform(-0.1, 0.1)});
      }
      const GuidancePolyline g = simplify_chain(dense, false, cfg, gsd, 1000u * static_cast<unsigned>(frame), prev);
      CHECK(g.vertices.size() >= 2);
      CHECK(g.vertices.size() <= static_cast<std::size_t>(cfg.k_max_vertices));
      CHECK(g.eps_m == doctest::Approx(cfg.eps_m(gsd)));
      for (Vec2 v : dense) CHECK(oracle::poly_dist(v, g.vertices) <= cfg.eps_m(gsd) + 1e-9);
      prev = g;
    }
  }
}
