#include <algorithm>
#include <deque>
#include <set>

#include "ember/fuse.hpp"
#include "support.hpp"

using namespace ember;

namespace {

BandRegion band_of(const BitGrid& bits) { return BandRegion{bits, count_set(bits) == 0}; }

std::set<std::pair<int, int>> pixel_set(const BitGrid& g) {
  std::set<std::pair<int, int>> s;
  for (int y = 0; y < g.height(); ++y)
    for (int x = 0; x < g.width(); ++x)
      if (g(x, y)) s.insert({x, y});
  return s;
}

// Midpoint-circle rasterization, 8-connected and one pixel thick.
BitGrid midpoint_circle(int size, int cx, int cy, int r) {
  BitGrid g(size, size);
  int x = r, y = 0, err = 1 - r;
  while (x >= y) {
    for (auto [px, py] : {std::pair{x, y}, {y, x}, {-y, x}, {-x, y}, {-x, -y}, {-y, -x}, {y, -x}, {x, -y}})
      g(cx + px, cy + py) = 1;
    ++y;
    if (err < 0) {
      err += 2 * y + 1;
    } else {
      --x;
      err += 2 * (y - x) + 1;
    }
  }
  return g;
}

}  // namespace

TEST_SUITE("fuse") {
  TEST_CASE("gate with an empty band is empty") {
    const EdgeMap e{BitGrid(8, 8, 1), Grid<float>(8, 8, 1.0f)};
    CHECK(count_set(gate_edges(e, band_of(BitGrid(8, 8)), FusionConfig{})) == 0);
  }

  TEST_CASE("gate drops low-confidence edges") {
    const EdgeMap e{BitGrid(8, 8, 1), Grid<float>(8, 8, 0.1f)};
    CHECK(count_set(gate_edges(e, band_of(BitGrid(8, 8, 1)), FusionConfig{})) == 0);
  }

  TEST_CASE("gate counts edges in band above threshold") {
    EdgeMap e{BitGrid(20, 3), Grid<float>(20, 3)};
    BitGrid band(20, 3);
    for (int x = 0; x < 20; ++x) {
      e.bits(x, 1) = 1;
      e.confidence(x, 1) = 0.9f;
    }
    for (int x = 0; x < 12; ++x) band(x, 1) = 1;
    for (int x : {0, 5, 9}) e.confidence(x, 1) = 0.1f;
    const BitGrid c = gate_edges(e, band_of(band), FusionConfig{});
    CHECK(count_set(c) == 9);
  }

  TEST_CASE("gate checks dimensions") {
    const EdgeMap e{BitGrid(8, 8, 1), Grid<float>(8, 8, 1.0f)};
    try {
      gate_edges(e, band_of(BitGrid(7, 8, 1)), FusionConfig{});
      FAIL("expected DimensionMismatch");
    } catch (const Error& err) {
      CHECK(err.code() == ErrorCode::DimensionMismatch);
    }
  }

  TEST_CASE("prune by size and contrast") {
    Grid<float> conf(60, 6, 0.9f);
    BitGrid small(60, 6);
    for (int x = 0; x < 3; ++x) small(x, 0) = 1;
    CHECK(count_set(prune_fragments(small, conf, FusionConfig{})) == 0);

    BitGrid chain(60, 6);
    for (int x = 0; x < 50; ++x) chain(x, 2) = 1;
    CHECK(prune_fragments(chain, conf, FusionConfig{}) == chain);

    BitGrid two(60, 6);
    for (int x = 0; x < 4; ++x) two(x, 0) = 1;
    for (int x = 10; x < 16; ++x) two(x, 4) = 1;
    const BitGrid kept = prune_fragments(two, conf, FusionConfig{});
    CHECK(count_set(kept) == 6);
    CHECK(kept(10, 4) == 1);

    Grid<float> weak(60, 6, 0.25f);  // mean below 1.5 * 0.2
    CHECK(count_set(prune_fragments(chain, weak, FusionConfig{})) == 0);
  }

  TEST_CASE("carry-over keeps a pixel through short gaps") {
    CarryOverCache cache(3);
    const BitGrid band(5, 5, 1);
    BitGrid on(5, 5);
    on(2, 2) = 1;
    const BitGrid off(5, 5);
    CHECK(bridge_gaps(on, band, cache)(2, 2) == 1);
    CHECK(bridge_gaps(off, band, cache)(2, 2) == 1);
    CHECK(cache.age({2, 2}) == 1);
    CHECK(bridge_gaps(off, band, cache)(2, 2) == 1);
    CHECK(bridge_gaps(off, band, cache)(2, 2) == 1);
    CHECK(bridge_gaps(off, band, cache)(2, 2) == 0);
    CHECK(cache.age({2, 2}) == -1);
  }

  TEST_CASE("flickering pixel stays present") {
    CarryOverCache cache(3);
    const BitGrid band(3, 3, 1);
    for (int t = 0; t < 10; ++t) {
      BitGrid c(3, 3);
      c(1, 1) = t % 2 == 0;
      CHECK(bridge_gaps(c, band, cache)(1, 1) == 1);
      CHECK(cache.age({1, 1}) <= 1);
    }
  }

  TEST_CASE("carry-over re-admits only inside the band and follows the origin") {
    CarryOverCache cache(3);
    BitGrid c(6, 6);
    c(2, 2) = 1;
    bridge_gaps(c, BitGrid(6, 6, 1), cache, {10, 10});
    BitGrid narrow(6, 6);
    narrow(0, 0) = 1;
    CHECK(count_set(bridge_gaps(BitGrid(6, 6), narrow, cache, {11, 11})) == 0);
    // Camera moved by (+1, +1): absolute (12, 12) is now local (1, 1).
    const BitGrid out = bridge_gaps(BitGrid(6, 6), BitGrid(6, 6, 1), cache, {11, 11});
    CHECK(count_set(out) == 1);
    CHECK(out(1, 1) == 1);
  }

  TEST_CASE("polygonize basics") {
    CHECK(polygonize(BitGrid(5, 5)).chains.empty());

    BitGrid line(12, 3);
    for (int x = 1; x <= 10; ++x) line(x, 1) = 1;
    const RawPolylines r = polygonize(line, 77);
    REQUIRE(r.chains.size() == 1);
    CHECK(r.timestamp_us == 77);
    CHECK(r.chains[0].vertices.size() == 10);
    CHECK_FALSE(r.chains[0].closed);
  }

  TEST_CASE("polygonize a midpoint circle into one closed chain") {
    const BitGrid ring = midpoint_circle(21, 10, 10, 8);
    const RawPolylines r = polygonize(ring);
    REQUIRE(r.chains.size() == 1);
    CHECK(r.chains[0].closed);
    CHECK(r.chains[0].vertices.size() == count_set(ring));
    CHECK(count_set(ring) == 44);
    const auto& v = r.chains[0].vertices;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Pixel a = v[i], b = v[(i + 1) % v.size()];
      CHECK(std::max(std::abs(a.x - b.x), std::abs(a.y - b.y)) == 1);
    }
  }

  TEST_CASE("polygonize splits at junctions and orders longest first") {
    const BitGrid t = test::bits_from({
        "...........",
        ".#########.",
        ".....#.....",
        ".....#.....",
        ".....#.....",
        "...........",
    });
    const RawPolylines r = polygonize(t);
    REQUIRE(r.chains.size() >= 2);
    for (std::size_t i = 1; i < r.chains.size(); ++i)
      CHECK(r.chains[i - 1].vertices.size() >= r.chains[i].vertices.size());
    CHECK(polygonize(t).chains.size() == r.chains.size());
  }

  TEST_CASE("polygonize is lossless on degree-two sets") {
    Rng rng(4);
    for (int trial = 0; trial < 30; ++trial) {
      // Random disjoint horizontal and vertical runs of length >= 2.
      BitGrid g(40, 40);
      for (int k = 0; k < 8; ++k) {
        const int x = 2 * static_cast<int>(rng.below(19)) + 1;
        const int y = 4 * static_cast<int>(rng.below(9)) + 2;
        const int len = 2 + static_cast<int>(rng.below(5));
        bool clear = true;
        for (int i = -1; i <= len; ++i)
          for (int dy = -1; dy <= 1; ++dy)
            if (g.in_bounds(x + i, y + dy) && g(x + i, y + dy)) clear = false;
        if (!clear || x + len >= 40) continue;
        for (int i = 0; i < len; ++i) g(x + i, y) = 1;
      }
      std::set<std::pair<int, int>> covered;
      const RawPolylines r = polygonize(g);
      for (const auto& c : r.chains) {
        CHECK(c.vertices.size() >= 2);
        for (Pixel p : c.vertices) covered.insert({p.x, p.y});
      }
      CHECK(covered == pixel_set(g));
    }
  }

  TEST_CASE("gate, prune and thinning never add pixels") {
    Rng rng(12);
    for (int trial = 0; trial < 20; ++trial) {
      EdgeMap e{test::random_mask(30, 30, 0.4, rng), Grid<float>(30, 30)};
      for (std::size_t i = 0; i < e.bits.size(); ++i)
        e.confidence[i] = e.bits[i] ? static_cast<float>(rng.uniform()) : 0.0f;
      const BandRegion band = band_of(test::random_mask(30, 30, 0.7, rng));
      const BitGrid c = gate_edges(e, band, FusionConfig{});
      for (std::size_t i = 0; i < c.size(); ++i)
        if (c[i]) CHECK((e.bits[i] && band.bits[i]));
      const BitGrid p = prune_fragments(c, e.confidence, FusionConfig{});
      CHECK(test::subset(p, c));
      CHECK(test::subset(thin_lines(p), p));
    }
  }

  TEST_CASE("thinning leaves one-pixel-wide curves") {
    BitGrid thick(30, 12);
    for (int y = 3; y < 7; ++y)
      for (int x = 2; x < 28; ++x) thick(x, y) = 1;
    const BitGrid t = thin_lines(thick);
    CHECK(count_set(t) > 15);
    for (int y = 0; y < 12; ++y)
      for (int x = 0; x < 30; ++x)
        if (t(x, y)) CHECK(degree8(t, x, y) <= 2);
    CHECK(polygonize(t).chains.size() == 1);
  }
}
