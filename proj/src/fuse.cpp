#include "ember/fuse.hpp"

#include <algorithm>
#include <array>
#include <deque>

namespace ember {

void validate(const FusionConfig& cfg, std::size_t ring_capacity) {
  if (!(cfg.c_g > 0.0)) throw Error(ErrorCode::InvalidArgument, "fusion c_g must be positive");
  if (!(cfg.tau_e >= 0.0 && cfg.tau_e <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "fusion tau_e must lie in [0, 1]");
  if (cfg.min_fragment_px < 0) throw Error(ErrorCode::InvalidArgument, "min_fragment_px < 0");
  if (cfg.carry_frames < 0 || static_cast<std::size_t>(cfg.carry_frames) > ring_capacity)
    throw Error(ErrorCode::InvalidArgument, "carry_frames must lie in [0, ring capacity]");
}

BitGrid gate_edges(const EdgeMap& e, const BandRegion& band, const FusionConfig& cfg) {
  require_same_shape(e.bits, band.bits, "gate_edges");
  BitGrid c(e.bits.width(), e.bits.height());
  for (std::size_t i = 0; i < c.size(); ++i)
    c[i] = (e.bits[i] && band.bits[i] && e.confidence[i] >= cfg.tau_e) ? 1 : 0;
  return c;
}

namespace {

// Labels 8-connected components in row-major discovery order.
std::vector<std::vector<Pixel>> components8(const BitGrid& c) {
  std::vector<std::vector<Pixel>> out;
  BitGrid seen(c.width(), c.height());
  std::deque<Pixel> queue;
  for (int y = 0; y < c.height(); ++y)
    for (int x = 0; x < c.width(); ++x) {
      if (!c(x, y) || seen(x, y)) continue;
      std::vector<Pixel> comp;
      seen(x, y) = 1;
      queue.push_back({x, y});
      while (!queue.empty()) {
        const Pixel p = queue.front();
        queue.pop_front();
        comp.push_back(p);
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = p.x + dx, ny = p.y + dy;
            if (c.in_bounds(nx, ny) && c(nx, ny) && !seen(nx, ny)) {
              seen(nx, ny) = 1;
              queue.push_back({nx, ny});
            }
          }
      }
      out.push_back(std::move(comp));
    }
  return out;
}

}  // namespace

BitGrid prune_fragments(const BitGrid& c, const Grid<float>& confidence, const FusionConfig& cfg) {
  require_same_shape(c, confidence, "prune_fragments");
  BitGrid out(c.width(), c.height());
  const double min_mean = cfg.contrast_factor * cfg.tau_e;
  for (const auto& comp : components8(c)) {
    if (static_cast<int>(comp.size()) < cfg.min_fragment_px) continue;
    double sum = 0.0;
    for (Pixel p : comp) sum += confidence(p.x, p.y);
    if (sum / static_cast<double>(comp.size()) < min_mean) continue;
    for (Pixel p : comp) out(p.x, p.y) = 1;
  }
  return out;
}

int CarryOverCache::age(Pixel absolute) const {
  const auto it = ages_.find(key(absolute.x, absolute.y));
  return it == ages_.end() ? -1 : it->second;
}

BitGrid bridge_gaps(const BitGrid& c, const BitGrid& band, CarryOverCache& cache, Pixel origin) {
  require_same_shape(c, band, "bridge_gaps");
  for (auto it = cache.ages_.begin(); it != cache.ages_.end();) {
    if (++it->second > cache.carry_frames_) it = cache.ages_.erase(it);
    else ++it;
  }
  BitGrid out = c;
  for (const auto& [k, age] : cache.ages_) {
    const int ax = static_cast<int>(static_cast<std::int32_t>(static_cast<std::uint32_t>(k)));
    const int ay = static_cast<int>(k >> 32);
    const int x = ax - origin.x, y = ay - origin.y;
    if (out.in_bounds(x, y) && band(x, y)) out(x, y) = 1;
  }
  for (int y = 0; y < c.height(); ++y)
    for (int x = 0; x < c.width(); ++x)
      if (c(x, y)) cache.ages_[CarryOverCache::key(x + origin.x, y + origin.y)] = 0;
  return out;
}

namespace {

// Neighbours P2..P9 clockwise from north.
std::array<int, 8> ring8(const BitGrid& g, int x, int y) {
  auto at = [&](int xx, int yy) { return g.in_bounds(xx, yy) && g(xx, yy) ? 1 : 0; };
  return {at(x, y - 1), at(x + 1, y - 1), at(x + 1, y), at(x + 1, y + 1),
          at(x, y + 1), at(x - 1, y + 1), at(x - 1, y), at(x - 1, y - 1)};
}

// 8-connected foreground components among the ring pixels. Consecutive ring
// positions touch; so do two 4-neighbours separated by one diagonal.
int ring_components(const std::array<int, 8>& n) {
  int parent[8];
  for (int i = 0; i < 8; ++i) parent[i] = i;
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  auto join = [&](int a, int b) {
    if (n[a] && n[b]) parent[find(a)] = find(b);
  };
  for (int i = 0; i < 8; ++i) join(i, (i + 1) % 8);
  for (int i = 0; i < 8; i += 2) join(i, (i + 2) % 8);
  int c = 0;
  for (int i = 0; i < 8; ++i) c += (n[i] && find(i) == i) ? 1 : 0;
  return c;
}

int transitions(const std::array<int, 8>& n) {
  int a = 0;
  for (int i = 0; i < 8; ++i) a += (n[i] == 0 && n[(i + 1) % 8] == 1) ? 1 : 0;
  return a;
}

}  // namespace

BitGrid thin_lines(const BitGrid& in) {
  BitGrid g = in;
  const int w = g.width(), h = g.height();
  std::vector<Pixel> doomed;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int pass = 0; pass < 2; ++pass) {
      doomed.clear();
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          if (!g(x, y)) continue;
          const auto n = ring8(g, x, y);
          const int b = n[0] + n[1] + n[2] + n[3] + n[4] + n[5] + n[6] + n[7];
          if (b < 2 || b > 6 || transitions(n) != 1) continue;
          // n[0]=N, n[2]=E, n[4]=S, n[6]=W
          const bool ok = pass == 0 ? (n[0] * n[2] * n[4] == 0 && n[2] * n[4] * n[6] == 0)
                                    : (n[0] * n[2] * n[6] == 0 && n[0] * n[4] * n[6] == 0);
          if (ok) doomed.push_back({x, y});
        }
      for (Pixel p : doomed) g(p.x, p.y) = 0;
      changed = changed || !doomed.empty();
    }
  }
  // Staircase corners: a pixel bridging two perpendicular 4-neighbours that
  // are already 8-adjacent to each other is redundant when it is simple.
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!g(x, y)) continue;
      const auto n = ring8(g, x, y);
      const int b = n[0] + n[1] + n[2] + n[3] + n[4] + n[5] + n[6] + n[7];
      if (b < 2 || ring_components(n) != 1) continue;
      const bool corner = (n[0] && n[2]) || (n[2] && n[4]) || (n[4] && n[6]) || (n[6] && n[0]);
      if (corner) g(x, y) = 0;
    }
  return g;
}

int degree8(const BitGrid& g, int x, int y) {
  int d = 0;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx)
      if ((dx || dy) && g.in_bounds(x + dx, y + dy) && g(x + dx, y + dy)) ++d;
  return d;
}

namespace {

constexpr int kDx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
constexpr int kDy[8] = {0, 1, 1, 1, 0, -1, -1, -1};

class ChainTracer {
 public:
  explicit ChainTracer(const BitGrid& c) : c_(c), used_(c.width(), c.height()), deg_(c.width(), c.height()) {
    for (int y = 0; y < c.height(); ++y)
      for (int x = 0; x < c.width(); ++x)
        if (c(x, y)) deg_(x, y) = static_cast<std::uint8_t>(degree8(c, x, y));
  }

  int degree(int x, int y) const { return deg_(x, y); }

  // First unused edge direction at p, or -1.
  int free_edge(Pixel p) const {
    for (int k = 0; k < 8; ++k) {
      const int nx = p.x + kDx[k], ny = p.y + kDy[k];
      if (c_.in_bounds(nx, ny) && c_(nx, ny) && !(used_(p.x, p.y) & (1u << k))) return k;
    }
    return -1;
  }

  Pixel take(Pixel p, int k) {
    const Pixel q{p.x + kDx[k], p.y + kDy[k]};
    used_(p.x, p.y) |= static_cast<std::uint8_t>(1u << k);
    used_(q.x, q.y) |= static_cast<std::uint8_t>(1u << ((k + 4) % 8));
    return q;
  }

 private:
  const BitGrid& c_;
  Grid<std::uint8_t> used_;
  Grid<std::uint8_t> deg_;
};

}  // namespace

RawPolylines polygonize(const BitGrid& c, std::uint64_t timestamp_us) {
  RawPolylines out;
  out.timestamp_us = timestamp_us;
  ChainTracer tracer(c);
  const int w = c.width(), h = c.height();

  // Open chains between endpoints and junctions.
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!c(x, y)) continue;
      const int d = tracer.degree(x, y);
      if (d == 0 || d == 2) continue;
      const Pixel start{x, y};
      for (int k; (k = tracer.free_edge(start)) >= 0;) {
        PixelChain chain;
        chain.vertices.push_back(start);
        Pixel cur = tracer.take(start, k);
        chain.vertices.push_back(cur);
        while (tracer.degree(cur.x, cur.y) == 2) {
          const int next = tracer.free_edge(cur);
          if (next < 0) break;
          cur = tracer.take(cur, next);
          chain.vertices.push_back(cur);
        }
        out.chains.push_back(std::move(chain));
      }
    }

  // Remaining edges belong to cycles of degree-2 pixels.
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!c(x, y)) continue;
      const Pixel start{x, y};
      int k = tracer.free_edge(start);
      if (k < 0) continue;
      PixelChain chain;
      chain.closed = true;
      chain.vertices.push_back(start);
      Pixel cur = tracer.take(start, k);
      while (!(cur == start)) {
        chain.vertices.push_back(cur);
        const int next = tracer.free_edge(cur);
        if (next < 0) {
          chain.closed = false;
          break;
        }
        cur = tracer.take(cur, next);
      }
      if (chain.vertices.size() >= 2) out.chains.push_back(std::move(chain));
    }

  std::stable_sort(out.chains.begin(), out.chains.end(),
                   [](const PixelChain& a, const PixelChain& b) {
                     if (a.vertices.size() != b.vertices.size())
                       return a.vertices.size() > b.vertices.size();
                     return a.vertices.front() < b.vertices.front();
                   });
  return out;
}

}  // namespace ember
