#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <doctest.h>

#include "ember/core.hpp"
#include "ember/imaging.hpp"

namespace test {

inline ember::Frame frame_from(int w, int h, const std::vector<float>& v, double gsd = 1.0) {
  ember::Frame f;
  f.pixels = ember::Grid<float>(w, h);
  for (std::size_t i = 0; i < v.size(); ++i) f.pixels[i] = v[i];
  f.gsd = gsd;
  return f;
}

inline ember::Frame constant_frame(int w, int h, float v, double gsd = 1.0) {
  ember::Frame f;
  f.pixels = ember::Grid<float>(w, h, v);
  f.gsd = gsd;
  return f;
}

// Rows of '#' (set) and '.' (clear).
inline ember::BitGrid bits_from(const std::vector<std::string>& rows) {
  ember::BitGrid g(static_cast<int>(rows.front().size()), static_cast<int>(rows.size()));
  for (int y = 0; y < g.height(); ++y)
    for (int x = 0; x < g.width(); ++x) g(x, y) = rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] == '#';
  return g;
}

inline bool subset(const ember::BitGrid& a, const ember::BitGrid& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] && !b[i]) return false;
  return true;
}

inline ember::BitGrid random_mask(int w, int h, double p, ember::Rng& rng) {
  ember::BitGrid g(w, h);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = rng.bernoulli(p);
  return g;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("ember_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace test
