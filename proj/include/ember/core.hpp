#pragma once

// Shared value types for the ember perception/guidance stack: error type,
// 2-D vectors, dense grids and the deterministic random source.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ember {

enum class ErrorCode {
  InvalidArgument,
  EmptyFrame,
  NonFinite,
  DimensionMismatch,
  NonMonotonicTimestamp,
  EmptyCrop,
  DegenerateHistogram,
  FrameTooSmall,
  TooFewPoints,
  DegeneratePolyline,
  NoViableLeader,
  DeltaOverflow,
  CoordinateOverflow,
  VertexCountOverflow,
  CrcMismatch,
  TruncatedFrame,
  BadMagic,
  MalformedFrame,
  DegeneratePolygon,
  EmptyTruth,
  EmptySamples,
  ConfigInvalid,
  MissingPair,
  BadMetadata,
  Io,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }
  Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double dist(Vec2 a, Vec2 b) { return norm(a - b); }

// Distance from p to the closed segment [a, b].
double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);

// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

struct Pixel {
  int x = 0;
  int y = 0;
  friend bool operator==(Pixel a, Pixel b) { return a.x == b.x && a.y == b.y; }
  friend bool operator<(Pixel a, Pixel b) {
    return a.y != b.y ? a.y < b.y : a.x < b.x;
  }
};

// Row-major dense 2-D grid.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(checked(width, height)), fill) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  bool in_bounds(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }
  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  // Replicate-border read.
  const T& clamped(int x, int y) const {
    x = x < 0 ? 0 : (x >= width_ ? width_ - 1 : x);
    y = y < 0 ? 0 : (y >= height_ ? height_ - 1 : y);
    return data_[index(x, y)];
  }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  bool same_shape(const Grid& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_;
  }
  friend bool operator==(const Grid& a, const Grid& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.data_ == b.data_;
  }

 private:
  static long checked(int w, int h) {
    if (w < 0 || h < 0) throw Error(ErrorCode::InvalidArgument, "negative grid dimension");
    return static_cast<long>(w) * static_cast<long>(h);
  }
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

// Binary grid, one byte per pixel (0 or 1).
using BitGrid = Grid<std::uint8_t>;

std::size_t count_set(const BitGrid& g);

template <typename T, typename U>
void require_same_shape(const Grid<T>& a, const Grid<U>& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height())
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + ": grid dimensions differ");
}

// SplitMix64 finalizer; used to derive independent per-stream seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0,
                       std::uint64_t d = 0);

// Deterministic random source. The engine is std::mt19937_64, whose output
// sequence is fixed by the standard; the distributions are written out here
// so draws are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool bernoulli(double p) { return uniform() < p; }
  double gaussian(double mean = 0.0, double stddev = 1.0);
  double exponential(double mean);
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ember
