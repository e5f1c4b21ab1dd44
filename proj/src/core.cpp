#include "ember/core.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

namespace ember {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyFrame: return "EmptyFrame";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonMonotonicTimestamp: return "NonMonotonicTimestamp";
    case ErrorCode::EmptyCrop: return "EmptyCrop";
    case ErrorCode::DegenerateHistogram: return "DegenerateHistogram";
    case ErrorCode::FrameTooSmall: return "FrameTooSmall";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::DegeneratePolyline: return "DegeneratePolyline";
    case ErrorCode::NoViableLeader: return "NoViableLeader";
    case ErrorCode::DeltaOverflow: return "DeltaOverflow";
    case ErrorCode::CoordinateOverflow: return "CoordinateOverflow";
    case ErrorCode::VertexCountOverflow: return "VertexCountOverflow";
    case ErrorCode::CrcMismatch: return "CrcMismatch";
    case ErrorCode::TruncatedFrame: return "TruncatedFrame";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::MalformedFrame: return "MalformedFrame";
    case ErrorCode::DegeneratePolygon: return "DegeneratePolygon";
    case ErrorCode::EmptyTruth: return "EmptyTruth";
    case ErrorCode::EmptySamples: return "EmptySamples";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::MissingPair: return "MissingPair";
    case ErrorCode::BadMetadata: return "BadMetadata";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 <= 0.0) return dist(p, a);
  double t = dot(p - a, ab) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return dist(p, a + t * ab);
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

std::size_t count_set(const BitGrid& g) {
  return static_cast<std::size_t>(std::count_if(
      g.data().begin(), g.data().end(), [](std::uint8_t v) { return v != 0; }));
}

namespace {
std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}
}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
  std::uint64_t h = splitmix(a);
  h = splitmix(h ^ b);
  h = splitmix(h ^ c);
  h = splitmix(h ^ d);
  return h;
}

double Rng::gaussian(double mean, double stddev) {
  if (has_spare_) {
    has_spare_ = false;
    return mean + stddev * spare_;
  }
  // Box-Muller; u1 in (0, 1] keeps the log finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return mean + stddev * r * std::cos(theta);
}

double Rng::exponential(double mean) {
  if (mean <= 0.0) return 0.0;
  return -mean * std::log(1.0 - uniform());
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) return 0;
  // Rejection sampling to avoid modulo bias.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return v % n;
}

}  // namespace ember
