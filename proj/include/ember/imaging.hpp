#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <mutex>
#include <utility>
#include <vector>

#include "ember/core.hpp"

namespace ember {

enum class FrameKind { Thermal, Luminance };

// Timestamped intensity image in [0, 1] with its ground sample distance.
struct Frame {
  Grid<float> pixels;
  std::uint64_t timestamp_us = 0;
  double gsd = 1.0;  // meters per pixel
  FrameKind kind = FrameKind::Thermal;

  int width() const noexcept { return pixels.width(); }
  int height() const noexcept { return pixels.height(); }
};

// Checks the Frame invariants; throws on violation.
void validate(const Frame& frame);

struct ClipQuantiles {
  double low = 0.01;
  double high = 0.995;
};

// Nearest-rank quantile of an unsorted sample (p in [0, 1]).
double nearest_rank_quantile(std::vector<double> sample, double p);

// Linear radiometric scaling of raw counts with tail clipping.
Frame normalize_thermal(const Grid<double>& raw, ClipQuantiles clip = {},
                        std::uint64_t timestamp_us = 0, double gsd = 1.0);
Frame normalize_thermal(const Grid<std::uint16_t>& raw, ClipQuantiles clip = {},
                        std::uint64_t timestamp_us = 0, double gsd = 1.0);

// Rec.601 luma from registered RGB planes in [0, 1].
Frame rgb_to_luminance(const Grid<float>& r, const Grid<float>& g, const Grid<float>& b,
                       std::uint64_t timestamp_us = 0, double gsd = 1.0);

// Wraps a 16-bit luminance plane (full scale 65535) as a Luminance frame.
Frame luminance_from_u16(const Grid<std::uint16_t>& lum, std::uint64_t timestamp_us,
                         double gsd);

// Fixed-capacity, timestamp-ordered buffer of recent intermediates. One
// writer; readers take a copy through snapshot().
template <typename T>
class RingBuffer {
 public:
  struct Entry {
    std::uint64_t timestamp_us;
    T payload;
  };

  explicit RingBuffer(std::size_t capacity = 4) : capacity_(capacity) {
    if (capacity_ == 0) throw Error(ErrorCode::InvalidArgument, "ring capacity must be >= 1");
  }
  RingBuffer(const RingBuffer& other) : capacity_(other.capacity_), slots_(other.snapshot()) {}
  RingBuffer& operator=(const RingBuffer& other) {
    if (this != &other) {
      auto copy = other.snapshot();
      std::lock_guard lock(mutex_);
      capacity_ = other.capacity_;
      slots_ = std::move(copy);
    }
    return *this;
  }

  void push(std::uint64_t timestamp_us, T payload) {
    std::lock_guard lock(mutex_);
    if (!slots_.empty() && timestamp_us <= slots_.back().timestamp_us)
      throw Error(ErrorCode::NonMonotonicTimestamp,
                  "ring push timestamp " + std::to_string(timestamp_us) +
                      " not after newest " + std::to_string(slots_.back().timestamp_us));
    slots_.push_back(Entry{timestamp_us, std::move(payload)});
    while (slots_.size() > capacity_) slots_.pop_front();
  }

  std::deque<Entry> snapshot() const {
    std::lock_guard lock(mutex_);
    return slots_;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return slots_.size();
  }
  std::size_t capacity() const noexcept { return capacity_; }

 private:
  std::size_t capacity_;
  std::deque<Entry> slots_;
  mutable std::mutex mutex_;
};

// Netpbm I/O. PGM is read as raw counts (8- or 16-bit, P2 or P5); PBM masks
// are written as P4 and read from P1 or P4.
Grid<std::uint16_t> read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Grid<std::uint16_t>& counts,
               std::uint16_t maxval = 65535);
BitGrid read_pbm(const std::filesystem::path& path);
void write_pbm(const std::filesystem::path& path, const BitGrid& bits);

}  // namespace ember
