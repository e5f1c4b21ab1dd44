#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ember/core.hpp"
#include "ember/geometry.hpp"

namespace ember {

inline constexpr double kWireQuantumM = 0.1;

struct GuidanceMessage {
  std::uint64_t ts = 0;
  float gsd = 0.0f;
  float eps_m = 0.0f;
  float x = 0.0f;
  float y = 0.0f;
  float psi = 0.0f;
  float v = 0.0f;
  Polyline vertices;
};

using WireFrame = std::vector<std::uint8_t>;

std::uint16_t crc16(const std::uint8_t* data, std::size_t n);
inline std::uint16_t crc16(const std::vector<std::uint8_t>& b) { return crc16(b.data(), b.size()); }

// 42 + 4K octets.
std::size_t bit_budget(std::size_t k);

WireFrame encode(const GuidanceMessage& m);
GuidanceMessage decode(const WireFrame& frame);

std::string to_hex(const WireFrame& frame);
WireFrame from_hex(const std::string& text);  // whitespace ignored

struct ChannelModel {
  double loss_prob = 0.0;
  double latency_ms = 20.0;  // mean one-way delay
  std::uint64_t seed = 0;
  double beacon_hz = 2.0;
};

void validate(const ChannelModel& ch);

struct Delivery {
  std::uint64_t deliver_at_us = 0;
  int sender = 0;
  WireFrame frame;
};

// Single-hop broadcast with seeded loss and exponential latency. Frames are
// immutable once queued; delivery order is (time, send order).
class Channel {
 public:
  explicit Channel(ChannelModel model);

  // Returns false when the frame was dropped.
  bool send(int sender, WireFrame frame, std::uint64_t now_us);

  // Pops every delivery due at or before now_us.
  std::vector<Delivery> poll(std::uint64_t now_us);

  std::size_t pending() const noexcept { return queue_.size(); }
  std::uint64_t sent() const noexcept { return sent_; }
  std::uint64_t dropped() const noexcept { return dropped_; }
  std::uint64_t bytes_sent() const noexcept { return bytes_; }
  const ChannelModel& model() const noexcept { return model_; }

 private:
  struct Queued {
    Delivery d;
    std::uint64_t order;
  };
  ChannelModel model_;
  Rng rng_;
  std::vector<Queued> queue_;
  std::uint64_t sent_ = 0;
  std::uint64_t dropped_ = 0;
  std::uint64_t bytes_ = 0;
};

}  // namespace ember
