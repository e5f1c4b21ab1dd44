#include "ember/comms.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>

namespace ember {

std::uint16_t crc16(const std::uint8_t* data, std::size_t n) {
  static const auto table = [] {
    std::array<std::uint16_t, 256> t{};
    for (unsigned i = 0; i < 256; ++i) {
      std::uint16_t c = static_cast<std::uint16_t>(i << 8);
      for (int k = 0; k < 8; ++k) c = (c & 0x8000) ? static_cast<std::uint16_t>((c << 1) ^ 0x1021) : static_cast<std::uint16_t>(c << 1);
      t[i] = c;
    }
    return t;
  }();
  std::uint16_t crc = 0xFFFF;
  for (std::size_t i = 0; i < n; ++i)
    crc = static_cast<std::uint16_t>((crc << 8) ^ table[((crc >> 8) ^ data[i]) & 0xFF]);
  return crc;
}

std::size_t bit_budget(std::size_t k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "bit budget needs K >= 1");
  return 42 + 4 * k;
}

namespace {

void put_u(WireFrame& out, std::uint64_t v, int octets) {
  for (int i = 0; i < octets; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(WireFrame& out, float f) { put_u(out, std::bit_cast<std::uint32_t>(f), 4); }

std::uint64_t get_u(const WireFrame& in, std::size_t& pos, int octets) {
  std::uint64_t v = 0;
  for (int i = 0; i < octets; ++i) v |= static_cast<std::uint64_t>(in[pos++]) << (8 * i);
  return v;
}

float get_f32(const WireFrame& in, std::size_t& pos) {
  return std::bit_cast<float>(static_cast<std::uint32_t>(get_u(in, pos, 4)));
}

std::int64_t quantize(double v) {
  if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "vertex coordinate is not finite");
  const double q = std::round(v / kWireQuantumM);
  if (q > 2147483647.0 || q < -2147483647.0)
    throw Error(ErrorCode::CoordinateOverflow, "vertex coordinate exceeds the 32-bit wire range");
  return static_cast<std::int64_t>(q);
}

}  // namespace

WireFrame encode(const GuidanceMessage& m) {
  const std::size_t k = m.vertices.size();
  if (k < 1) throw Error(ErrorCode::TooFewPoints, "message needs at least one vertex");
  if (k > 65535) throw Error(ErrorCode::VertexCountOverflow, "more than 65535 vertices");
  for (float f : {m.gsd, m.eps_m, m.x, m.y, m.psi, m.v})
    if (!std::isfinite(f)) throw Error(ErrorCode::NonFinite, "message scalar is not finite");

  WireFrame out;
  out.reserve(bit_budget(k));
  out.push_back(0xFE);
  out.push_back(0x01);
  put_u(out, m.ts, 8);
  for (float f : {m.gsd, m.eps_m, m.x, m.y, m.psi, m.v}) put_f32(out, f);
  put_u(out, k, 2);

  std::int64_t px = quantize(m.vertices[0].x), py = quantize(m.vertices[0].y);
  put_u(out, static_cast<std::uint32_t>(static_cast<std::int32_t>(px)), 4);
  put_u(out, static_cast<std::uint32_t>(static_cast<std::int32_t>(py)), 4);
  for (std::size_t i = 1; i < k; ++i) {
    const std::int64_t qx = quantize(m.vertices[i].x), qy = quantize(m.vertices[i].y);
    const std::int64_t dx = qx - px, dy = qy - py;
    if (dx < -32768 || dx > 32767 || dy < -32768 || dy > 32767)
      throw Error(ErrorCode::DeltaOverflow, "vertex delta exceeds the 16-bit wire range");
    put_u(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(dx)), 2);
    put_u(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(dy)), 2);
    px = qx;
    py = qy;
  }
  put_u(out, crc16(out), 2);
  return out;
}

GuidanceMessage decode(const WireFrame& f) {
  if (f.size() < bit_budget(1)) throw Error(ErrorCode::TruncatedFrame, "frame shorter than 46 octets");
  const std::uint16_t want = static_cast<std::uint16_t>(f[f.size() - 2] | (f[f.size() - 1] << 8));
  if (crc16(f.data(), f.size() - 2) != want) throw Error(ErrorCode::CrcMismatch, "frame CRC mismatch");
  if (f[0] != 0xFE || f[1] != 0x01) throw Error(ErrorCode::BadMagic, "frame magic is not FE 01");

  GuidanceMessage m;
  std::size_t pos = 2;
  m.ts = get_u(f, pos, 8);
  m.gsd = get_f32(f, pos);
  m.eps_m = get_f32(f, pos);
  m.x = get_f32(f, pos);
  m.y = get_f32(f, pos);
  m.psi = get_f32(f, pos);
  m.v = get_f32(f, pos);
  const std::size_t k = get_u(f, pos, 2);
  if (k < 1) throw Error(ErrorCode::MalformedFrame, "frame declares zero vertices");
  if (f.size() < bit_budget(k)) throw Error(ErrorCode::TruncatedFrame, "frame shorter than its vertex count");
  if (f.size() > bit_budget(k)) throw Error(ErrorCode::MalformedFrame, "frame longer than its vertex count");

  std::int64_t qx = static_cast<std::int32_t>(get_u(f, pos, 4));
  std::int64_t qy = static_cast<std::int32_t>(get_u(f, pos, 4));
  m.vertices.reserve(k);
  m.vertices.push_back({qx * kWireQuantumM, qy * kWireQuantumM});
  for (std::size_t i = 1; i < k; ++i) {
    qx += static_cast<std::int16_t>(get_u(f, pos, 2));
    qy += static_cast<std::int16_t>(get_u(f, pos, 2));
    m.vertices.push_back({qx * kWireQuantumM, qy * kWireQuantumM});
  }
  return m;
}

std::string to_hex(const WireFrame& frame) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(frame.size() * 2);
  for (std::uint8_t b : frame) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 0xF]);
  }
  return s;
}

WireFrame from_hex(const std::string& text) {
  WireFrame out;
  int hi = -1;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    int v;
    if (c >= '0' && c <= '9') v = c - '0';
    else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
    else throw Error(ErrorCode::MalformedFrame, "non-hex character in frame text");
    if (hi < 0) {
      hi = v;
    } else {
      out.push_back(static_cast<std::uint8_t>(hi << 4 | v));
      hi = -1;
    }
  }
  if (hi >= 0) throw Error(ErrorCode::MalformedFrame, "odd number of hex digits");
  return out;
}

void validate(const ChannelModel& ch) {
  if (!(ch.loss_prob >= 0.0 && ch.loss_prob <= 1.0))
    throw Error(ErrorCode::ConfigInvalid, "loss_prob must lie in [0, 1]");
  if (!(ch.latency_ms >= 0.0)) throw Error(ErrorCode::ConfigInvalid, "latency_ms must be >= 0");
  if (!(ch.beacon_hz > 0.0)) throw Error(ErrorCode::ConfigInvalid, "beacon_hz must be positive");
}

Channel::Channel(ChannelModel model) : model_(model), rng_(model.seed) { validate(model_); }

bool Channel::send(int sender, WireFrame frame, std::uint64_t now_us) {
  ++sent_;
  bytes_ += frame.size();
  // Both draws happen on every send so the stream position depends only on call count.
  const double u = rng_.uniform();
  const double lat_ms = model_.latency_ms > 0.0 ? rng_.exponential(model_.latency_ms) : 0.0;
  if (u < model_.loss_prob) {
    ++dropped_;
    return false;
  }
  const auto delay = static_cast<std::uint64_t>(std::llround(lat_ms * 1000.0));
  queue_.push_back({Delivery{now_us + delay, sender, std::move(frame)}, sent_});
  return true;
}

std::vector<Delivery> Channel::poll(std::uint64_t now_us) {
  std::vector<Queued> due;
  std::vector<Queued> keep;
  for (auto& q : queue_) (q.d.deliver_at_us <= now_us ? due : keep).push_back(std::move(q));
  queue_ = std::move(keep);
  std::sort(due.begin(), due.end(), [](const Queued& a, const Queued& b) {
    return a.d.deliver_at_us != b.d.deliver_at_us ? a.d.deliver_at_us < b.d.deliver_at_us : a.order < b.order;
  });
  std::vector<Delivery> out;
  out.reserve(due.size());
  for (auto& q : due) out.push_back(std::move(q.d));
  return out;
}

}  // namespace ember
