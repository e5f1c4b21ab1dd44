#include <cstring>

#include "ember/comms.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace ember;

namespace {

GuidanceMessage message(Polyline v) {
  GuidanceMessage m;
  m.ts = 1234567890123ull;
  m.gsd = 0.5f;
  m.eps_m = 1.0f;
  m.x = 10.5f;
  m.y = -3.25f;
  m.psi = 1.5f;
  m.v = 12.0f;
  m.vertices = std::move(v);
  return m;
}

GuidanceMessage random_message(Rng& rng) {
  GuidanceMessage m;
  m.ts = rng.next_u64();
  m.gsd = static_cast<float>(rng.uniform(0.05, 2));
  m.eps_m = static_cast<float>(rng.uniform(0.1, 4));
  m.x = static_cast<float>(rng.uniform(-1e4, 1e4));
  m.y = static_cast<float>(rng.uniform(-1e4, 1e4));
  m.psi = static_cast<float>(rng.uniform(-3.14, 3.14));
  m.v = static_cast<float>(rng.uniform(0, 15));
  const int k = 1 + static_cast<int>(rng.below(64));
  Vec2 p{rng.uniform(-5000, 5000), rng.uniform(-5000, 5000)};
  for (int i = 0; i < k; ++i) {
    m.vertices.push_back(p);
    p += Vec2{rng.uniform(-300, 300), rng.uniform(-300, 300)};
  }
  return m;
}

std::int32_t read_i32(const WireFrame& f, std::size_t at) {
  std::uint32_t u = 0;
  for (int i = 3; i >= 0; --i) u = (u << 8) | f[at + static_cast<std::size_t>(i)];
  return static_cast<std::int32_t>(u);
}

std::int16_t read_i16(const WireFrame& f, std::size_t at) {
  return static_cast<std::int16_t>(f[at] | (f[at + 1] << 8));
}

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

}  // namespace

TEST_SUITE("comms") {
  TEST_CASE("frame length and layout") {
    const WireFrame one = encode(message({{100.0, 200.0}}));
    CHECK(one.size() == 46);
    CHECK(one[0] == 0xFE);
    CHECK(one[1] == 0x01);

    const WireFrame two = encode(message({{100.0, 200.0}, {100.3, 199.8}}));
    CHECK(two.size() == 50);
    CHECK(read_i32(two, 36) == 1000);
    CHECK(read_i32(two, 40) == 2000);
    CHECK(read_i16(two, 44) == 3);
    CHECK(read_i16(two, 46) == -2);
    const std::uint16_t crc = static_cast<std::uint16_t>(two[48] | (two[49] << 8));
    CHECK(crc == oracle::crc16(two.data(), 48));
  }

  TEST_CASE("encode errors") {
    CHECK(code_of([] { encode(message({{0, 0}, {40000, 0}})); }) == ErrorCode::DeltaOverflow);
    CHECK(code_of([] { encode(message({{3e8, 0}})); }) == ErrorCode::CoordinateOverflow);
    Polyline many(65536, Vec2{0, 0});
    CHECK(code_of([&] { encode(message(many)); }) == ErrorCode::VertexCountOverflow);
  }

  TEST_CASE("round trip") {
    Rng rng(77);
    for (int i = 0; i < 300; ++i) {
      const GuidanceMessage m = random_message(rng);
      const WireFrame f = encode(m);
      CHECK(f.size() == bit_budget(m.vertices.size()));
      const GuidanceMessage d = decode(f);
      CHECK(d.ts == m.ts);
      CHECK(std::memcmp(&d.gsd, &m.gsd, 4) == 0);
      CHECK(std::memcmp(&d.eps_m, &m.eps_m, 4) == 0);
      CHECK(std::memcmp(&d.x, &m.x, 4) == 0);
      CHECK(std::memcmp(&d.psi, &m.psi, 4) == 0);
      CHECK(d.v == m.v);
      REQUIRE(d.vertices.size() == m.vertices.size());
      for (std::size_t k = 0; k < d.vertices.size(); ++k) {
        CHECK(std::abs(d.vertices[k].x - m.vertices[k].x) <= 0.05 + 1e-9);
        CHECK(std::abs(d.vertices[k].y - m.vertices[k].y) <= 0.05 + 1e-9);
      }
      CHECK(from_hex(to_hex(f)) == f);
    }
  }

  TEST_CASE("every single-bit flip of a K=1 frame is rejected") {
    const WireFrame f = encode(message({{1.0, 2.0}}));
    REQUIRE(f.size() == 46);
    for (std::size_t bit = 0; bit < 8 * f.size(); ++bit) {
      WireFrame g = f;
      g[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
      CHECK(code_of([&] { decode(g); }) == ErrorCode::CrcMismatch);
    }
  }

  TEST_CASE("adjacent double-bit flips are rejected") {
    Rng rng(3);
    GuidanceMessage m = random_message(rng);
    m.vertices.resize(64, m.vertices.back());
    const WireFrame f = encode(m);
    REQUIRE(f.size() == 298);
    for (std::size_t bit = 0; bit + 1 < 8 * f.size(); ++bit) {
      WireFrame g = f;
      g[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
      g[(bit + 1) / 8] ^= static_cast<std::uint8_t>(1u << ((bit + 1) % 8));
      CHECK_THROWS_AS(decode(g), Error);
    }
  }

  TEST_CASE("decode validation") {
    WireFrame f = encode(message({{1.0, 2.0}}));
    WireFrame cut(f.begin(), f.begin() + 45);
    CHECK(code_of([&] { decode(cut); }) == ErrorCode::TruncatedFrame);
    WireFrame magic = f;
    magic[0] = 0xAB;
    const std::uint16_t c = crc16(magic.data(), magic.size() - 2);
    magic[44] = static_cast<std::uint8_t>(c & 0xFF);
    magic[45] = static_cast<std::uint8_t>(c >> 8);
    CHECK(code_of([&] { decode(magic); }) == ErrorCode::BadMagic);
  }

  TEST_CASE("crc16 check values") {
    const char* s = "123456789";
    CHECK(crc16(reinterpret_cast<const std::uint8_t*>(s), 9) == 0x29B1);
    CHECK(oracle::crc16(reinterpret_cast<const std::uint8_t*>(s), 9) == 0x29B1);
    CHECK(crc16(nullptr, 0) == 0xFFFF);
    const std::uint8_t zero = 0;
    CHECK(crc16(&zero, 1) == oracle::crc16(&zero, 1));
    CHECK(crc16(&zero, 1) == 0xE1F0);
    Rng rng(8);
    for (int i = 0; i < 200; ++i) {
      std::vector<std::uint8_t> b(rng.below(300));
      for (auto& x : b) x = static_cast<std::uint8_t>(rng.below(256));
      CHECK(crc16(b) == oracle::crc16(b.data(), b.size()));
    }
  }

  TEST_CASE("bit budget") {
    CHECK(bit_budget(1) == 46);
    CHECK(bit_budget(64) == 298);
    for (std::size_t k = 1; k < 64; ++k) CHECK(bit_budget(k + 1) - bit_budget(k) == 4);
  }

  TEST_CASE("channel loss and determinism") {
    const WireFrame f = encode(message({{0, 0}}));
    Channel lossless({0.0, 20.0, 1, 2.0});
    Channel lossy({1.0, 20.0, 1, 2.0});
    for (int i = 0; i < 100; ++i) {
      CHECK(lossless.send(0, f, 1000u * static_cast<unsigned>(i)));
      CHECK_FALSE(lossy.send(0, f, 1000u * static_cast<unsigned>(i)));
    }
    CHECK(lossless.poll(~0ull).size() == 100);
    CHECK(lossy.poll(~0ull).empty());

    auto trace = [&](std::uint64_t seed) {
      Channel ch({0.2, 20.0, seed, 2.0});
      std::vector<std::uint64_t> t;
      std::size_t delivered = 0;
      for (int i = 0; i < 10000; ++i) {
        ch.send(i % 3, f, 100000ull * static_cast<unsigned>(i));
        for (const auto& d : ch.poll(100000ull * static_cast<unsigned>(i))) {
          t.push_back(d.deliver_at_us);
          ++delivered;
        }
      }
      for (const auto& d : ch.poll(~0ull)) {
        t.push_back(d.deliver_at_us);
        ++delivered;
      }
      CHECK(static_cast<double>(delivered) / 10000.0 == doctest::Approx(0.8).epsilon(0.0125));
      return t;
    };
    CHECK(trace(42) == trace(42));
    CHECK(trace(42) != trace(43));
  }

  TEST_CASE("deliveries are ordered by time") {
    Channel ch({0.0, 50.0, 9, 2.0});
    const WireFrame f = encode(message({{0, 0}}));
    for (int i = 0; i < 50; ++i) ch.send(i, f, 1000);
    const auto d = ch.poll(~0ull);
    for (std::size_t i = 1; i < d.size(); ++i) CHECK(d[i - 1].deliver_at_us <= d[i].deliver_at_us);
  }
}
