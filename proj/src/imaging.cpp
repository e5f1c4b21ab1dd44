#include "ember/imaging.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace ember {

void validate(const Frame& frame) {
  if (frame.pixels.empty()) throw Error(ErrorCode::EmptyFrame, "frame has no pixels");
  if (!(frame.gsd > 0.0) || !std::isfinite(frame.gsd))
    throw Error(ErrorCode::InvalidArgument, "frame gsd must be positive");
  for (float v : frame.pixels.data())
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f)
      throw Error(ErrorCode::NonFinite, "frame intensity outside [0,1]");
}

double nearest_rank_quantile(std::vector<double> sample, double p) {
  if (sample.empty()) throw Error(ErrorCode::EmptyFrame, "quantile of empty sample");
  const auto n = static_cast<long>(sample.size());
  long rank = static_cast<long>(std::ceil(p * static_cast<double>(n)));
  const long idx = std::clamp(rank - 1, 0L, n - 1);
  std::nth_element(sample.begin(), sample.begin() + idx, sample.end());
  return sample[static_cast<std::size_t>(idx)];
}

Frame normalize_thermal(const Grid<double>& raw, ClipQuantiles clip, std::uint64_t timestamp_us,
                        double gsd) {
  if (raw.empty()) throw Error(ErrorCode::EmptyFrame, "thermal frame has zero pixels");
  if (!(clip.low >= 0.0 && clip.low < clip.high && clip.high <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "clip quantiles must satisfy 0 <= low < high <= 1");
  for (double v : raw.data())
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "raw thermal count is not finite");

  const double q_low = nearest_rank_quantile(raw.data(), clip.low);
  const double q_high = nearest_rank_quantile(raw.data(), clip.high);

  Frame out{Grid<float>(raw.width(), raw.height(), 0.0f), timestamp_us, gsd, FrameKind::Thermal};
  if (q_high > q_low) {
    const double scale = 1.0 / (q_high - q_low);
    auto& px = out.pixels.data();
    for (std::size_t i = 0; i < px.size(); ++i)
      px[i] = static_cast<float>(std::clamp((raw[i] - q_low) * scale, 0.0, 1.0));
  }
  return out;
}

Frame normalize_thermal(const Grid<std::uint16_t>& raw, ClipQuantiles clip,
                        std::uint64_t timestamp_us, double gsd) {
  Grid<double> counts(raw.width(), raw.height());
  for (std::size_t i = 0; i < raw.size(); ++i) counts[i] = raw[i];
  return normalize_thermal(counts, clip, timestamp_us, gsd);
}

Frame rgb_to_luminance(const Grid<float>& r, const Grid<float>& g, const Grid<float>& b,
                       std::uint64_t timestamp_us, double gsd) {
  require_same_shape(r, g, "rgb_to_luminance");
  require_same_shape(r, b, "rgb_to_luminance");
  Frame out{Grid<float>(r.width(), r.height()), timestamp_us, gsd, FrameKind::Luminance};
  for (std::size_t i = 0; i < r.size(); ++i)
    out.pixels[i] = static_cast<float>(0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i]);
  return out;
}

Frame luminance_from_u16(const Grid<std::uint16_t>& lum, std::uint64_t timestamp_us, double gsd) {
  Frame out{Grid<float>(lum.width(), lum.height()), timestamp_us, gsd, FrameKind::Luminance};
  for (std::size_t i = 0; i < lum.size(); ++i)
    out.pixels[i] = static_cast<float>(lum[i] / 65535.0);
  return out;
}

namespace {

// Reads the next whitespace/comment-delimited header token.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

int parse_int(const std::string& tok, const std::filesystem::path& path) {
  try {
    std::size_t used = 0;
    int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::Io, path.string() + ": bad netpbm header token '" + tok + "'");
  }
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return in;
}

}  // namespace

Grid<std::uint16_t> read_pgm(const std::filesystem::path& path) {
  auto in = open_in(path);
  const std::string magic = next_token(in);
  if (magic != "P5" && magic != "P2") throw Error(ErrorCode::Io, path.string() + ": not a PGM");
  const int w = parse_int(next_token(in), path);
  const int h = parse_int(next_token(in), path);
  const int maxval = parse_int(next_token(in), path);
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
    throw Error(ErrorCode::Io, path.string() + ": bad PGM dimensions");
  Grid<std::uint16_t> out(w, h);
  if (magic == "P2") {
    for (auto& v : out.data()) v = static_cast<std::uint16_t>(parse_int(next_token(in), path));
  } else if (maxval < 256) {
    std::vector<unsigned char> buf(out.size());
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size()))
      throw Error(ErrorCode::Io, path.string() + ": truncated PGM");
    for (std::size_t i = 0; i < buf.size(); ++i) out[i] = buf[i];
  } else {
    std::vector<unsigned char> buf(out.size() * 2);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size()))
      throw Error(ErrorCode::Io, path.string() + ": truncated PGM");
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = static_cast<std::uint16_t>((buf[2 * i] << 8) | buf[2 * i + 1]);
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const Grid<std::uint16_t>& counts,
               std::uint16_t maxval) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "P5\n" << counts.width() << ' ' << counts.height() << '\n' << maxval << '\n';
  if (maxval < 256) {
    for (auto v : counts.data()) out.put(static_cast<char>(std::min<int>(v, maxval)));
  } else {
    for (auto v : counts.data()) {
      const auto c = std::min<int>(v, maxval);
      out.put(static_cast<char>(c >> 8));
      out.put(static_cast<char>(c & 0xFF));
    }
  }
}

BitGrid read_pbm(const std::filesystem::path& path) {
  auto in = open_in(path);
  const std::string magic = next_token(in);
  if (magic != "P4" && magic != "P1") throw Error(ErrorCode::Io, path.string() + ": not a PBM");
  const int w = parse_int(next_token(in), path);
  const int h = parse_int(next_token(in), path);
  if (w <= 0 || h <= 0) throw Error(ErrorCode::Io, path.string() + ": bad PBM dimensions");
  BitGrid out(w, h);
  if (magic == "P1") {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        int c;
        do {
          c = in.get();
        } while (c != EOF && c != '0' && c != '1');
        if (c == EOF) throw Error(ErrorCode::Io, path.string() + ": truncated PBM");
        out(x, y) = c == '1' ? 1 : 0;
      }
    return out;
  }
  const int row_bytes = (w + 7) / 8;
  std::vector<unsigned char> row(static_cast<std::size_t>(row_bytes));
  for (int y = 0; y < h; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), row_bytes);
    if (in.gcount() != row_bytes) throw Error(ErrorCode::Io, path.string() + ": truncated PBM");
    for (int x = 0; x < w; ++x) out(x, y) = (row[x / 8] >> (7 - x % 8)) & 1;
  }
  return out;
}

void write_pbm(const std::filesystem::path& path, const BitGrid& bits) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "P4\n" << bits.width() << ' ' << bits.height() << '\n';
  const int row_bytes = (bits.width() + 7) / 8;
  std::vector<unsigned char> row(static_cast<std::size_t>(row_bytes));
  for (int y = 0; y < bits.height(); ++y) {
    std::fill(row.begin(), row.end(), 0);
    for (int x = 0; x < bits.width(); ++x)
      if (bits(x, y)) row[x / 8] |= static_cast<unsigned char>(1u << (7 - x % 8));
    out.write(reinterpret_cast<const char*>(row.data()), row_bytes);
  }
}

}  // namespace ember
