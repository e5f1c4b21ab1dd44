#include "ember/thermal_mask.hpp"

#include <algorithm>
#include <deque>

namespace ember {

CropRect margin_crop(int width, int height, int margin) {
  if (2 * margin >= width || 2 * margin >= height) return CropRect{0, 0, width, height};
  return CropRect{margin, margin, width - 2 * margin, height - 2 * margin};
}

int bin_index(float v, int levels) {
  const int b = static_cast<int>(std::floor(static_cast<double>(v) * (levels - 1) + 0.5));
  return std::clamp(b, 0, levels - 1);
}

Histogram histogram_from_counts(const std::vector<std::uint64_t>& counts) {
  Histogram h;
  h.p.assign(counts.size(), 0.0);
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  h.total_count = static_cast<std::size_t>(total);
  if (total == 0) return h;
  for (std::size_t i = 0; i < counts.size(); ++i)
    h.p[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  return h;
}

Histogram build_histogram(const Frame& frame, std::optional<CropRect> crop, int levels) {
  if (levels < 2) throw Error(ErrorCode::InvalidArgument, "histogram needs >= 2 levels");
  const CropRect c = crop.value_or(CropRect{0, 0, frame.width(), frame.height()});
  if (c.width <= 0 || c.height <= 0) throw Error(ErrorCode::EmptyCrop, "histogram crop is empty");
  if (c.x0 < 0 || c.y0 < 0 || c.x0 + c.width > frame.width() || c.y0 + c.height > frame.height())
    throw Error(ErrorCode::EmptyCrop, "histogram crop lies outside the frame");

  std::vector<std::uint64_t> counts(static_cast<std::size_t>(levels), 0);
  for (int y = c.y0; y < c.y0 + c.height; ++y)
    for (int x = c.x0; x < c.x0 + c.width; ++x) ++counts[bin_index(frame.pixels(x, y), levels)];
  return histogram_from_counts(counts);
}

OtsuResult otsu_threshold(const Histogram& h) {
  constexpr double kTieTolerance = 1e-12;
  const int L = h.levels();
  int first = -1, last = -1, nonzero = 0;
  for (int i = 0; i < L; ++i) {
    if (h.p[i] > 0.0) {
      if (first < 0) first = i;
      last = i;
      ++nonzero;
    }
  }
  if (nonzero < 2)
    throw Error(ErrorCode::DegenerateHistogram, "Otsu needs at least two occupied bins");

  double mu_total = 0.0;
  for (int i = 0; i < L; ++i) mu_total += i * h.p[i];

  OtsuResult out;
  out.curve.assign(static_cast<std::size_t>(L - 1), 0.0);
  double w0 = 0.0, s0 = 0.0;
  bool found = false;
  for (int t = 0; t <= L - 2; ++t) {
    w0 += h.p[t];
    s0 += t * h.p[t];
    // Both classes occupied iff first <= t < last.
    if (t < first || t >= last) continue;
    const double w1 = 1.0 - w0;
    const double mu0 = s0 / w0;
    const double mu1 = (mu_total - s0) / w1;
    const double d = mu0 - mu1;
    const double sigma = w0 * w1 * d * d;
    out.curve[t] = sigma;
    // Values equal up to rounding count as a tie; the smaller t is kept.
    if (!found || sigma > out.sigma_b2 * (1.0 + kTieTolerance)) {
      out.sigma_b2 = sigma;
      out.t_star = t;
      found = true;
    }
  }
  return out;
}

HotspotMask binarize(const Frame& frame, double threshold, int levels) {
  HotspotMask m{BitGrid(frame.width(), frame.height()), frame.timestamp_us};
  const auto& px = frame.pixels.data();
  auto& bits = m.bits.data();
  for (std::size_t i = 0; i < px.size(); ++i)
    bits[i] = static_cast<double>(bin_index(px[i], levels)) > threshold ? 1 : 0;
  return m;
}

int struct_radius(double gsd, double feature_scale_m) {
  if (!(gsd > 0.0)) throw Error(ErrorCode::InvalidArgument, "gsd must be positive");
  return std::max(1, static_cast<int>(std::lround(feature_scale_m / gsd)));
}

std::vector<int> disk_half_widths(int r) {
  std::vector<int> hw(static_cast<std::size_t>(2 * r + 1));
  for (int dy = -r; dy <= r; ++dy) {
    int w = 0;
    while ((w + 1) * (w + 1) + dy * dy <= r * r) ++w;
    hw[static_cast<std::size_t>(dy + r)] = w;
  }
  return hw;
}

namespace {

// Per-row prefix counts: P(y)[x] = number of set pixels in row y before x.
std::vector<std::vector<int>> row_prefix(const BitGrid& in) {
  std::vector<std::vector<int>> p(static_cast<std::size_t>(in.height()),
                                  std::vector<int>(static_cast<std::size_t>(in.width() + 1), 0));
  for (int y = 0; y < in.height(); ++y) {
    auto& row = p[static_cast<std::size_t>(y)];
    for (int x = 0; x < in.width(); ++x) row[x + 1] = row[x] + (in(x, y) ? 1 : 0);
  }
  return p;
}

}  // namespace

BitGrid dilate(const BitGrid& in, int r) {
  if (r <= 0) return in;
  const auto hw = disk_half_widths(r);
  const auto pre = row_prefix(in);
  BitGrid out(in.width(), in.height());
  const int w = in.width(), h = in.height();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int dy = -r; dy <= r; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= h) continue;
        const int half = hw[static_cast<std::size_t>(dy + r)];
        const int lo = std::max(0, x - half), hi = std::min(w - 1, x + half);
        const auto& row = pre[static_cast<std::size_t>(yy)];
        if (row[hi + 1] - row[lo] > 0) {
          out(x, y) = 1;
          break;
        }
      }
    }
  }
  return out;
}

BitGrid erode(const BitGrid& in, int r) {
  if (r <= 0) return in;
  const auto hw = disk_half_widths(r);
  const auto pre = row_prefix(in);
  BitGrid out(in.width(), in.height());
  const int w = in.width(), h = in.height();
  for (int y = r; y < h - r; ++y) {
    for (int x = r; x < w - r; ++x) {
      if (!in(x, y)) continue;
      bool keep = true;
      for (int dy = -r; dy <= r && keep; ++dy) {
        const int half = hw[static_cast<std::size_t>(dy + r)];
        const auto& row = pre[static_cast<std::size_t>(y + dy)];
        keep = row[x + half + 1] - row[x - half] == 2 * half + 1;
      }
      out(x, y) = keep ? 1 : 0;
    }
  }
  return out;
}

BitGrid open(const BitGrid& in, int r) { return dilate(erode(in, r), r); }

// The complement sees the outside as foreground, so it is padded before
// opening and cropped back; otherwise corners of an empty mask would close.
BitGrid close(const BitGrid& in, int r) {
  if (r <= 0) return in;
  const int w = in.width(), h = in.height(), pad = 2 * r;
  BitGrid padded(w + 2 * pad, h + 2 * pad, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) padded(x + pad, y + pad) = in(x, y) ? 0 : 1;
  const BitGrid opened = open(padded, r);
  BitGrid out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out(x, y) = opened(x + pad, y + pad) ? 0 : 1;
  return out;
}

BitGrid fill_holes(const BitGrid& in) {
  const int w = in.width(), h = in.height();
  BitGrid reached(w, h);
  std::deque<Pixel> queue;
  auto seed = [&](int x, int y) {
    if (!in(x, y) && !reached(x, y)) {
      reached(x, y) = 1;
      queue.push_back({x, y});
    }
  };
  for (int x = 0; x < w; ++x) {
    seed(x, 0);
    seed(x, h - 1);
  }
  for (int y = 0; y < h; ++y) {
    seed(0, y);
    seed(w - 1, y);
  }
  constexpr int dx4[] = {1, -1, 0, 0};
  constexpr int dy4[] = {0, 0, 1, -1};
  while (!queue.empty()) {
    const Pixel p = queue.front();
    queue.pop_front();
    for (int k = 0; k < 4; ++k) {
      const int nx = p.x + dx4[k], ny = p.y + dy4[k];
      if (in.in_bounds(nx, ny)) seed(nx, ny);
    }
  }
  BitGrid out(w, h);
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = (in[i] || !reached[i]) ? 1 : 0;
  return out;
}

HotspotMask morph_open_close(const HotspotMask& mask, int r) {
  if (r < 1) throw Error(ErrorCode::InvalidArgument, "structuring radius must be >= 1");
  return HotspotMask{fill_holes(close(open(mask.bits, r), r)), mask.timestamp_us};
}

MaskStabilizer::MaskStabilizer(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "EMA alpha must lie in (0, 1]");
}

double MaskStabilizer::update_threshold(double t_new) {
  t_ema_ = t_ema_ ? (1.0 - alpha_) * *t_ema_ + alpha_ * t_new : t_new;
  return *t_ema_;
}

HotspotMask MaskStabilizer::update_mask(const HotspotMask& mask_new, int shift_x, int shift_y) {
  const int w = mask_new.bits.width(), h = mask_new.bits.height();
  const bool fresh = !has_occupancy_ || occupancy_.width() != w || occupancy_.height() != h;
  Grid<double> next(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double observed = mask_new.bits(x, y) ? 1.0 : 0.0;
      const int ox = x + shift_x, oy = y + shift_y;
      if (fresh || !occupancy_.in_bounds(ox, oy)) {
        next(x, y) = observed;
      } else {
        next(x, y) = std::clamp((1.0 - alpha_) * occupancy_(ox, oy) + alpha_ * observed, 0.0, 1.0);
      }
    }
  }
  occupancy_ = std::move(next);
  has_occupancy_ = true;

  HotspotMask out{BitGrid(w, h), mask_new.timestamp_us};
  for (std::size_t i = 0; i < out.bits.size(); ++i)
    out.bits[i] = occupancy_[i] >= kDecisionLevel ? 1 : 0;
  return out;
}

MaskStabilizer::Output MaskStabilizer::stabilize(double t_new, const HotspotMask& mask_new) {
  const double t = update_threshold(t_new);
  return Output{t, update_mask(mask_new)};
}

}  // namespace ember
