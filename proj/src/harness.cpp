#include "ember/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <thread>

#include "ember/comms.hpp"
#include "ember/imaging.hpp"

namespace ember {

using nlohmann::json;
namespace fs = std::filesystem;

unsigned thread_cap() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("EMBER_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(std::min<long>(v, 1024));
  }
  return hw;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
}

// Runs body(i) for i in [0, n) on up to `threads` workers; exceptions are the
// body's business.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F body) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) body(i);
    });
  for (auto& t : pool) t.join();
}

std::string json_cell(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

}  // namespace

RunArtifacts run_config(json doc, const RunRequest& req, const std::optional<fs::path>& out,
                        unsigned threads) {
  if (req.seed) doc["seed"] = *req.seed;
  const ScenarioConfig cfg = parse_scenario(doc);
  RunOptions opts;
  opts.variant = req.variant;
  opts.threads = std::max(1u, threads);
  opts.export_dir = req.export_dir;
  RunResult run = run_scenario(cfg, opts);

  RunArtifacts a;
  a.report = summarize(run, cfg, opts.variant.value_or(cfg.variant));
  a.report_json = to_json(a.report);
  a.timing_json = timing_json(run);
  a.log = std::move(run.log);
  if (out) {
    ensure_dir(*out);
    write_text(*out / "log.ndjson", a.log);
    write_text(*out / "report.json", a.report_json.dump(2) + "\n");
    write_text(*out / "timing.json", a.timing_json.dump(2) + "\n");
  }
  return a;
}

std::vector<AblationRow> ablate(const json& doc, const std::vector<Variant>& variants,
                                const std::optional<fs::path>& out, unsigned threads) {
  if (variants.empty()) throw Error(ErrorCode::InvalidArgument, "ablation needs at least one variant");
  const ScenarioConfig cfg = parse_scenario(doc);
  std::vector<AblationRow> rows(variants.size());
  parallel_for(variants.size(), threads, [&](std::size_t i) {
    rows[i].variant = variants[i];
    try {
      RunOptions opts;
      opts.variant = variants[i];
      rows[i].report = summarize(run_scenario(cfg, opts), cfg, variants[i]);
    } catch (const std::exception& e) {
      rows[i].error = e.what();
    }
  });

  if (out) {
    ensure_dir(*out);
    const auto cols = csv_columns();
    std::vector<std::vector<std::string>> values;
    for (const auto& r : rows)
      values.push_back(r.report ? csv_values(*r.report) : std::vector<std::string>(cols.size()));
    std::string csv = "metric";
    for (Variant v : variants) csv += std::string(",") + to_string(v);
    csv += ",Snakes,GrabCut\n";
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (cols[c] == "variant") continue;
      csv += cols[c];
      for (const auto& v : values) csv += "," + csv_escape(v[c]);
      csv += ",,\n";
    }
    csv += "error";
    for (const auto& r : rows) csv += "," + csv_escape(r.error);
    csv += ",,\n";
    write_text(*out / "ablation.csv", csv);

    json runs = json::array();
    for (const auto& r : rows) {
      if (r.report)
        runs.push_back(to_json(*r.report));
      else
        runs.push_back({{"variant", to_string(r.variant)}, {"error", r.error}});
    }
    json j{{"report_v", kReportVersion},
           {"scenario", cfg.name},
           {"seed", cfg.seed},
           {"runs", runs},
           {"baselines_not_run", json::array({"Snakes", "GrabCut"})}};
    write_text(*out / "ablation.json", j.dump(2) + "\n");
  }
  return rows;
}

std::vector<SweepAxis> parse_axes(const std::string& spec) {
  std::vector<SweepAxis> axes;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    const std::size_t semi = std::min(spec.find(';', pos), spec.size());
    const std::string part = trim(spec.substr(pos, semi - pos));
    pos = semi + 1;
    if (part.empty()) continue;
    const auto eq = part.find('=');
    if (eq == std::string::npos || eq == 0)
      throw Error(ErrorCode::InvalidArgument, "axis '" + part + "' is not name=v1,v2,...");
    SweepAxis axis;
    axis.path = trim(part.substr(0, eq));
    resolve_param_path(axis.path);
    const std::string list = part.substr(eq + 1);
    std::size_t p = 0;
    while (p <= list.size()) {
      const std::size_t comma = std::min(list.find(',', p), list.size());
      const std::string item = trim(list.substr(p, comma - p));
      p = comma + 1;
      if (item.empty()) throw Error(ErrorCode::InvalidArgument, "empty value in axis " + axis.path);
      json v = json::parse(item, nullptr, false);
      if (v.is_discarded() || v.is_structured()) v = item;
      axis.values.push_back(std::move(v));
    }
    for (const auto& a : axes)
      if (resolve_param_path(a.path) == resolve_param_path(axis.path))
        throw Error(ErrorCode::InvalidArgument, "axis " + axis.path + " given twice");
    axes.push_back(std::move(axis));
  }
  if (axes.empty()) throw Error(ErrorCode::InvalidArgument, "no sweep axes given");
  return axes;
}

std::vector<SweepCell> sweep(const json& doc, const std::vector<SweepAxis>& axes,
                             const std::optional<fs::path>& out, unsigned threads, std::size_t limit) {
  if (axes.empty()) throw Error(ErrorCode::InvalidArgument, "no sweep axes given");
  std::size_t total = 1;
  for (const auto& a : axes) {
    if (a.values.empty()) throw Error(ErrorCode::InvalidArgument, "axis " + a.path + " has no values");
    total *= a.values.size();
    if (total > limit)
      throw Error(ErrorCode::ConfigInvalid,
                  "sweep exceeds the limit of " + std::to_string(limit) + " runs");
  }
  parse_scenario(doc);  // the base document must be valid on its own
  // Paths absent from the document must still name config fields.
  for (const auto& a : axes) {
    std::string ptr = "/" + resolve_param_path(a.path);
    std::replace(ptr.begin(), ptr.end(), '.', '/');
    if (doc.contains(json::json_pointer(ptr))) continue;
    json d = doc;
    try {
      set_param(d, a.path, a.values.front());
      parse_scenario(d);
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigInvalid, "sweep axis " + a.path + ": " + e.what());
    }
  }

  std::vector<SweepCell> cells(total);
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t rem = i;
    cells[i].values.resize(axes.size());
    for (std::size_t a = axes.size(); a-- > 0;) {
      cells[i].values[a] = axes[a].values[rem % axes[a].values.size()];
      rem /= axes[a].values.size();
    }
  }

  std::ofstream csv;
  if (out) {
    ensure_dir(*out);
    csv.open(*out / "sweep.csv", std::ios::binary);
    if (!csv) throw Error(ErrorCode::Io, "cannot write " + (*out / "sweep.csv").string());
    std::string header;
    for (const auto& a : axes) header += csv_escape(a.path) + ",";
    for (const auto& c : csv_columns()) header += c + ",";
    csv << header << "error\n" << std::flush;
  }
  std::mutex mu;
  std::vector<char> done(total, 0);
  std::size_t next_row = 0;
  auto flush_rows = [&] {
    while (next_row < total && done[next_row]) {
      const SweepCell& c = cells[next_row++];
      if (!csv.is_open()) continue;
      std::string row;
      for (const auto& v : c.values) row += csv_escape(json_cell(v)) + ",";
      const auto vals = c.report ? csv_values(*c.report) : std::vector<std::string>(csv_columns().size());
      for (const auto& v : vals) row += csv_escape(v) + ",";
      csv << row << csv_escape(c.error) << "\n" << std::flush;
    }
  };

  parallel_for(total, threads, [&](std::size_t i) {
    SweepCell& c = cells[i];
    try {
      json d = doc;
      for (std::size_t a = 0; a < axes.size(); ++a) set_param(d, axes[a].path, c.values[a]);
      const ScenarioConfig cfg = parse_scenario(d);
      c.report = summarize(run_scenario(cfg, {}), cfg, cfg.variant);
    } catch (const std::exception& e) {
      c.error = e.what();
    }
    std::lock_guard lock(mu);
    done[i] = 1;
    flush_rows();
  });
  return cells;
}

namespace {

std::string frame_file(int id, const char* kind) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d_%s", id, kind);
  return buf;
}

}  // namespace

TrackResult track(const fs::path& in_dir, const fs::path& out, const PerceptionConfig& perception,
                  std::optional<Variant> variant) {
  const fs::path meta_path = in_dir / "track.json";
  json meta;
  {
    std::ifstream in(meta_path);
    if (!in) throw Error(ErrorCode::BadMetadata, "missing metadata " + meta_path.string());
    meta = json::parse(in, nullptr, false);
    if (meta.is_discarded() || !meta.is_object())
      throw Error(ErrorCode::BadMetadata, meta_path.string() + " is not a JSON object");
  }
  double gsd = 0.0;
  struct Entry {
    int id;
    std::uint64_t ts;
    Pixel origin;
  };
  std::vector<Entry> entries;
  try {
    gsd = meta.at("gsd").get<double>();
    for (const auto& f : meta.at("frames")) {
      const auto& o = f.at("origin_px");
      if (!o.is_array() || o.size() != 2) throw std::runtime_error("origin_px must be [x, y]");
      entries.push_back({f.at("id").get<int>(), f.at("timestamp_us").get<std::uint64_t>(),
                         {o[0].get<int>(), o[1].get<int>()}});
    }
  } catch (const std::exception& e) {
    throw Error(ErrorCode::BadMetadata, meta_path.string() + ": " + e.what());
  }
  if (!(gsd > 0.0)) throw Error(ErrorCode::BadMetadata, meta_path.string() + ": gsd must be positive");
  if (entries.empty()) throw Error(ErrorCode::BadMetadata, meta_path.string() + ": no frames listed");
  for (std::size_t i = 1; i < entries.size(); ++i)
    if (entries[i].ts <= entries[i - 1].ts)
      throw Error(ErrorCode::BadMetadata, meta_path.string() + ": timestamps must increase");

  std::size_t with_rgb = 0;
  for (const auto& e : entries) {
    const fs::path th = in_dir / (frame_file(e.id, "thermal") + ".pgm");
    if (!fs::exists(th)) throw Error(ErrorCode::MissingPair, "missing " + th.string());
    if (fs::exists(in_dir / (frame_file(e.id, "rgb") + ".pgm"))) ++with_rgb;
  }
  if (with_rgb != 0 && with_rgb != entries.size())
    for (const auto& e : entries) {
      const fs::path rgb = in_dir / (frame_file(e.id, "rgb") + ".pgm");
      if (!fs::exists(rgb)) throw Error(ErrorCode::MissingPair, "missing " + rgb.string());
    }

  TrackResult res;
  if (with_rgb == 0) {
    res.variant = Variant::ThermalOnly;
  } else if (variant) {
    res.variant = *variant;
  } else {
    res.variant = Variant::Fusion;
    if (meta.contains("variant")) {
      try {
        res.variant = parse_variant(meta["variant"].get<std::string>());
      } catch (const std::exception& e) {
        throw Error(ErrorCode::BadMetadata, meta_path.string() + ": " + e.what());
      }
    }
  }
  ensure_dir(out);

  PerceptionPipeline pipe(perception, res.variant);
  std::optional<std::pair<int, int>> dims;
  for (const auto& e : entries) {
    const fs::path th_path = in_dir / (frame_file(e.id, "thermal") + ".pgm");
    SensorInput in;
    in.thermal = read_pgm(th_path);
    if (!dims) dims = {in.thermal.width(), in.thermal.height()};
    if (dims->first != in.thermal.width() || dims->second != in.thermal.height())
      throw Error(ErrorCode::DimensionMismatch, th_path.string() + " differs in size from earlier frames");
    if (uses_rgb(res.variant)) {
      const fs::path rgb_path = in_dir / (frame_file(e.id, "rgb") + ".pgm");
      in.luminance = read_pgm(rgb_path);
      if (in.luminance->width() != in.thermal.width() || in.luminance->height() != in.thermal.height())
        throw Error(ErrorCode::DimensionMismatch,
                    rgb_path.string() + " and " + th_path.string() + " differ in size");
    }
    in.timestamp_us = e.ts;
    in.gsd = gsd;
    in.origin_px = e.origin;
    PerceptionResult r = pipe.process(in);

    TrackFrame tf;
    tf.id = e.id;
    tf.timestamp_us = e.ts;
    tf.polyline = r.polyline;
    for (std::size_t i = 0; i < r.mask.bits.size(); ++i) tf.mask_pixels += r.mask.bits[i] ? 1 : 0;
    write_pbm(out / (frame_file(e.id, "mask") + ".pbm"), r.mask.bits);

    std::string csv = "x_m,y_m\n";
    if (r.polyline)
      for (Vec2 v : r.polyline->vertices) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", v.x, v.y);
        csv += buf;
      }
    write_text(out / (frame_file(e.id, "polyline") + ".csv"), csv);

    if (r.polyline) {
      GuidanceMessage m;
      m.ts = e.ts;
      m.gsd = static_cast<float>(gsd);
      m.eps_m = static_cast<float>(r.polyline->eps_m);
      const Vec2 c = in.origin_m() + 0.5 * gsd * Vec2{in.thermal.width() - 1.0, in.thermal.height() - 1.0};
      m.x = static_cast<float>(c.x);
      m.y = static_cast<float>(c.y);
      m.vertices = r.polyline->vertices;
      write_text(out / (frame_file(e.id, "wire") + ".hex"), to_hex(encode(m)) + "\n");
    }
    res.frames.push_back(std::move(tf));
  }
  return res;
}

}  // namespace ember
