#include "ember/ember.h"

#include <cstring>
#include <string>

#include "ember/comms.hpp"
#include "ember/harness.hpp"

using nlohmann::json;

struct ember_config {
  json doc;
  std::string text;
};

struct ember_result {
  std::string json_text;
  std::string log;
  std::string timing = "{}";
  std::size_t failures = 0;
};

namespace {

thread_local std::string g_last_error;

ember_status status_of(ember::ErrorCode c) {
  return static_cast<ember_status>(static_cast<int>(c) + 1);
}

template <class F>
ember_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return EMBER_OK;
  } catch (const ember::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const json::exception& e) {
    g_last_error = e.what();
    return EMBER_E_CONFIG_INVALID;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return EMBER_E_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return EMBER_E_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw ember::Error(ember::ErrorCode::InvalidArgument, what);
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

json value_from_text(const char* text) {
  json v = json::parse(text, nullptr, false);
  if (v.is_discarded()) v = std::string(text);
  return v;
}

unsigned threads_or_cap(unsigned t) { return t ? t : ember::thread_cap(); }

json poly_json(const ember::Polyline& p) {
  json a = json::array();
  for (ember::Vec2 v : p) a.push_back({v.x, v.y});
  return a;
}

}  // namespace

extern "C" {

const char* ember_version(void) { return "1.0.0"; }

const char* ember_status_name(ember_status status) {
  if (status == EMBER_OK) return "Ok";
  if (status == EMBER_E_INTERNAL) return "Internal";
  const int c = static_cast<int>(status) - 1;
  if (c < 0 || c > static_cast<int>(ember::ErrorCode::Io)) return "Unknown";
  return ember::to_string(static_cast<ember::ErrorCode>(c));
}

const char* ember_last_error(void) { return g_last_error.c_str(); }

unsigned ember_thread_cap(void) { return ember::thread_cap(); }

ember_status ember_config_load(const char* path, ember_config** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = nullptr;
    json doc = ember::load_config_doc(path);
    ember::parse_scenario(doc);
    *out = new ember_config{doc, doc.dump()};
  });
}

ember_status ember_config_parse(const char* json_text, ember_config** out) {
  return guarded([&] {
    require(json_text && out, "null argument");
    *out = nullptr;
    json doc = json::parse(json_text, nullptr, false);
    if (doc.is_discarded()) throw ember::Error(ember::ErrorCode::ConfigInvalid, "config is not valid JSON");
    ember::parse_scenario(doc);
    *out = new ember_config{doc, doc.dump()};
  });
}

ember_status ember_config_set(ember_config* cfg, const char* path, const char* value) {
  return guarded([&] {
    require(cfg && path && value, "null argument");
    json doc = cfg->doc;
    ember::set_param(doc, path, value_from_text(value));
    ember::parse_scenario(doc);
    cfg->doc = std::move(doc);
    cfg->text = cfg->doc.dump();
  });
}

const char* ember_config_json(const ember_config* cfg) { return cfg ? cfg->text.c_str() : ""; }

void ember_config_free(ember_config* cfg) { delete cfg; }

void ember_run_options_init(ember_run_options* opts) {
  if (opts) *opts = ember_run_options{0, 0, nullptr, nullptr, nullptr, 0};
}

ember_status ember_run(const ember_config* cfg, const ember_run_options* opts, ember_result** out) {
  return guarded([&] {
    require(cfg && out, "null argument");
    *out = nullptr;
    ember_run_options o;
    ember_run_options_init(&o);
    if (opts) o = *opts;
    ember::RunRequest req;
    if (o.has_seed) req.seed = o.seed;
    if (o.variant && *o.variant) req.variant = ember::parse_variant(o.variant);
    if (o.export_dir && *o.export_dir) req.export_dir = o.export_dir;
    std::optional<std::filesystem::path> dir;
    if (o.out_dir && *o.out_dir) dir = o.out_dir;
    ember::RunArtifacts a = ember::run_config(cfg->doc, req, dir, threads_or_cap(o.threads));
    auto* r = new ember_result;
    r->json_text = a.report_json.dump(2);
    r->log = std::move(a.log);
    r->timing = a.timing_json.dump(2);
    *out = r;
  });
}

ember_status ember_ablate(const ember_config* cfg, const char* variants, const char* out_dir, unsigned threads,
                          ember_result** out) {
  return guarded([&] {
    require(cfg && out, "null argument");
    *out = nullptr;
    std::vector<ember::Variant> vs;
    if (variants && *variants) {
      std::string list = variants;
      std::size_t pos = 0;
      while (pos <= list.size()) {
        const std::size_t comma = std::min(list.find(',', pos), list.size());
        const std::string name = list.substr(pos, comma - pos);
        pos = comma + 1;
        if (!name.empty()) vs.push_back(ember::parse_variant(name));
      }
    } else {
      vs.assign(std::begin(ember::kAllVariants), std::end(ember::kAllVariants));
    }
    std::optional<std::filesystem::path> dir;
    if (out_dir && *out_dir) dir = out_dir;
    const auto rows = ember::ablate(cfg->doc, vs, dir, threads_or_cap(threads));
    auto* r = new ember_result;
    json runs = json::array();
    for (const auto& row : rows) {
      if (row.report) {
        runs.push_back(ember::to_json(*row.report));
      } else {
        runs.push_back({{"variant", ember::to_string(row.variant)}, {"error", row.error}});
        ++r->failures;
      }
    }
    r->json_text = json{{"report_v", ember::kReportVersion},
                        {"runs", runs},
                        {"baselines_not_run", json::array({"Snakes", "GrabCut"})}}
                       .dump(2);
    *out = r;
  });
}

ember_status ember_sweep(const ember_config* cfg, const char* axes, const char* out_dir, unsigned threads,
                         ember_result** out) {
  return guarded([&] {
    require(cfg && axes && out, "null argument");
    *out = nullptr;
    const auto parsed = ember::parse_axes(axes);
    std::optional<std::filesystem::path> dir;
    if (out_dir && *out_dir) dir = out_dir;
    const auto cells = ember::sweep(cfg->doc, parsed, dir, threads_or_cap(threads));
    auto* r = new ember_result;
    json names = json::array();
    for (const auto& a : parsed) names.push_back(a.path);
    json rows = json::array();
    for (const auto& c : cells) {
      json row{{"values", c.values}};
      if (c.report) {
        row["report"] = ember::to_json(*c.report);
        row["report"].erase("definitions");
      } else {
        row["error"] = c.error;
        ++r->failures;
      }
      rows.push_back(std::move(row));
    }
    r->json_text = json{{"axes", names}, {"cells", rows}}.dump(2);
    *out = r;
  });
}

ember_status ember_track(const char* in_dir, const char* out_dir, const ember_config* cfg, const char* variant,
                         ember_result** out) {
  return guarded([&] {
    require(in_dir && out_dir && out, "null argument");
    *out = nullptr;
    ember::PerceptionConfig pc;
    if (cfg) pc = ember::parse_scenario(cfg->doc).perception;
    std::optional<ember::Variant> v;
    if (variant && *variant) v = ember::parse_variant(variant);
    const ember::TrackResult t = ember::track(in_dir, out_dir, pc, v);
    json frames = json::array();
    for (const auto& f : t.frames) {
      json j{{"id", f.id}, {"timestamp_us", f.timestamp_us}, {"mask_pixels", f.mask_pixels}};
      if (f.polyline) {
        j["closed"] = f.polyline->closed;
        j["vertices"] = poly_json(f.polyline->vertices);
      } else {
        j["vertices"] = nullptr;
      }
      frames.push_back(std::move(j));
    }
    auto* r = new ember_result;
    r->json_text = json{{"variant", ember::to_string(t.variant)}, {"frames", frames}}.dump(2);
    *out = r;
  });
}

const char* ember_result_json(const ember_result* r) { return r ? r->json_text.c_str() : ""; }
const char* ember_result_log(const ember_result* r) { return r ? r->log.c_str() : ""; }
const char* ember_result_timing(const ember_result* r) { return r ? r->timing.c_str() : "{}"; }
size_t ember_result_failures(const ember_result* r) { return r ? r->failures : 0; }
void ember_result_free(ember_result* r) { delete r; }

ember_status ember_encode(const char* message_json, char** hex_out) {
  return guarded([&] {
    require(message_json && hex_out, "null argument");
    *hex_out = nullptr;
    const json j = json::parse(message_json);
    ember::GuidanceMessage m;
    m.ts = j.at("ts").get<std::uint64_t>();
    m.gsd = j.at("gsd").get<float>();
    m.eps_m = j.at("eps_m").get<float>();
    m.x = j.at("x").get<float>();
    m.y = j.at("y").get<float>();
    m.psi = j.at("psi").get<float>();
    m.v = j.at("v").get<float>();
    for (const auto& p : j.at("vertices")) {
      if (!p.is_array() || p.size() != 2)
        throw ember::Error(ember::ErrorCode::InvalidArgument, "vertices must be [x, y] pairs");
      m.vertices.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    *hex_out = dup(ember::to_hex(ember::encode(m)));
  });
}

ember_status ember_decode(const char* hex, char** message_json_out) {
  return guarded([&] {
    require(hex && message_json_out, "null argument");
    *message_json_out = nullptr;
    const ember::WireFrame f = ember::from_hex(hex);
    const ember::GuidanceMessage m = ember::decode(f);
    const json j{{"ts", m.ts},
                 {"gsd", m.gsd},
                 {"eps_m", m.eps_m},
                 {"x", m.x},
                 {"y", m.y},
                 {"psi", m.psi},
                 {"v", m.v},
                 {"k", m.vertices.size()},
                 {"octets", f.size()},
                 {"vertices", poly_json(m.vertices)}};
    *message_json_out = dup(j.dump());
  });
}

void ember_string_free(char* s) { std::free(s); }

}  // extern "C"
