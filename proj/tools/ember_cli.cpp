// ember command line: thin wrapper over the C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ember/ember.h"

namespace {

int fail(ember_status s) {
  std::cerr << "error: " << ember_status_name(s) << ": " << ember_last_error() << "\n";
  return 1;
}

struct ConfigGuard {
  ember_config* cfg = nullptr;
  ~ConfigGuard() { ember_config_free(cfg); }
};

struct ResultGuard {
  ember_result* r = nullptr;
  ~ResultGuard() { ember_result_free(r); }
};

// Loads the config and applies --seed through the same override path as sweeps.
ember_status load(const std::string& path, const std::optional<std::uint64_t>& seed, ConfigGuard& g) {
  ember_status s = ember_config_load(path.c_str(), &g.cfg);
  if (s != EMBER_OK || !seed) return s;
  return ember_config_set(g.cfg, "seed", std::to_string(*seed).c_str());
}

bool read_input(const std::string& src, std::string& text) {
  if (src.empty() || src == "-") {
    text.assign(std::istreambuf_iterator<char>(std::cin), {});
    return true;
  }
  std::ifstream in(src, std::ios::binary);
  if (!in) return false;
  text.assign(std::istreambuf_iterator<char>(in), {});
  return true;
}

int emit(const std::string& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text << "\n";
    return 0;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f || !(f << text << "\n")) {
    std::cerr << "error: Io: cannot write " << out << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ember: thermal-RGB perimeter tracking simulator and tools"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ember_version()));

  std::string config, out, variant, axes, input, export_dir;
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "run one scenario and write log, report and timing");
  run->add_option("--config", config, "scenario JSON")->required();
  run->add_option("--seed", seed, "override the scenario seed");
  run->add_option("--out", out, "output directory");
  run->add_option("--variant", variant, "pipeline variant");
  run->add_option("--export-frames", export_dir, "write frame pairs for `track` here");

  auto* ablate = app.add_subcommand("ablate", "run every pipeline variant on a shared seed");
  ablate->add_option("--config", config, "scenario JSON")->required();
  ablate->add_option("--seed", seed, "override the scenario seed");
  ablate->add_option("--out", out, "output directory");
  ablate->add_option("--variant", variant, "comma separated variants (default: all)");

  auto* sweep = app.add_subcommand("sweep", "cross-product parameter sweep to CSV");
  sweep->add_option("--config", config, "scenario JSON")->required();
  sweep->add_option("--seed", seed, "override the scenario seed");
  sweep->add_option("--out", out, "output directory");
  sweep->add_option("--axes", axes, "e.g. \"k=1,2,4,8;loss_prob=0,0.2\"")->required();

  auto* track = app.add_subcommand("track", "perception only over exported frame pairs");
  track->add_option("input", input, "directory with NNNN_thermal.pgm, NNNN_rgb.pgm and track.json")->required();
  track->add_option("--out", out, "output directory")->required();
  track->add_option("--config", config, "scenario JSON supplying pipeline parameters");
  track->add_option("--variant", variant, "pipeline variant when RGB frames are present");

  auto* encode = app.add_subcommand("encode", "guidance message JSON to wire hex");
  encode->add_option("input", input, "message JSON file, or - for stdin");
  encode->add_option("--out", out, "output file (default stdout)");

  auto* decode = app.add_subcommand("decode", "wire hex to guidance message JSON");
  decode->add_option("input", input, "hex file, or - for stdin");
  decode->add_option("--out", out, "output file (default stdout)");

  CLI11_PARSE(app, argc, argv);
  const unsigned threads = ember_thread_cap();

  if (*run) {
    ConfigGuard cfg;
    if (ember_status s = load(config, seed, cfg)) return fail(s);
    ember_run_options o;
    ember_run_options_init(&o);
    o.variant = variant.empty() ? nullptr : variant.c_str();
    o.out_dir = out.empty() ? nullptr : out.c_str();
    o.export_dir = export_dir.empty() ? nullptr : export_dir.c_str();
    o.threads = threads;
    ResultGuard r;
    if (ember_status s = ember_run(cfg.cfg, &o, &r.r)) return fail(s);
    std::cout << ember_result_json(r.r) << "\n";
    return 0;
  }
  if (*ablate) {
    ConfigGuard cfg;
    if (ember_status s = load(config, seed, cfg)) return fail(s);
    ResultGuard r;
    if (ember_status s = ember_ablate(cfg.cfg, variant.c_str(), out.empty() ? nullptr : out.c_str(), threads, &r.r))
      return fail(s);
    if (out.empty()) std::cout << ember_result_json(r.r) << "\n";
    if (const size_t n = ember_result_failures(r.r)) {
      std::cerr << "error: " << n << " variant run(s) failed; see the error row\n";
      return 1;
    }
    return 0;
  }
  if (*sweep) {
    ConfigGuard cfg;
    if (ember_status s = load(config, seed, cfg)) return fail(s);
    ResultGuard r;
    if (ember_status s = ember_sweep(cfg.cfg, axes.c_str(), out.empty() ? nullptr : out.c_str(), threads, &r.r))
      return fail(s);
    if (out.empty()) std::cout << ember_result_json(r.r) << "\n";
    if (const size_t n = ember_result_failures(r.r)) {
      std::cerr << "error: " << n << " sweep cell(s) failed; see the error column\n";
      return 1;
    }
    return 0;
  }
  if (*track) {
    ConfigGuard cfg;
    if (!config.empty())
      if (ember_status s = load(config, std::nullopt, cfg)) return fail(s);
    ResultGuard r;
    if (ember_status s = ember_track(input.c_str(), out.c_str(), cfg.cfg, variant.empty() ? nullptr : variant.c_str(), &r.r))
      return fail(s);
    std::cout << ember_result_json(r.r) << "\n";
    return 0;
  }
  std::string text;
  if (!read_input(input, text)) {
    std::cerr << "error: Io: cannot read " << input << "\n";
    return 1;
  }
  char* result = nullptr;
  const ember_status s = *encode ? ember_encode(text.c_str(), &result) : ember_decode(text.c_str(), &result);
  if (s != EMBER_OK) return fail(s);
  const int rc = emit(out, result);
  ember_string_free(result);
  return rc;
}
