/* ember C API: scenario runs, ablations, sweeps, offline tracking and the
 * guidance wire codec behind opaque handles and integer status codes.
 *
 * Every function returning ember_status records a message retrievable with
 * ember_last_error() on the calling thread. Strings returned through a
 * result handle stay valid until the handle is freed; strings returned via
 * char** are released with ember_string_free(). */
#ifndef EMBER_EMBER_H
#define EMBER_EMBER_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define EMBER_API __declspec(dllexport)
#else
#define EMBER_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ember_status {
  EMBER_OK = 0,
  EMBER_E_INVALID_ARGUMENT = 1,
  EMBER_E_EMPTY_FRAME,
  EMBER_E_NON_FINITE,
  EMBER_E_DIMENSION_MISMATCH,
  EMBER_E_NON_MONOTONIC_TIMESTAMP,
  EMBER_E_EMPTY_CROP,
  EMBER_E_DEGENERATE_HISTOGRAM,
  EMBER_E_FRAME_TOO_SMALL,
  EMBER_E_TOO_FEW_POINTS,
  EMBER_E_DEGENERATE_POLYLINE,
  EMBER_E_NO_VIABLE_LEADER,
  EMBER_E_DELTA_OVERFLOW,
  EMBER_E_COORDINATE_OVERFLOW,
  EMBER_E_VERTEX_COUNT_OVERFLOW,
  EMBER_E_CRC_MISMATCH,
  EMBER_E_TRUNCATED_FRAME,
  EMBER_E_BAD_MAGIC,
  EMBER_E_MALFORMED_FRAME,
  EMBER_E_DEGENERATE_POLYGON,
  EMBER_E_EMPTY_TRUTH,
  EMBER_E_EMPTY_SAMPLES,
  EMBER_E_CONFIG_INVALID,
  EMBER_E_MISSING_PAIR,
  EMBER_E_BAD_METADATA,
  EMBER_E_IO,
  EMBER_E_INTERNAL = 100
} ember_status;

typedef struct ember_config ember_config;
typedef struct ember_result ember_result;

EMBER_API const char* ember_version(void);
EMBER_API const char* ember_status_name(ember_status status);
EMBER_API const char* ember_last_error(void);

/* EMBER_THREADS when set, else hardware concurrency. */
EMBER_API unsigned ember_thread_cap(void);

/* ---- configs ---- */
EMBER_API ember_status ember_config_load(const char* path, ember_config** out);
EMBER_API ember_status ember_config_parse(const char* json_text, ember_config** out);
/* Dotted path or alias (k, loss_prob, beacon_hz, ...); value is JSON text,
 * bare words are taken as strings. */
EMBER_API ember_status ember_config_set(ember_config* cfg, const char* path, const char* value);
/* Validated config document as JSON text, owned by the handle. */
EMBER_API const char* ember_config_json(const ember_config* cfg);
EMBER_API void ember_config_free(ember_config* cfg);

/* ---- runs ---- */
typedef struct ember_run_options {
  int has_seed;
  uint64_t seed;
  const char* variant;    /* NULL keeps the config's variant */
  const char* out_dir;    /* NULL writes nothing */
  const char* export_dir; /* NULL skips frame export */
  unsigned threads;       /* 0 means ember_thread_cap() */
} ember_run_options;

EMBER_API void ember_run_options_init(ember_run_options* opts);

EMBER_API ember_status ember_run(const ember_config* cfg, const ember_run_options* opts,
                                 ember_result** out);

/* variants: comma separated names, NULL or "" for all six. */
EMBER_API ember_status ember_ablate(const ember_config* cfg, const char* variants, const char* out_dir,
                                    unsigned threads, ember_result** out);

/* axes: "k=1,2,4,8;loss_prob=0,0.2". */
EMBER_API ember_status ember_sweep(const ember_config* cfg, const char* axes, const char* out_dir,
                                   unsigned threads, ember_result** out);

/* cfg may be NULL for default perception parameters; variant may be NULL. */
EMBER_API ember_status ember_track(const char* in_dir, const char* out_dir, const ember_config* cfg,
                                   const char* variant, ember_result** out);

/* Main JSON document of a result: report, ablation table, sweep cells or
 * track summary. */
EMBER_API const char* ember_result_json(const ember_result* r);
/* NDJSON run log (runs only, else ""). */
EMBER_API const char* ember_result_log(const ember_result* r);
/* Stage latencies (runs only, else "{}"). */
EMBER_API const char* ember_result_timing(const ember_result* r);
/* Number of failed ablation variants or sweep cells. */
EMBER_API size_t ember_result_failures(const ember_result* r);
EMBER_API void ember_result_free(ember_result* r);

/* ---- wire codec ---- */
/* message_json: {"ts", "gsd", "eps_m", "x", "y", "psi", "v", "vertices": [[x, y], ...]} */
EMBER_API ember_status ember_encode(const char* message_json, char** hex_out);
EMBER_API ember_status ember_decode(const char* hex, char** message_json_out);
EMBER_API void ember_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* EMBER_EMBER_H */
