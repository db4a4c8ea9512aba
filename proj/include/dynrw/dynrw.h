#ifndef DYNRW_H
#define DYNRW_H

/* C interface to the dynrw library. Every call returns a dynrw_status;
 * on failure dynrw_last_error() describes the most recent error of the
 * calling thread. Strings returned through char** are owned by the caller
 * and released with dynrw_string_free. Handles are not thread-safe. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DYNRW_API __declspec(dllexport)
#else
#define DYNRW_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  DYNRW_OK = 0,
  DYNRW_INVALID_ARGUMENT = 1,
  DYNRW_DOMAIN = 2,
  DYNRW_WINDOW_OVERFLOW = 3,
  DYNRW_CONTRACT_VIOLATION = 4,
  DYNRW_IO = 5,
  DYNRW_BUDGET = 6,
  DYNRW_CELL_FAILED = 7,
  DYNRW_INTERNAL = 8
} dynrw_status;

typedef enum { DYNRW_ENV_STATIC = 0, DYNRW_ENV_ISF = 1, DYNRW_ENV_SSE = 2 } dynrw_env_kind;
typedef enum { DYNRW_BOUNDARY_TORUS = 0, DYNRW_BOUNDARY_RESAMPLE = 1 } dynrw_boundary;
typedef enum { DYNRW_SSE_LAZY = 0, DYNRW_SSE_FORWARD = 1 } dynrw_sse_engine;
typedef enum { DYNRW_AXIS_P = 0, DYNRW_AXIS_RHO = 1, DYNRW_AXIS_GAMMA = 2 } dynrw_axis;

typedef struct {
  double p;
  double rho;
  double gamma;
  int env;      /* dynrw_env_kind */
  double walker_rate;
  int boundary; /* dynrw_boundary */
  int sse_engine; /* dynrw_sse_engine */
} dynrw_params;

typedef struct {
  int64_t displacement;
  uint64_t jumps;
  double elapsed_time;
  uint64_t seed;
  uint64_t stream;
  int aborted; /* 0 none, 1 window overflow, 2 budget */
} dynrw_endpoint;

typedef struct {
  int64_t l_star;
  double log2_nbar;
  int saturated;
} dynrw_reliable;

typedef struct dynrw_env dynrw_env;
typedef struct dynrw_grid dynrw_grid;
typedef struct dynrw_result dynrw_result;

typedef void (*dynrw_progress_fn)(const char* line, void* user);

DYNRW_API const char* dynrw_version(void);
DYNRW_API const char* dynrw_last_error(void);
DYNRW_API void dynrw_string_free(char* s);

/* Parameters */
DYNRW_API void dynrw_params_default(dynrw_params* out);
DYNRW_API dynrw_status dynrw_params_validate(const dynrw_params* params);
DYNRW_API dynrw_status dynrw_parse_env(const char* text, int* out);
DYNRW_API dynrw_status dynrw_parse_boundary(const char* text, int* out);
DYNRW_API dynrw_status dynrw_parse_sse_engine(const char* text, int* out);

/* Oracles */
DYNRW_API dynrw_status dynrw_static_speed(double p, double rho, double* out);
DYNRW_API dynrw_status dynrw_averaged_speed(double p, double rho, double* out);
DYNRW_API dynrw_status dynrw_kks_exponent(double p, double rho, double* out);
/* Regime and order names are static strings. */
DYNRW_API dynrw_status dynrw_classify_regime(double p, double rho, const char** regime,
                                             const char** order);
DYNRW_API dynrw_status dynrw_leaf_boundaries(double p, double* rho_upper, double* rho_lower);
DYNRW_API dynrw_status dynrw_trap_crossing_log2(double p, int64_t length, double* out);
/* cap <= 0 selects the default cap. */
DYNRW_API dynrw_status dynrw_reliable_steps(double p, double rho, double gamma, int64_t cap,
                                            dynrw_reliable* out);

/* Environments */
DYNRW_API dynrw_status dynrw_env_create(const dynrw_params* params, uint64_t n_jumps,
                                        uint64_t seed, uint64_t stream, dynrw_env** out);
/* state: 0 hole, 1 particle. */
DYNRW_API dynrw_status dynrw_env_query(dynrw_env* env, int64_t site, double t, int* state);
DYNRW_API dynrw_status dynrw_env_snapshot(const dynrw_env* env, char** out);
DYNRW_API void dynrw_env_free(dynrw_env* env);

/* Replicas */
/* Seed and stream of replica `replica` at (params, n) under `master`. */
DYNRW_API dynrw_status dynrw_replica_identity(uint64_t master, const dynrw_params* params,
                                              uint64_t n, uint64_t replica, uint64_t* seed,
                                              uint64_t* stream);
/* Runs one walk. With stride > 0 and trajectory non-null, writes
 * `jump,time,position` lines sampled every `stride` jumps. */
DYNRW_API dynrw_status dynrw_run_replica(const dynrw_params* params, uint64_t n, uint64_t seed,
                                         uint64_t stream, uint64_t stride, dynrw_endpoint* out,
                                         char** trajectory);

/* Grids */
DYNRW_API dynrw_status dynrw_grid_create(dynrw_grid** out);
DYNRW_API void dynrw_grid_free(dynrw_grid* grid);
DYNRW_API dynrw_status dynrw_grid_set_axis(dynrw_grid* grid, int axis, const double* values,
                                           size_t count);
DYNRW_API dynrw_status dynrw_grid_set_env(dynrw_grid* grid, int env);
DYNRW_API dynrw_status dynrw_grid_set_boundary(dynrw_grid* grid, int boundary);
DYNRW_API dynrw_status dynrw_grid_set_sse_engine(dynrw_grid* grid, int engine);
DYNRW_API dynrw_status dynrw_grid_set_walker_rate(dynrw_grid* grid, double rate);
DYNRW_API dynrw_status dynrw_grid_set_n_log2(dynrw_grid* grid, int n_log2);
DYNRW_API dynrw_status dynrw_grid_set_n_list(dynrw_grid* grid, const int* values, size_t count);
DYNRW_API dynrw_status dynrw_grid_set_samples(dynrw_grid* grid, size_t samples);
DYNRW_API dynrw_status dynrw_grid_set_seed(dynrw_grid* grid, uint64_t seed);
DYNRW_API dynrw_status dynrw_grid_set_threads(dynrw_grid* grid, unsigned threads);
/* Per-cell wall-clock budget; <= 0 disables it. */
DYNRW_API dynrw_status dynrw_grid_set_budget(dynrw_grid* grid, double seconds);
DYNRW_API dynrw_status dynrw_grid_set_progress(dynrw_grid* grid, dynrw_progress_fn fn,
                                               void* user);
/* Previous output to resume from. hist_csv is only read by scaling sweeps;
 * either argument may be null. */
DYNRW_API dynrw_status dynrw_grid_set_resume(dynrw_grid* grid, const char* csv,
                                             const char* hist_csv);

/* Runs. A result is produced even when cells fail; check
 * dynrw_result_failed_cells. */
DYNRW_API dynrw_status dynrw_sweep_speed(const dynrw_grid* grid, dynrw_result** out);
DYNRW_API dynrw_status dynrw_sweep_scaling(const dynrw_grid* grid, dynrw_result** out);
DYNRW_API dynrw_status dynrw_curve_diagram(const dynrw_grid* grid, dynrw_result** out);
/* Endpoint dump of `samples` replicas at one point. */
DYNRW_API dynrw_status dynrw_simulate(const dynrw_params* params, uint64_t n, size_t samples,
                                      uint64_t master_seed, unsigned threads,
                                      double budget_seconds, dynrw_result** out);

/* Main CSV: speed, scaling, curve labels or endpoints. */
DYNRW_API const char* dynrw_result_csv(const dynrw_result* result);
/* Histogram CSV of a scaling sweep, speed rows of a curve diagram, else "". */
DYNRW_API const char* dynrw_result_detail_csv(const dynrw_result* result);
/* JSON array with one object per cell. */
DYNRW_API const char* dynrw_result_summary_json(const dynrw_result* result);
DYNRW_API size_t dynrw_result_cells(const dynrw_result* result);
DYNRW_API size_t dynrw_result_failed_cells(const dynrw_result* result);
DYNRW_API size_t dynrw_result_skipped_cells(const dynrw_result* result);
DYNRW_API size_t dynrw_result_aborts(const dynrw_result* result);
DYNRW_API void dynrw_result_free(dynrw_result* result);

#ifdef __cplusplus
}
#endif

#endif
