#ifndef MMBLOCK_H
#define MMBLOCK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum MmbStatus {
  MMB_STATUS_OK = 0,
  MMB_STATUS_NULL_POINTER = 1,
  MMB_STATUS_INVALID_PARAMETER = 2,
  MMB_STATUS_DEGENERATE_GEOMETRY = 3,
  MMB_STATUS_DOMAIN = 4,
  MMB_STATUS_NUMERICAL_FAILURE = 5,
  MMB_STATUS_NEVER_BLOCKED = 6,
  MMB_STATUS_BUFFER_TOO_SMALL = 7,
  MMB_STATUS_INTERNAL = 8,
} MmbStatus;

typedef enum MmbScenarioKind {
  MMB_SCENARIO_KIND_S1 = 1,
  MMB_SCENARIO_KIND_S2 = 2,
  MMB_SCENARIO_KIND_S3 = 3,
} MmbScenarioKind;

typedef enum MmbDistribution {
  /**
   * Residence time in the blockage zone.
   */
  MMB_DISTRIBUTION_RESIDENCE_TIME = 0,
  MMB_DISTRIBUTION_BLOCKED = 1,
  MMB_DISTRIBUTION_NON_BLOCKED = 2,
  MMB_DISTRIBUTION_RESIDUAL_BLOCKED = 3,
} MmbDistribution;

typedef enum MmbSimMode {
  MMB_SIM_MODE_RECTANGLE = 0,
  MMB_SIM_MODE_EXACT = 1,
} MmbSimMode;

/**
 * Opaque fitted model.
 */
typedef struct MmbModel MmbModel;

/**
 * Opaque simulated trace.
 */
typedef struct MmbTrace MmbTrace;

/**
 * Link geometry and blocker population. `c` is the S2 triangular mode;
 * pass NaN for the sidewalk midpoint.
 */
typedef struct MmbScenario {
  enum MmbScenarioKind kind;
  double h_t;
  double h_r;
  double h_b;
  double d_m;
  double r_0;
  double w_s;
  double alpha;
  double v;
  double lambda_i;
  double c;
} MmbScenario;

typedef struct MmbMetrics {
  double lambda;
  double e_t;
  double e_eta;
  double e_eta_numeric;
  double e_omega;
  double e_xi;
  double frac_los;
  double frac_nlos;
} MmbMetrics;

typedef struct MmbConditional {
  double delta_t;
  double p00;
  double p01;
  double p10;
  double p11;
  uint32_t terms_used;
} MmbConditional;

/**
 * One constant-state interval; `blocked` is 1 for NLOS.
 */
typedef struct MmbInterval {
  double start;
  double end;
  uint8_t blocked;
} MmbInterval;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static, NUL-terminated name of a status code.
 */
const char *mmb_status_string(enum MmbStatus status);

/**
 * Copies the calling thread's last error message into `buf` (truncated and
 * NUL-terminated) and returns the full message length excluding the NUL.
 * Returns 0 when no error has been recorded.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t mmb_last_error_message(char *buf, size_t len);

/**
 * Fills `out` with the baseline S1 scenario.
 *
 * # Safety
 * `out` must be null or point to a writable `MmbScenario`.
 */
enum MmbStatus mmb_scenario_default(struct MmbScenario *out);

/**
 * Builds the renewal model. `grid_intervals` of 0 selects the default.
 * On success `*out` owns a model to be released with [`mmb_model_free`].
 *
 * # Safety
 * `scenario` must be null or point to a valid `MmbScenario`; `out` must be
 * null or point to writable storage for one pointer.
 */
enum MmbStatus mmb_model_build(const struct MmbScenario *scenario,
                               uint32_t grid_intervals,
                               struct MmbModel **out);

/**
 * Releases a model; null is ignored.
 *
 * # Safety
 * `model` must be null or a pointer returned by [`mmb_model_build`] that
 * has not been freed.
 */
void mmb_model_free(struct MmbModel *model);

/**
 * # Safety
 * `model` must be null or a live model handle; `out` must be null or point
 * to a writable `MmbMetrics`.
 */
enum MmbStatus mmb_model_metrics(const struct MmbModel *model, struct MmbMetrics *out);

/**
 * Evaluates a CDF of the model at `n` points.
 *
 * # Safety
 * `model` must be a live handle; `xs` and `out` must each point to `n`
 * elements (readable and writable respectively), or be null when `n` is 0.
 */
enum MmbStatus mmb_model_cdf(const struct MmbModel *model,
                             enum MmbDistribution dist,
                             const double *xs,
                             double *out,
                             size_t n);

/**
 * Conditional state probabilities at `n` lags with series tolerance
 * `epsilon` (0 selects the default).
 *
 * # Safety
 * `model` must be a live handle; `delta_t` and `out` must each point to `n`
 * elements, or be null when `n` is 0.
 */
enum MmbStatus mmb_model_conditional(const struct MmbModel *model,
                                     const double *delta_t,
                                     size_t n,
                                     double epsilon,
                                     struct MmbConditional *out);

/**
 * Simulates `duration` seconds of the link. On success `*out` owns a trace
 * to be released with [`mmb_trace_free`].
 *
 * # Safety
 * `scenario` must point to a valid `MmbScenario`; `out` must point to
 * writable storage for one pointer.
 */
enum MmbStatus mmb_simulate(const struct MmbScenario *scenario,
                            double duration,
                            uint64_t seed,
                            enum MmbSimMode mode,
                            struct MmbTrace **out);

/**
 * Number of intervals in a trace; 0 for null.
 *
 * # Safety
 * `trace` must be null or a live trace handle.
 */
size_t mmb_trace_len(const struct MmbTrace *trace);

/**
 * Copies the trace intervals into `out`. Fails with `BufferTooSmall`,
 * writing nothing, when `capacity` is below [`mmb_trace_len`].
 *
 * # Safety
 * `trace` must be a live handle; `out` must point to `capacity` writable
 * elements, or be null when `capacity` is 0.
 */
enum MmbStatus mmb_trace_intervals(const struct MmbTrace *trace,
                                   struct MmbInterval *out,
                                   size_t capacity);

/**
 * Releases a trace; null is ignored.
 *
 * # Safety
 * `trace` must be null or a pointer returned by [`mmb_simulate`] that has
 * not been freed.
 */
void mmb_trace_free(struct MmbTrace *trace);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MMBLOCK_H */
