#ifndef CDPR_H
#define CDPR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CdprStatus {
  CDPR_STATUS_OK = 0,
  CDPR_STATUS_NULL_POINTER = 1,
  CDPR_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Scenario text or values rejected.
   */
  CDPR_STATUS_CONFIG = 3,
  CDPR_STATUS_IO = 4,
  /**
   * The simulation aborted; the run handle still holds the partial log.
   */
  CDPR_STATUS_RUN_FAILED = 5,
  /**
   * Output buffer too small.
   */
  CDPR_STATUS_BUFFER_TOO_SMALL = 6,
  CDPR_STATUS_PANIC = 7,
} CdprStatus;

typedef struct CdprRun CdprRun;

typedef struct CdprScenario CdprScenario;

/**
 * Scalar results of a run. Angles in rad, lengths in m, tensions in N.
 */
typedef struct CdprMetrics {
  double rms_err_angle_transient;
  /**
   * NaN when the run ends inside the transient window.
   */
  double rms_err_angle_steady;
  double rms_position_error;
  double final_err_angle;
  double final_position_error;
  double max_tension;
  double min_tension;
  uint64_t clamp_events;
  double passivity_margin;
  double final_a_hat[7];
} CdprMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call into this library from the same thread.
 */
const char *cdpr_last_error_message(void);

/**
 * Static, NUL-terminated crate version.
 */
const char *cdpr_version(void);

/**
 * The shipped default scenario.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum CdprStatus cdpr_scenario_default(struct CdprScenario **out);

/**
 * Parses a TOML scenario.
 *
 * # Safety
 * `toml` must be NUL-terminated; `out` must be a valid pointer.
 */
enum CdprStatus cdpr_scenario_from_toml(const char *toml, struct CdprScenario **out);

/**
 * # Safety
 * `sc` must come from this library and not be used afterwards; null is a no-op.
 */
void cdpr_scenario_free(struct CdprScenario *sc);

/**
 * Selects the controller by CLI name (`so3`, `quat`, ...).
 *
 * # Safety
 * `sc` must be a live handle; `name` NUL-terminated.
 */
enum CdprStatus cdpr_scenario_set_controller(struct CdprScenario *sc, const char *name);

/**
 * `rigid` or `elastic`. Switching mode resets the step size and log
 * interval to the new mode's defaults.
 *
 * # Safety
 * `sc` must be a live handle; `mode` NUL-terminated.
 */
enum CdprStatus cdpr_scenario_set_cables(struct CdprScenario *sc, const char *mode);

/**
 * # Safety
 * `sc` must be a live handle.
 */
enum CdprStatus cdpr_scenario_set_duration(struct CdprScenario *sc, double seconds);

/**
 * Integration step; `0` restores the mode default.
 *
 * # Safety
 * `sc` must be a live handle.
 */
enum CdprStatus cdpr_scenario_set_dt(struct CdprScenario *sc, double seconds);

/**
 * Runs the scenario. On `Ok` or `RunFailed`, `*out` receives a run handle
 * holding the (possibly partial) log.
 *
 * # Safety
 * `sc` must be a live handle; `out` a valid pointer.
 */
enum CdprStatus cdpr_run(const struct CdprScenario *sc, struct CdprRun **out);

/**
 * # Safety
 * `run` must come from this library and not be used afterwards; null is a no-op.
 */
void cdpr_run_free(struct CdprRun *run);

/**
 * Number of logged rows; 0 for a null handle.
 *
 * # Safety
 * `run` must be a live handle or null.
 */
size_t cdpr_run_row_count(const struct CdprRun *run);

/**
 * Values per row, in the CSV column order.
 */
size_t cdpr_run_column_count(void);

/**
 * Copies all rows, row-major, into `buf` of `len` doubles
 * (`len >= rows * columns`).
 *
 * # Safety
 * `run` must be a live handle; `buf` valid for `len` writes.
 */
enum CdprStatus cdpr_run_rows(const struct CdprRun *run, double *buf, size_t len);

/**
 * # Safety
 * `run` must be a live handle; `out` a valid pointer.
 */
enum CdprStatus cdpr_run_metrics(const struct CdprRun *run, struct CdprMetrics *out);

/**
 * Writes `trajectory.csv` and `summary.json` into `dir`.
 *
 * # Safety
 * `run` must be a live handle; `dir` NUL-terminated.
 */
enum CdprStatus cdpr_run_write(const struct CdprRun *run, const char *dir);

/**
 * Runs one check suite (`identity`, `lemma`, `regressor`, `allocation`)
 * and stores 1 in `*passed` if every item passed.
 *
 * # Safety
 * `suite` must be NUL-terminated; `passed` a valid pointer.
 */
enum CdprStatus cdpr_check(const char *suite, uint64_t seed, int32_t *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CDPR_H */
