#ifndef QRE_H
#define QRE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum QreStatus {
  QRE_STATUS_OK = 0,
  /**
   * Numerical or I/O failure not covered below.
   */
  QRE_STATUS_FAILURE = 1,
  /**
   * Invalid or incomplete configuration.
   */
  QRE_STATUS_CONFIG = 2,
  /**
   * The requested environment cannot be realized.
   */
  QRE_STATUS_INFEASIBLE = 3,
  /**
   * A numerical guard tripped during propagation.
   */
  QRE_STATUS_GUARD = 4,
  /**
   * A required pointer argument was null or a string was not UTF-8.
   */
  QRE_STATUS_INVALID_ARGUMENT = 5,
  /**
   * Index outside the series.
   */
  QRE_STATUS_OUT_OF_RANGE = 6,
  /**
   * A Rust panic was caught at the boundary.
   */
  QRE_STATUS_PANIC = 7,
} QreStatus;

/**
 * Parsed and normalized scenario configuration.
 */
typedef struct QreConfig QreConfig;

/**
 * Recorded observables of one propagation run.
 */
typedef struct QreSeries QreSeries;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *qre_version(void);

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next `qre_*` call on the same thread.
 */
const char *qre_last_error_message(void);

/**
 * Parses a TOML configuration and fills scenario defaults.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` must be a valid pointer.
 */
enum QreStatus qre_config_parse(const char *toml, struct QreConfig **out);

/**
 * Releases a configuration; null is ignored.
 *
 * # Safety
 * `config` must come from [`qre_config_parse`] and not be freed twice.
 */
void qre_config_free(struct QreConfig *config);

/**
 * Overrides the time step, keeping the final time.
 *
 * # Safety
 * `config` must be a live handle.
 */
enum QreStatus qre_config_set_dt(struct QreConfig *config, double dt);

/**
 * Overrides the number of grid points.
 *
 * # Safety
 * `config` must be a live handle.
 */
enum QreStatus qre_config_set_grid_n(struct QreConfig *config, size_t n_points);

/**
 * The normalized configuration as TOML; release with [`qre_string_free`].
 *
 * # Safety
 * `config` must be a live handle; `out` a valid pointer.
 */
enum QreStatus qre_config_to_toml(const struct QreConfig *config, char **out);

/**
 * Releases a string returned by this library; null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void qre_string_free(char *s);

/**
 * Builds the scenario and runs the feasibility and step-size checks without
 * propagating.
 *
 * # Safety
 * `config` must be a live handle.
 */
enum QreStatus qre_validate(const struct QreConfig *config);

/**
 * Propagates the scenario. When `out_dir` is non-null the CSV and plot
 * script are also written there.
 *
 * # Safety
 * `config` must be a live handle; `out_dir` null or NUL-terminated; `out` valid.
 */
enum QreStatus qre_run(const struct QreConfig *config, const char *out_dir, struct QreSeries **out);

/**
 * Releases a series; null is ignored.
 *
 * # Safety
 * `series` must come from [`qre_run`] and not be freed twice.
 */
void qre_series_free(struct QreSeries *series);

/**
 * Number of recorded rows; 0 for null.
 *
 * # Safety
 * `series` must be null or a live handle.
 */
size_t qre_series_len(const struct QreSeries *series);

/**
 * Number of columns, comparators included; 0 for null.
 *
 * # Safety
 * `series` must be null or a live handle.
 */
size_t qre_series_column_count(const struct QreSeries *series);

/**
 * Column name as a NUL-terminated string owned by the series; null when out of range.
 *
 * # Safety
 * `series` must be null or a live handle.
 */
const char *qre_series_column_name(const struct QreSeries *series, size_t column);

/**
 * Value at (`row`, `column`). Optional quantities that were not recorded
 * (for example transmission outside the tunneling scenario) read as NaN.
 *
 * # Safety
 * `series` must be a live handle; `value` a valid pointer.
 */
enum QreStatus qre_series_get(const struct QreSeries *series,
                              size_t row,
                              size_t column,
                              double *value);

/**
 * The full CSV document (header, configuration echo, rows); release with
 * [`qre_string_free`].
 *
 * # Safety
 * `series` must be a live handle; `out` a valid pointer.
 */
enum QreStatus qre_series_to_csv(const struct QreSeries *series, char **out);

/**
 * Compares the split-operator propagator with the dense RK4 oracle over
 * `n_steps` steps (the configuration's grid must have at most 64 points) and
 * stores the Frobenius distance in `distance`.
 *
 * # Safety
 * `config` must be a live handle; `distance` a valid pointer.
 */
enum QreStatus qre_oracle_check(const struct QreConfig *config, size_t n_steps, double *distance);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QRE_H */
