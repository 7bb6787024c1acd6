/* C interface to the wmar library. All handles are opaque; free them with the matching *_free function. */

#ifndef WMAR_H
#define WMAR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum WmarStatus {
  WMAR_STATUS_OK = 0,
  WMAR_STATUS_NULL_POINTER = 1,
  WMAR_STATUS_INVALID_ARGUMENT = 2,
  WMAR_STATUS_IO = 3,
  WMAR_STATUS_PARSE = 4,
  WMAR_STATUS_INVALID_DATA = 5,
  WMAR_STATUS_GRAM_SINGULAR = 6,
  WMAR_STATUS_OUTSIDE_LOG_IMAGE = 7,
  WMAR_STATUS_PANIC = 8,
} WmarStatus;

/**
 * Output of a fit.
 */
typedef struct WmarFitReport WmarFitReport;

/**
 * A panel of `N` features observed at `T + 1` instants.
 */
typedef struct WmarSeries WmarSeries;

/**
 * Simulation settings; see [`wmar_sim_config_default`].
 */
typedef struct WmarSimConfig {
  size_t n;
  size_t t;
  size_t burn_in;
  double alpha;
  double density;
  uint64_t seed;
  double grid_h;
} WmarSimConfig;

/**
 * Estimation settings; see [`wmar_fit_options_default`].
 */
typedef struct WmarFitOptions {
  double tol;
  size_t max_iter;
  double ridge;
} WmarFitOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread, or an empty
 * string. The pointer stays valid until the next call into this library on
 * the same thread.
 */
const char *wmar_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *wmar_version(void);

struct WmarSimConfig wmar_sim_config_default(void);

struct WmarFitOptions wmar_fit_options_default(void);

/**
 * Simulate a raw series. When `coeffs_out` is non-null it receives the true
 * `n x n` coefficient matrix, row-major; `coeffs_len` must be at least `n * n`.
 *
 * # Safety
 * `config` must point to a valid config, `out` to writable storage for a
 * handle, and `coeffs_out` to `coeffs_len` writable doubles or be null.
 */
enum WmarStatus wmar_series_simulate(const struct WmarSimConfig *config,
                                     struct WmarSeries **out,
                                     double *coeffs_out,
                                     size_t coeffs_len);

/**
 * Build a series from quantile values laid out as `[feature][time][grid point]`.
 * Features are labelled `f1..fN`, instants `0..T`.
 *
 * # Safety
 * `values` must hold `n_features * n_times * grid_size` doubles; `out` must be writable.
 */
enum WmarStatus wmar_series_from_values(size_t n_features,
                                        size_t n_times,
                                        size_t grid_size,
                                        const double *values,
                                        struct WmarSeries **out);

/**
 * Read a grid-wide CSV (`feature,time,q_0,...`).
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum WmarStatus wmar_series_read_grid_csv(const char *path, struct WmarSeries **out);

/**
 * Read raw samples (`feature,time,value`) into empirical quantiles on a grid
 * of spacing `grid_h`.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum WmarStatus wmar_series_read_samples_csv(const char *path,
                                             double grid_h,
                                             struct WmarSeries **out);

/**
 * # Safety
 * `series` must be a live handle; `path` a NUL-terminated string.
 */
enum WmarStatus wmar_series_write_grid_csv(const struct WmarSeries *series, const char *path);

/**
 * Number of features, or 0 for a null handle.
 *
 * # Safety
 * `series` must be null or a live handle.
 */
size_t wmar_series_n_features(const struct WmarSeries *series);

/**
 * Number of instants `T + 1`, or 0 for a null handle.
 *
 * # Safety
 * `series` must be null or a live handle.
 */
size_t wmar_series_n_times(const struct WmarSeries *series);

/**
 * Number of grid points `M`, or 0 for a null handle.
 *
 * # Safety
 * `series` must be null or a live handle.
 */
size_t wmar_series_grid_size(const struct WmarSeries *series);

/**
 * Copy the quantile values of one cell into `out` (`len >= grid size`).
 *
 * # Safety
 * `series` must be a live handle and `out` point to `len` writable doubles.
 */
enum WmarStatus wmar_series_values(const struct WmarSeries *series,
                                   size_t feature,
                                   size_t time,
                                   double *out,
                                   size_t len);

/**
 * # Safety
 * `series` must be null or a handle not yet freed.
 */
void wmar_series_free(struct WmarSeries *series);

/**
 * Estimate the coefficient matrix. `options` may be null for defaults; a
 * nonzero `centered` skips mean removal.
 *
 * # Safety
 * `series` must be a live handle, `options` null or valid, `out` writable.
 */
enum WmarStatus wmar_fit(const struct WmarSeries *series,
                         const struct WmarFitOptions *options,
                         int centered,
                         struct WmarFitReport **out);

/**
 * Dimension `N` of the fitted model, or 0 for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
size_t wmar_report_n(const struct WmarFitReport *report);

/**
 * 1 when every row met the stopping tolerance, 0 otherwise or for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
int wmar_report_converged(const struct WmarFitReport *report);

/**
 * Copy the estimated coefficients, row-major, into `out` (`len >= N * N`).
 *
 * # Safety
 * `report` must be a live handle and `out` point to `len` writable doubles.
 */
enum WmarStatus wmar_report_coefficients(const struct WmarFitReport *report,
                                         double *out,
                                         size_t len);

/**
 * Serialize a report to JSON. Free the string with [`wmar_string_free`].
 *
 * # Safety
 * `report` must be a live handle and `out` writable.
 */
enum WmarStatus wmar_report_to_json(const struct WmarFitReport *report, char **out);

/**
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
enum WmarStatus wmar_report_from_json(const char *json, struct WmarFitReport **out);

/**
 * Forecast `horizon` steps past the last instant of `series`. The result has
 * one instant per step.
 *
 * # Safety
 * `report` and `series` must be live handles and `out` writable.
 */
enum WmarStatus wmar_report_forecast(const struct WmarFitReport *report,
                                     const struct WmarSeries *series,
                                     size_t horizon,
                                     struct WmarSeries **out);

/**
 * # Safety
 * `report` must be null or a handle not yet freed.
 */
void wmar_report_free(struct WmarFitReport *report);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void wmar_string_free(char *s);

/**
 * Wasserstein distance between two quantile functions on the same grid of
 * `grid_size` points.
 *
 * # Safety
 * `f` and `g` must point to `grid_size` doubles; `out` must be writable.
 */
enum WmarStatus wmar_wasserstein(const double *f, const double *g, size_t grid_size, double *out);

/**
 * Euclidean projection of `v` onto `{x >= 0, sum x <= 1}`; `out` may alias `v`.
 *
 * # Safety
 * `v` and `out` must point to `len` doubles.
 */
enum WmarStatus wmar_project_simplex(const double *v, size_t len, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WMAR_H */
