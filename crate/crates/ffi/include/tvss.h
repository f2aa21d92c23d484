#ifndef TVSS_H
#define TVSS_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TvssModel {
  TVSS_MODEL_SEASONAL = 0,
  TVSS_MODEL_BASELINE = 1,
} TvssModel;

/**
 * Result of a call. Codes 1 to 4 match the command-line exit codes.
 */
typedef enum TvssStatus {
  TVSS_STATUS_OK = 0,
  TVSS_STATUS_CONFIG_ERROR = 1,
  TVSS_STATUS_DATA_ERROR = 2,
  TVSS_STATUS_NUMERICAL_ERROR = 3,
  TVSS_STATUS_CHECK_FAILED = 4,
  TVSS_STATUS_NULL_POINTER = 10,
  TVSS_STATUS_BUFFER_TOO_SMALL = 11,
  TVSS_STATUS_PANIC = 12,
} TvssStatus;

/**
 * Retained posterior draws of one fit (opaque).
 */
typedef struct TvssFit TvssFit;

/**
 * An observed series (opaque).
 */
typedef struct TvssSeries TvssSeries;

/**
 * Run settings for [`tvss_fit`]; start from [`tvss_fit_options_default`].
 */
typedef struct TvssFitOptions {
  enum TvssModel model;
  uint64_t n_iter;
  uint64_t burn_in;
  uint64_t thin;
  uint64_t seed;
} TvssFitOptions;

/**
 * Prior constants; `xi0` set to NaN means the mean of the observed values.
 */
typedef struct TvssHyperparameters {
  double tau_shape;
  double tau_rate;
  double mu0_scale;
  double x0_scale;
  double state_intercept_scale;
  double state_slope_scale;
  double state_seasonal_scale;
  double obs_intercept_scale;
  double obs_slope_scale;
  double obs_seasonal_scale;
  double transition_scale;
  double observation_scale;
  double xi0;
} TvssHyperparameters;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failed call on this thread. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *tvss_last_error(void);

struct TvssFitOptions tvss_fit_options_default(void);

struct TvssHyperparameters tvss_hyperparameters_default(void);

/**
 * Copies `len` values (NaN marks a missing observation) into a new series.
 *
 * # Safety
 * `values` must point to `len` readable doubles and `out` to a writable pointer.
 */
enum TvssStatus tvss_series_new(const double *values,
                                size_t len,
                                size_t period,
                                struct TvssSeries **out);

/**
 * # Safety
 * `series` must be null or a pointer from [`tvss_series_new`] not yet freed.
 */
void tvss_series_free(struct TvssSeries *series);

/**
 * Number of time points, 0 for a null handle.
 *
 * # Safety
 * `series` must be null or a live series handle.
 */
size_t tvss_series_len(const struct TvssSeries *series);

/**
 * Runs the Gibbs sampler. Null `options` or `hyper` select the defaults.
 *
 * # Safety
 * `series` must be a live series handle, `options` and `hyper` null or
 * valid, and `out` a writable pointer.
 */
enum TvssStatus tvss_fit(const struct TvssSeries *series,
                         const struct TvssFitOptions *options,
                         const struct TvssHyperparameters *hyper,
                         struct TvssFit **out);

/**
 * # Safety
 * `fit` must be null or a pointer from [`tvss_fit`] not yet freed.
 */
void tvss_fit_free(struct TvssFit *fit);

/**
 * Number of retained draws, 0 for a null handle.
 *
 * # Safety
 * `fit` must be null or a live fit handle.
 */
size_t tvss_fit_draw_count(const struct TvssFit *fit);

/**
 * Copies the retained draws of quantity `name` (for example `tau`,
 * `x[288]` or `b1[288]`) into `out`. `written` receives the draw count,
 * also when `capacity` is too small.
 *
 * # Safety
 * `fit` must be a live fit handle, `name` a NUL-terminated string, `out`
 * writable for `capacity` doubles and `written` null or writable.
 */
enum TvssStatus tvss_fit_trace(const struct TvssFit *fit,
                               const char *name,
                               double *out,
                               size_t capacity,
                               size_t *written);

/**
 * Posterior-predictive median and `lower`/`upper` quantiles for steps
 * `1..=horizon`. Each output array must hold `horizon` doubles.
 *
 * # Safety
 * `fit` must be a live fit handle and the three arrays writable.
 */
enum TvssStatus tvss_forecast(const struct TvssFit *fit,
                              size_t horizon,
                              double lower,
                              double upper,
                              double *out_median,
                              double *out_lower,
                              double *out_upper);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TVSS_H */
