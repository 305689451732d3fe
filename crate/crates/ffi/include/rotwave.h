#ifndef ROTWAVE_H
#define ROTWAVE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RwStatus {
  RW_STATUS_OK = 0,
  RW_STATUS_NULL_POINTER = 1,
  RW_STATUS_INVALID_ARGUMENT = 2,
  RW_STATUS_NUMERICAL = 3,
  RW_STATUS_CONFIG = 4,
  RW_STATUS_IO = 5,
  /**
   * The call sequence was wrong, e.g. asking for a spectrum before freezing.
   */
  RW_STATUS_STATE = 6,
  RW_STATUS_PANIC = 7,
} RwStatus;

/**
 * Theoretical decay rates for `(A, B_inf)` in dimension `d` at exponent `p`.
 */
typedef struct RwBudget RwBudget;

/**
 * A pipeline run: config, then simulate and freeze, then spectrum and decay.
 */
typedef struct RwRun RwRun;

typedef struct RwPRange {
  double p_min;
  double p_max;
  /**
   * First antieigenvalue of the diffusion matrix.
   */
  double mu1;
} RwPRange;

typedef struct RwProfileRates {
  double nu;
  double mu_pro;
  double mu_pro_max;
  double beta_inf;
} RwProfileRates;

typedef struct RwEigenRates {
  double eps;
  double mu_eig;
  double mu_eig_max;
  /**
   * Nonzero when the eigenvalue lies right of `-beta_inf`.
   */
  int32_t applicable;
} RwEigenRates;

typedef struct RwFit {
  /**
   * Slope of `ln |w|` against `r`.
   */
  double slope;
  double intercept;
  double r_squared;
  size_t points;
  double ndr_log10;
  double ndr_natural;
} RwFit;

typedef struct RwFrame {
  double s12;
  double tau1;
  double tau2;
  double x_star1;
  double x_star2;
  /**
   * Final time of the freezing run.
   */
  double t;
  double residual;
} RwFrame;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a successful call.
 * The pointer stays valid until the next `rw_` call on the same thread.
 */
const char *rw_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rw_version(void);

/**
 * Admissible exponents for the real `n x n` diffusion matrix `a` (row-major).
 *
 * # Safety
 * `a` must point to `n * n` readable doubles and `out` to a writable [`RwPRange`].
 */
enum RwStatus rw_p_range(const double *a, size_t n, struct RwPRange *out);

/**
 * # Safety
 * `a` and `b` must each point to `n * n` readable doubles (row-major); `out` must be writable.
 * The handle is released with [`rw_budget_free`].
 */
enum RwStatus rw_budget_new(const double *a,
                            const double *b,
                            size_t n,
                            size_t d,
                            double p,
                            struct RwBudget **out);

/**
 * # Safety
 * `h` must come from [`rw_budget_new`] and `out` must be writable.
 */
enum RwStatus rw_budget_profile(const struct RwBudget *h, struct RwProfileRates *out);

/**
 * # Safety
 * `h` must come from [`rw_budget_new`] and `out` must be writable.
 */
enum RwStatus rw_budget_eigen(const struct RwBudget *h,
                              double re,
                              double im,
                              struct RwEigenRates *out);

/**
 * # Safety
 * `h` must come from [`rw_budget_new`] or be null; it must not be used afterwards.
 */
void rw_budget_free(struct RwBudget *h);

/**
 * `2F1(a, b; c; z)` for real arguments with `z < 1`.
 *
 * # Safety
 * `out` must be writable.
 */
enum RwStatus rw_gauss_2f1(double a, double b, double c, double z, double *out);

/**
 * Log-linear fit of `values` (magnitudes) against `radii` on the window `[lo, hi]`.
 *
 * # Safety
 * `radii` and `values` must point to `n` readable doubles; `out` must be writable.
 */
enum RwStatus rw_fit_decay(const double *radii,
                           const double *values,
                           size_t n,
                           double lo,
                           double hi,
                           struct RwFit *out);

/**
 * Creates a run from a JSON config (NUL-terminated; null or `""` means defaults).
 *
 * # Safety
 * `config_json` must be null or a valid C string; `out` must be writable.
 * The handle is released with [`rw_run_free`].
 */
enum RwStatus rw_run_new(const char *config_json, struct RwRun **out);

/**
 * Simulates from the vortex seed and freezes; blocks until done.
 *
 * # Safety
 * `h` must come from [`rw_run_new`] and not be used concurrently.
 */
enum RwStatus rw_run_freeze(struct RwRun *h);

/**
 * # Safety
 * `h` must come from [`rw_run_new`]; `out` must be writable.
 */
enum RwStatus rw_run_frame(struct RwRun *h, struct RwFrame *out);

/**
 * Computes the spectrum and the decay table of the frozen wave.
 *
 * # Safety
 * `h` must come from [`rw_run_new`] and not be used concurrently.
 */
enum RwStatus rw_run_spectrum(struct RwRun *h);

/**
 * Copies up to `cap` eigenvalues (decreasing real part) into `re`/`im` and stores the
 * total count in `count`. Pass `cap = 0` to query the count.
 *
 * # Safety
 * `h` must come from [`rw_run_new`]; `re` and `im` must have room for `cap` doubles;
 * `count` must be writable.
 */
enum RwStatus rw_run_eigenvalues(struct RwRun *h,
                                 double *re,
                                 double *im,
                                 size_t cap,
                                 size_t *count);

/**
 * Numerical decay rate of the profile in the configured units.
 *
 * # Safety
 * `h` must come from [`rw_run_new`]; `out` must be writable.
 */
enum RwStatus rw_run_profile_ndr(struct RwRun *h, double *out);

/**
 * # Safety
 * `h` must come from [`rw_run_new`] or be null; it must not be used afterwards.
 */
void rw_run_free(struct RwRun *h);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROTWAVE_H */
