#ifndef SPLINETOOL_H
#define SPLINETOOL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes; the nonzero values match the CLI exit codes.
 */
typedef enum SplinetoolStatus {
  SPLINETOOL_STATUS_OK = 0,
  SPLINETOOL_STATUS_NULL_POINTER = 1,
  SPLINETOOL_STATUS_INVALID_INPUT = 2,
  SPLINETOOL_STATUS_NO_CONVERGENCE = 3,
  SPLINETOOL_STATUS_PRECONDITION = 4,
  SPLINETOOL_STATUS_SCALE = 5,
  SPLINETOOL_STATUS_PANIC = 6,
} SplinetoolStatus;

/**
 * Opaque piecewise-quadratic potential.
 */
typedef struct SplinetoolPotential SplinetoolPotential;

/**
 * Opaque nodal linear spline.
 */
typedef struct SplinetoolSpline SplinetoolSpline;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the message of the last failure on this thread into `buf`
 * (NUL-terminated, truncated to `len`). Returns the full message length, or
 * 0 when there is no message.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t splinetool_last_error(char *buf, size_t len);

/**
 * Builds a spline from `n` strictly increasing nodes `t` and values `f`.
 *
 * # Safety
 * `t` and `f` must point to `n` readable doubles; `out` must be writable.
 */
enum SplinetoolStatus splinetool_spline_new(const double *t,
                                            const double *f,
                                            size_t n,
                                            struct SplinetoolSpline **out);

/**
 * # Safety
 * `sp` must be null or a handle from this library that was not freed yet.
 */
void splinetool_spline_free(struct SplinetoolSpline *sp);

/**
 * Number of nodes, or 0 for a null handle.
 *
 * # Safety
 * `sp` must be null or a live spline handle.
 */
size_t splinetool_spline_len(const struct SplinetoolSpline *sp);

/**
 * Copies nodes and values into `t` and `f` (each of length `n`, which must
 * equal the spline length). Either output may be null.
 *
 * # Safety
 * `sp` must be a live handle; non-null outputs must hold `n` doubles.
 */
enum SplinetoolStatus splinetool_spline_data(const struct SplinetoolSpline *sp,
                                             double *t,
                                             double *f,
                                             size_t n);

/**
 * # Safety
 * `sp` must be a live handle and `out` writable.
 */
enum SplinetoolStatus splinetool_spline_eval(const struct SplinetoolSpline *sp,
                                             double x,
                                             double *out);

/**
 * # Safety
 * `sp` must be a live handle and `out` writable.
 */
enum SplinetoolStatus splinetool_spline_tv2(const struct SplinetoolSpline *sp, double *out);

/**
 * Mean-preserving projection onto slopes in `[s_min, s_max]` (infinities
 * allowed). Writes a new handle to `out`.
 *
 * # Safety
 * `sp` must be a live handle and `out` writable.
 */
enum SplinetoolStatus splinetool_spline_project(const struct SplinetoolSpline *sp,
                                                double s_min,
                                                double s_max,
                                                struct SplinetoolSpline **out);

/**
 * Potential whose derivative is the spline.
 *
 * # Safety
 * `sp` must be a live handle and `out` writable.
 */
enum SplinetoolStatus splinetool_potential_from_derivative(const struct SplinetoolSpline *sp,
                                                           struct SplinetoolPotential **out);

/**
 * Potential whose proximal map is the (nondecreasing) spline.
 *
 * # Safety
 * `sp` must be a live handle and `out` writable.
 */
enum SplinetoolStatus splinetool_potential_from_prox(const struct SplinetoolSpline *sp,
                                                     struct SplinetoolPotential **out);

/**
 * # Safety
 * `pot` must be null or a handle from this library that was not freed yet.
 */
void splinetool_potential_free(struct SplinetoolPotential *pot);

/**
 * # Safety
 * `pot` must be a live handle and `out` writable.
 */
enum SplinetoolStatus splinetool_potential_eval(const struct SplinetoolPotential *pot,
                                                double y,
                                                double *out);

/**
 * Proximal map of the potential at `x` by direct minimization on a grid of
 * spacing `step` (`step <= 0` selects the default).
 *
 * # Safety
 * `pot` must be a live handle and `out` writable.
 */
enum SplinetoolStatus splinetool_potential_prox(const struct SplinetoolPotential *pot,
                                                double x,
                                                double step,
                                                double *out);

/**
 * Fits `m` samples `(xs, ys)` on the grid `grid` of `n` nodes (`n == 0`
 * selects the padded data grid). `tol <= 0` and `max_iters == 0` select the
 * defaults. On `NoConvergence` the last iterate is still written to `out`.
 * `objective` may be null.
 *
 * # Safety
 * Input pointers must hold the stated number of doubles; `out` must be
 * writable.
 */
enum SplinetoolStatus splinetool_fit(const double *xs,
                                     const double *ys,
                                     size_t m,
                                     const double *grid,
                                     size_t n,
                                     double lambda,
                                     double s_min,
                                     double s_max,
                                     double tol,
                                     size_t max_iters,
                                     struct SplinetoolSpline **out,
                                     double *objective);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPLINETOOL_H */
