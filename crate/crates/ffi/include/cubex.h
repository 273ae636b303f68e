#ifndef CUBEX_H
#define CUBEX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  CUBEX_ARC_KIND_MAJOR_M = 0,
  CUBEX_ARC_KIND_MAJOR_N = 1,
  CUBEX_ARC_KIND_MINOR = 2,
} CubexArcKind;

typedef enum {
  CUBEX_STATUS_OK = 0,
  CUBEX_STATUS_NULL_POINTER = 1,
  CUBEX_STATUS_INVALID_ARGUMENT = 2,
  CUBEX_STATUS_NOT_COPRIME = 3,
  CUBEX_STATUS_MINOR_ARC = 4,
  CUBEX_STATUS_CONFIG = 5,
  CUBEX_STATUS_INTERNAL = 6,
} CubexStatus;

/**
 * Opaque: precomputed state for `F_w` and its major-arc approximation at
 * one `(P, w)`.
 */
typedef struct CubexMajor CubexMajor;

/**
 * A complex sum with its term count and accumulated rounding budget.
 */
typedef struct {
  double re;
  double im;
  uint64_t terms;
  double err_budget;
} CubexSum;

/**
 * The frequency `num/den + offset`. With `den == 0` only `offset` is used
 * (a plain double); otherwise the rational part is kept exact.
 */
typedef struct {
  int64_t num;
  uint64_t den;
  double offset;
} CubexAlpha;

/**
 * `a`, `q`, `beta` are meaningful only when `has_approximant` is nonzero.
 */
typedef struct {
  CubexArcKind kind;
  int32_t has_approximant;
  int64_t a;
  uint64_t q;
  double beta;
  double upsilon;
  double xi;
  int32_t boundary_ambiguous;
} CubexArcLabel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *cubex_version(void);

/**
 * Copies the calling thread's last error message into `buf` (truncated,
 * always NUL-terminated when `len > 0`) and returns the full message
 * length excluding the NUL. Returns 0 when there is no error.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t cubex_last_error(char *buf, size_t len);

/**
 * Quadratic Gauss sum `S(q, a1, a2)`.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
CubexStatus cubex_gauss_quad(uint64_t q, int64_t a1, int64_t a2, CubexSum *out);

/**
 * Complete cubic sum `U(q, a, b)`.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
CubexStatus cubex_hua_sum(uint64_t q, int64_t a, int64_t b, CubexSum *out);

/**
 * Paired restricted sum `W(r, b)`.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
CubexStatus cubex_paired_sum_w(uint64_t r, int64_t b, CubexSum *out);

/**
 * `kappa_w(q)` for squarefree `w >= 1`.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
CubexStatus cubex_kappa(uint64_t q, uint64_t w, double *out);

/**
 * Classifies `alpha` at size `p`; `w == 0` selects the primorial weight.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
CubexStatus cubex_classify(CubexAlpha alpha, double p, uint64_t w, CubexArcLabel *out);

/**
 * Builds a handle for size `p`; `w == 0` selects the primorial weight.
 * Release it with [`cubex_major_free`].
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
CubexStatus cubex_major_new(double p, uint64_t w, CubexMajor **out);

/**
 * # Safety
 * `h` must be null or a handle from [`cubex_major_new`] not yet freed.
 */
void cubex_major_free(CubexMajor *h);

/**
 * `F_w(alpha)` evaluated directly.
 *
 * # Safety
 * `h` must be a live handle; `out` must be null or valid for writes.
 */
CubexStatus cubex_major_f(const CubexMajor *h, CubexAlpha alpha, CubexSum *out);

/**
 * The major-arc approximation `S(a/q, w) K(beta)`; fails with
 * `CUBEX_STATUS_MINOR_ARC` off the major arcs.
 *
 * # Safety
 * `h` must be a live handle; `out_re`, `out_im` must be null or valid for writes.
 */
CubexStatus cubex_major_singular_term(const CubexMajor *h,
                                      CubexAlpha alpha,
                                      double *out_re,
                                      double *out_im);

/**
 * Runs an experiment command with a flat `key = value` configuration and
 * returns its JSON report in `*out_json` (free with [`cubex_string_free`]).
 * `*out_passed` (if non-null) is set to 1 when every check passed.
 *
 * # Safety
 * `command` and `config` must be NUL-terminated strings (`config` may be
 * null); `out_json` must be valid for writes; `out_passed` may be null.
 */
CubexStatus cubex_run(const char *command,
                      const char *config,
                      char **out_json,
                      int32_t *out_passed);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed once.
 */
void cubex_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CUBEX_H */
