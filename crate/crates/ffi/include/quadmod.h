#ifndef QUADMOD_H
#define QUADMOD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Result codes of the C API.
 */
typedef enum QmStatus {
  QM_STATUS_OK = 0,
  QM_STATUS_NULL_POINTER = 1,
  QM_STATUS_INVALID_INPUT = 2,
  QM_STATUS_SOLVER_FAILURE = 3,
  /**
   * The FEM bracket did not reach the requested width; outputs hold the
   * best bracket found.
   */
  QM_STATUS_TOLERANCE_NOT_REACHED = 4,
  QM_STATUS_INTERNAL = 5,
} QmStatus;

/**
 * Opaque quadrilateral handle.
 */
typedef struct QmQuad QmQuad;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a quadrilateral from `xy = [ax, ay, bx, by, cx, cy, dx, dy]`.
 *
 * # Safety
 * `xy` points to 8 readable doubles; `out` is writable.
 */
enum QmStatus qm_quad_new(const double *xy, struct QmQuad **out);

/**
 * Creates a quadrilateral from `{"a":[x,y],"b":[x,y],"c":[x,y],"d":[x,y]}`.
 *
 * # Safety
 * `json` is a NUL-terminated string; `out` is writable.
 */
enum QmStatus qm_quad_from_json(const char *json, struct QmQuad **out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `q` is null or a handle from `qm_quad_new`/`qm_quad_from_json` not yet freed.
 */
void qm_quad_free(struct QmQuad *q);

/**
 * Copies the vertices into `xy[0..8]`.
 *
 * # Safety
 * `q` is a live handle; `xy` has room for 8 doubles.
 */
enum QmStatus qm_quad_vertices(const struct QmQuad *q, double *xy);

/**
 * Schwarz–Christoffel modulus. `tol <= 0` selects the default.
 *
 * # Safety
 * `q` is a live handle; `value` and `err` are writable.
 */
enum QmStatus qm_modulus_sc(const struct QmQuad *q, double tol, double *value, double *err);

/**
 * FEM modulus with its two-sided bracket `[lower, upper]`. `tol <= 0`
 * selects the default bracket width.
 *
 * # Safety
 * `q` is a live handle; all output pointers are writable.
 */
enum QmStatus qm_modulus_fem(const struct QmQuad *q,
                             double tol,
                             double *value,
                             double *err,
                             double *lower,
                             double *upper);

/**
 * Runs a named check; on success `*report_json` receives the report.
 * `*passed` is 1 when the report has no failures and no solver faults.
 *
 * # Safety
 * `check_id` is a NUL-terminated string; `report_json` and `passed` are writable.
 */
enum QmStatus qm_verify(const char *check_id,
                        uint64_t seed,
                        size_t samples,
                        char **report_json,
                        int32_t *passed);

/**
 * Message of the last failed call on this thread, or null. The caller owns
 * the result.
 */
char *qm_last_error(void);

/**
 * Releases a string returned by this library; null is ignored.
 *
 * # Safety
 * `s` is null or a string returned by this library not yet freed.
 */
void qm_string_free(char *s);

/**
 * Static description of a status code.
 */
const char *qm_status_message(enum QmStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QUADMOD_H */
