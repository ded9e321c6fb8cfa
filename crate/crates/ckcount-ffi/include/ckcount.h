#ifndef CKCOUNT_H
#define CKCOUNT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CkStatus {
  CK_STATUS_OK = 0,
  CK_STATUS_NULL_POINTER = 1,
  CK_STATUS_INVALID_ARGUMENT = 2,
  CK_STATUS_CAPACITY = 3,
  CK_STATUS_TABLE_TOO_SMALL = 4,
  CK_STATUS_OVERFLOW = 5,
  CK_STATUS_PANIC = 6,
  CK_STATUS_FAILURE = 7,
} CkStatus;

/**
 * Opaque table of the trigonometric coefficients for one (q, H, d_max).
 */
typedef struct CkCoeffTable CkCoeffTable;

/**
 * Opaque counter able to evaluate counts and error terms up to a dilation.
 */
typedef struct CkCounter CkCounter;

/**
 * Opaque table of r₂ and r_{2k} up to a limit.
 */
typedef struct CkRepTable CkRepTable;

typedef struct CkErrorSample {
  double x;
  uint64_t quartic;
  uint64_t count;
  double main;
  double err;
} CkErrorSample;

typedef struct CkCoeffs {
  double a;
  double a_star;
  double a_chi;
  double b_star;
} CkCoeffs;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * A static, NUL-terminated description of `status`.
 */
const char *ck_status_message(enum CkStatus status);

/**
 * vol(𝓑) for the given q.
 *
 * # Safety
 * `out` must be null or valid for a write of one `double`.
 */
enum CkStatus ck_ball_volume(uint32_t q, double *out);

/**
 * # Safety
 * `out` must be null or valid for a write of one pointer.
 */
enum CkStatus ck_rep_table_new(uint32_t q, uint64_t limit, struct CkRepTable **out);

/**
 * r_{2q}(m) from the table.
 *
 * # Safety
 * `table` must come from `ck_rep_table_new` and not be freed; `out` must be
 * null or writable.
 */
enum CkStatus ck_rep_table_r2q(const struct CkRepTable *table, uint64_t m, uint64_t *out);

/**
 * # Safety
 * `table` must be null or a live handle from `ck_rep_table_new`.
 */
void ck_rep_table_free(struct CkRepTable *table);

/**
 * # Safety
 * `out` must be null or valid for a write of one pointer.
 */
enum CkStatus ck_counter_new(uint32_t q, double x_max, struct CkCounter **out);

/**
 * Count and error term at x with x⁴ = `quartic` exactly.
 *
 * # Safety
 * `counter` must be a live handle; `out` must be null or writable.
 */
enum CkStatus ck_counter_error_quartic(const struct CkCounter *counter,
                                       uint64_t quartic,
                                       struct CkErrorSample *out);

/**
 * Count and error term at a real dilation x.
 *
 * # Safety
 * `counter` must be a live handle; `out` must be null or writable.
 */
enum CkStatus ck_counter_error(const struct CkCounter *counter,
                               double x,
                               struct CkErrorSample *out);

/**
 * (1/X)∫_X^{2X} 𝓔_q² dx; the counter must reach 2X.
 *
 * # Safety
 * `counter` must be a live handle; `out` must be null or writable.
 */
enum CkStatus ck_counter_mean_square(const struct CkCounter *counter, double big_x, double *out);

/**
 * # Safety
 * `counter` must be null or a live handle from `ck_counter_new`.
 */
void ck_counter_free(struct CkCounter *counter);

/**
 * # Safety
 * `out` must be null or valid for a write of one pointer.
 */
enum CkStatus ck_coeff_table_new(uint32_t q, double h, uint64_t d_max, struct CkCoeffTable **out);

/**
 * Coefficients at (m, d); zero where none are stored.
 *
 * # Safety
 * `table` must be a live handle; `out` must be null or writable.
 */
enum CkStatus ck_coeff_table_get(const struct CkCoeffTable *table,
                                 uint64_t m,
                                 uint64_t d,
                                 struct CkCoeffs *out);

/**
 * Number of stored (m, d) keys.
 *
 * # Safety
 * `table` must be a live handle; `out` must be null or writable.
 */
enum CkStatus ck_coeff_table_len(const struct CkCoeffTable *table, uint64_t *out);

/**
 * # Safety
 * `table` must be null or a live handle from `ck_coeff_table_new`.
 */
void ck_coeff_table_free(struct CkCoeffTable *table);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CKCOUNT_H */
