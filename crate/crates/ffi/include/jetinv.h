#ifndef JETINV_H
#define JETINV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result codes.
 */
typedef enum JetinvStatus {
  JETINV_STATUS_OK = 0,
  JETINV_STATUS_NULL_ARGUMENT = 1,
  JETINV_STATUS_INVALID_UTF8 = 2,
  JETINV_STATUS_SYNTAX_ERROR = 3,
  JETINV_STATUS_UNKNOWN_SYMBOL = 4,
  JETINV_STATUS_ZERO_DENOMINATOR = 5,
  JETINV_STATUS_EXPR_TOO_LARGE = 6,
  JETINV_STATUS_ORDER_MISMATCH = 7,
  JETINV_STATUS_TOWER_EXHAUSTED = 8,
  JETINV_STATUS_EVALUATION_FAILED = 9,
  JETINV_STATUS_OUT_OF_RANGE = 10,
  JETINV_STATUS_INVALID_ARGUMENT = 11,
  JETINV_STATUS_PANIC = 12,
  JETINV_STATUS_OTHER = 13,
} JetinvStatus;

/**
 * Total derivative direction.
 */
typedef enum JetinvDirection {
  JETINV_DIRECTION_Y = 0,
  JETINV_DIRECTION_U = 1,
} JetinvDirection;

/**
 * Opaque expression handle.
 */
typedef struct JetinvExpr JetinvExpr;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until the
 * next jetinv call on the same thread.
 */
const char *jetinv_last_error_message(void);

/**
 * Parses `src` with the coordinates of J^order, height tower `H_n` and free constants.
 *
 * # Safety
 * `src` must be a valid NUL-terminated string; `out` must be writable.
 */
enum JetinvStatus jetinv_expr_parse(const char *src, uint32_t order, struct JetinvExpr **out);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `e` must come from this library and not be freed twice.
 */
void jetinv_expr_free(struct JetinvExpr *e);

/**
 * Canonical text form. Release with `jetinv_string_free`.
 *
 * # Safety
 * `e` must be a live handle; `out` must be writable.
 */
enum JetinvStatus jetinv_expr_to_string(const struct JetinvExpr *e, char **out);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void jetinv_string_free(char *s);

/**
 * Partial derivative with respect to a named symbol.
 *
 * # Safety
 * `e` must be a live handle, `symbol` a valid string, `out` writable.
 */
enum JetinvStatus jetinv_expr_diff(const struct JetinvExpr *e,
                                   const char *symbol,
                                   struct JetinvExpr **out);

/**
 * Total derivative D_y or D_u; towers `name_n` shift under D_u.
 *
 * # Safety
 * `e` must be a live handle; `out` must be writable.
 */
enum JetinvStatus jetinv_expr_total_derivative(const struct JetinvExpr *e,
                                               enum JetinvDirection direction,
                                               struct JetinvExpr **out);

/**
 * Evaluates at the point `names[i] = values[i]`, i < len.
 *
 * # Safety
 * `names` and `values` must hold `len` entries; `out` must be writable.
 */
enum JetinvStatus jetinv_expr_evaluate(const struct JetinvExpr *e,
                                       const char *const *names,
                                       const double *values,
                                       size_t len,
                                       double *out);

/**
 * Exact equality of canonical forms.
 *
 * # Safety
 * `a`, `b` must be live handles; `out` must be writable.
 */
enum JetinvStatus jetinv_expr_equal(const struct JetinvExpr *a,
                                    const struct JetinvExpr *b,
                                    bool *out);

/**
 * Number of catalog invariants.
 */
size_t jetinv_catalog_len(void);

/**
 * Name (release with `jetinv_string_free`) and body (release with
 * `jetinv_expr_free`) of catalog entry `index`. Either output may be NULL.
 *
 * # Safety
 * Non-null outputs must be writable.
 */
enum JetinvStatus jetinv_catalog_get(size_t index, char **name, struct JetinvExpr **body);

/**
 * Whether `e` is annihilated by the prolonged generators Y1..Y4.
 *
 * # Safety
 * `e` must be a live handle; `out` must be writable.
 */
enum JetinvStatus jetinv_verify_invariance(const struct JetinvExpr *e, bool *out);

/**
 * Runs a CLI command (argv without the program name) and returns its JSON
 * document and exit code. Release `json_out` with `jetinv_string_free`.
 *
 * # Safety
 * `argv` must hold `argc` valid strings; outputs must be writable.
 */
enum JetinvStatus jetinv_run_command(const char *const *argv,
                                     size_t argc,
                                     char **json_out,
                                     int32_t *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* JETINV_H */
