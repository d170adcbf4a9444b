#ifndef SPARSEDOM_H
#define SPARSEDOM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Cube scope of weight characteristics.
 */
typedef enum SdScope {
  SD_SCOPE_DYADIC = 0,
  SD_SCOPE_ALL_LATTICE = 1,
} SdScope;

/**
 * Result of a call.
 */
typedef enum SdStatus {
  SD_STATUS_OK = 0,
  /**
   * A required pointer was null.
   */
  SD_STATUS_NULL_POINTER = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  SD_STATUS_INVALID_UTF8 = 2,
  /**
   * Bad domain, exponent, parameter, configuration key or subcommand.
   */
  SD_STATUS_INVALID_ARGUMENT = 3,
  /**
   * Input values failed a precondition (negative weight, length mismatch, ...).
   */
  SD_STATUS_INVALID_INPUT = 4,
  /**
   * A cube family is not sparse at the requested `eta`.
   */
  SD_STATUS_NOT_SPARSE = 5,
  /**
   * The all-lattice scope was requested on a grid where it is too expensive.
   */
  SD_STATUS_SCOPE_TOO_EXPENSIVE = 6,
  /**
   * The random sparse-family sampler gave up.
   */
  SD_STATUS_GENERATOR_FAILURE = 7,
  SD_STATUS_IO = 8,
  /**
   * The output buffer is too small; the required length was written.
   */
  SD_STATUS_BUFFER_TOO_SMALL = 9,
  SD_STATUS_PANIC = 10,
} SdStatus;

/**
 * Cell values on a dyadic grid.
 */
typedef struct SdGrid SdGrid;

/**
 * Outcome of one subcommand run.
 */
typedef struct SdReport SdReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a successful call.
 * The pointer stays valid until the next call into the library on this thread.
 */
const char *sd_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sd_version(void);

/**
 * Grid function on `[0,1)^dim` with `2^level` cells per side from `len` row-major values
 * (axis 0 slowest).
 *
 * # Safety
 *
 * `values` must point to `len` readable doubles (or be null with `len == 0`) and `out` must be null or writable.
 */
enum SdStatus sd_grid_new(size_t dim,
                          uint32_t level,
                          const double *values,
                          size_t len,
                          struct SdGrid **out);

/**
 * Grid function from a spec string: `const:c`, `power:a:center`, `cells:v1,v2,...`,
 * `random-lognormal:seed:sigma` or `file:path`.
 *
 * # Safety
 *
 * `spec` must be null or a NUL-terminated string; `out` must be null or writable.
 */
enum SdStatus sd_grid_from_spec(size_t dim, uint32_t level, const char *spec, struct SdGrid **out);

/**
 * Release a grid; null is ignored.
 *
 * # Safety
 *
 * `grid` must be null or a live handle from this library, not used afterwards.
 */
void sd_grid_free(struct SdGrid *grid);

/**
 * Number of cells, 0 for a null handle.
 *
 * # Safety
 *
 * `grid` must be null or a live handle.
 */
size_t sd_grid_len(const struct SdGrid *grid);

/**
 * Copy the row-major values into `buf`. With a short buffer nothing is copied,
 * `*needed` receives the cell count and `SD_STATUS_BUFFER_TOO_SMALL` is returned.
 *
 * # Safety
 *
 * `grid` must be null or a live handle, `buf` must have room for `len` doubles and `needed` must be null or writable.
 */
enum SdStatus sd_grid_values(const struct SdGrid *grid,
                             double *buf,
                             size_t len,
                             size_t *needed);

/**
 * `[w]_{A_p}` over the given scope.
 *
 * # Safety
 *
 * `weight` must be null or a live handle; `out` must be null or writable.
 */
enum SdStatus sd_ap_constant(const struct SdGrid *weight,
                             double p,
                             enum SdScope scope,
                             double *out);

/**
 * Fujii-Wilson constant `[w]_FW` over the given scope.
 *
 * # Safety
 *
 * `weight` must be null or a live handle; `out` must be null or writable.
 */
enum SdStatus sd_fw_constant(const struct SdGrid *weight, enum SdScope scope, double *out);

/**
 * Run a CLI subcommand (`"constants"`, `"theorem-a"`, ...) on a configuration given as
 * `key = value` lines. A failed assertion is not an error: the call returns
 * `SD_STATUS_OK` and [`sd_report_pass`] is 0.
 *
 * # Safety
 *
 * `command` and `config` must be null or NUL-terminated strings; `out` must be null or writable.
 */
enum SdStatus sd_run(const char *command, const char *config, struct SdReport **out);

/**
 * Release a report; null is ignored.
 *
 * # Safety
 *
 * `report` must be null or a live handle from this library, not used afterwards.
 */
void sd_report_free(struct SdReport *report);

/**
 * 1 when every assertion of the run held, 0 otherwise or for a null handle.
 *
 * # Safety
 *
 * `report` must be null or a live handle.
 */
int32_t sd_report_pass(const struct SdReport *report);

/**
 * The fitted quantity of the run (NaN for a null handle).
 *
 * # Safety
 *
 * `report` must be null or a live handle.
 */
double sd_report_fitted(const struct SdReport *report);

/**
 * Look up a named metric of the run.
 *
 * # Safety
 *
 * `report` must be null or a live handle, `name` null or NUL-terminated, `out` null or writable.
 */
enum SdStatus sd_report_metric(const struct SdReport *report, const char *name, double *out);

/**
 * CSV rows of the run (header `label,...`). Owned by the report.
 *
 * # Safety
 *
 * `report` must be null or a live handle.
 */
const char *sd_report_csv(const struct SdReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPARSEDOM_H */
