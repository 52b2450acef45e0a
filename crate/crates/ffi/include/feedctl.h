/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef FEEDCTL_H
#define FEEDCTL_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum FcStatus {
  FC_STATUS_OK = 0,
  FC_STATUS_NULL_POINTER = 1,
  FC_STATUS_INVALID_ARGUMENT = 2,
  FC_STATUS_DIMENSION = 3,
  FC_STATUS_INVALID_STATE = 4,
  FC_STATUS_NOT_UNITARY = 5,
  FC_STATUS_COMPLETENESS = 6,
  FC_STATUS_NOT_DPC = 7,
  FC_STATUS_INFEASIBLE = 8,
  FC_STATUS_SYNTHESIS_PRECONDITION = 9,
  FC_STATUS_PLAN_EXHAUSTED = 10,
  FC_STATUS_PARSE = 11,
  FC_STATUS_INTERNAL = 12,
  FC_STATUS_PANIC = 13,
} FcStatus;

/**
 * A validated density matrix.
 */
typedef struct FcDensity FcDensity;

/**
 * A validated measurement (Kraus operator set).
 */
typedef struct FcMeasurement FcMeasurement;

/**
 * A time-indexed feedback plan.
 */
typedef struct FcPlan FcPlan;

/**
 * Numerical tolerances; pass NULL wherever a default is acceptable.
 */
typedef struct FcTolerance {
  double eq_tol;
  double psd_tol;
  double rank_tol;
} FcTolerance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Default tolerances (all 1e-10).
 */
struct FcTolerance fc_tolerance_default(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *fc_last_error_message(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void fc_string_free(char *s);

/**
 * Parses a measurement from JSON (`{"label": ..., "operators": [...]}`).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `tol` NULL or valid; `out` writable.
 */
enum FcStatus fc_measurement_from_json(const char *json,
                                       const struct FcTolerance *tol,
                                       struct FcMeasurement **out);

/**
 * Builds a named built-in measurement, e.g. `projective-computational(2)`.
 *
 * # Safety
 * `label` must be a NUL-terminated string; `tol` NULL or valid; `out` writable.
 */
enum FcStatus fc_measurement_from_builtin(const char *label,
                                          const struct FcTolerance *tol,
                                          struct FcMeasurement **out);

/**
 * Builds a measurement from `outcomes` consecutive `n × n` operators.
 *
 * # Safety
 * `data` must hold `2 n² outcomes` doubles; `tol` NULL or valid; `out` writable.
 */
enum FcStatus fc_measurement_from_operators(size_t n,
                                            size_t outcomes,
                                            const double *data,
                                            const struct FcTolerance *tol,
                                            struct FcMeasurement **out);

/**
 * Hilbert-space dimension, or 0 for NULL.
 *
 * # Safety
 * `m` must be NULL or a live handle.
 */
size_t fc_measurement_dim(const struct FcMeasurement *m);

/**
 * Number of outcomes, or 0 for NULL.
 *
 * # Safety
 * `m` must be NULL or a live handle.
 */
size_t fc_measurement_outcomes(const struct FcMeasurement *m);

/**
 * # Safety
 * `m` must be NULL or a handle from this library, not yet freed.
 */
void fc_measurement_free(struct FcMeasurement *m);

/**
 * Builds a density matrix from an `n × n` buffer.
 *
 * # Safety
 * `data` must hold `2 n²` doubles; `tol` NULL or valid; `out` writable.
 */
enum FcStatus fc_density_from_matrix(size_t n,
                                     const double *data,
                                     const struct FcTolerance *tol,
                                     struct FcDensity **out);

/**
 * Builds a named state, e.g. `maximally-mixed(3)`, `basis(2,0)`, `plus(2)`.
 *
 * # Safety
 * `label` must be a NUL-terminated string; `tol` NULL or valid; `out` writable.
 */
enum FcStatus fc_density_from_builtin(const char *label,
                                      const struct FcTolerance *tol,
                                      struct FcDensity **out);

/**
 * Dimension of a state, or 0 for NULL.
 *
 * # Safety
 * `rho` must be NULL or a live handle.
 */
size_t fc_density_dim(const struct FcDensity *rho);

/**
 * Copies the matrix into `out`, which holds `len` doubles.
 *
 * # Safety
 * `rho` must be a live handle; `out` must hold `len` writable doubles.
 */
enum FcStatus fc_density_to_matrix(const struct FcDensity *rho, double *out, size_t len);

/**
 * # Safety
 * `rho` must be NULL or a handle from this library, not yet freed.
 */
void fc_density_free(struct FcDensity *rho);

/**
 * Trace distance `½ tr|a − b|`.
 *
 * # Safety
 * `a`, `b` must be live handles; `out` writable.
 */
enum FcStatus fc_trace_distance(const struct FcDensity *a, const struct FcDensity *b, double *out);

/**
 * Canonical upper-triangular factor of an `n × n` matrix.
 *
 * # Safety
 * `data` must hold `2 n²` doubles and `out` must hold `len` writable doubles.
 */
enum FcStatus fc_canonical_form(size_t n,
                                const double *data,
                                const struct FcTolerance *tol,
                                double *out,
                                size_t len);

/**
 * Classification report as a JSON string; release it with `fc_string_free`.
 *
 * # Safety
 * `m` must be a live handle; `tol` NULL or valid; `out` writable.
 */
enum FcStatus fc_classify_json(const struct FcMeasurement *m,
                               const struct FcTolerance *tol,
                               char **out);

/**
 * Whether feedback can purify asymptotically. `witness` receives the
 * 0-based outcome with a non-scalar canonical factor, or -1.
 *
 * # Safety
 * `m` must be a live handle; `tol` NULL or valid; `out` writable; `witness` NULL or writable.
 */
enum FcStatus fc_is_asymptotically_dpc(const struct FcMeasurement *m,
                                       const struct FcTolerance *tol,
                                       bool *out,
                                       ptrdiff_t *witness);

/**
 * Finite-time plan taking `rho0` to `rhof`. Fails with
 * `SynthesisPrecondition` when the measurement does not allow it.
 *
 * # Safety
 * All handles must be live; `tol` NULL or valid; `out` writable.
 */
enum FcStatus fc_synthesize(const struct FcMeasurement *m,
                            const struct FcDensity *rho0,
                            const struct FcDensity *rhof,
                            const struct FcTolerance *tol,
                            struct FcPlan **out);

/**
 * Number of steps in a plan, or 0 for NULL.
 *
 * # Safety
 * `plan` must be NULL or a live handle.
 */
size_t fc_plan_len(const struct FcPlan *plan);

/**
 * Plan as JSON; release it with `fc_string_free`.
 *
 * # Safety
 * `plan` must be a live handle; `out` writable.
 */
enum FcStatus fc_plan_to_json(const struct FcPlan *plan, char **out);

/**
 * Parses a plan written by `fc_plan_to_json` or the command-line tool.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` writable.
 */
enum FcStatus fc_plan_from_json(const char *json, struct FcPlan **out);

/**
 * # Safety
 * `plan` must be NULL or a handle from this library, not yet freed.
 */
void fc_plan_free(struct FcPlan *plan);

/**
 * Averaged state after running every step of `plan` from `rho0`.
 *
 * # Safety
 * All handles must be live; `tol` NULL or valid; `out` writable.
 */
enum FcStatus fc_run_averaged(const struct FcDensity *rho0,
                              const struct FcMeasurement *m,
                              const struct FcPlan *plan,
                              const struct FcTolerance *tol,
                              struct FcDensity **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FEEDCTL_H */
