#ifndef THERMOPORO_H
#define THERMOPORO_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum TpStatus {
  TP_STATUS_OK = 0,
  TP_STATUS_NULL_POINTER = 1,
  TP_STATUS_INVALID_ARGUMENT = 2,
  TP_STATUS_DIMENSION_MISMATCH = 3,
  TP_STATUS_NOT_SPD = 4,
  TP_STATUS_SINGULAR = 5,
  TP_STATUS_OUT_OF_RANGE = 6,
  TP_STATUS_ASSUMPTION_VIOLATED = 7,
  TP_STATUS_DEGENERATE = 8,
  TP_STATUS_NEGATIVE_QUADRATIC_FORM = 9,
  TP_STATUS_ZERO_REFERENCE = 10,
  TP_STATUS_INVALID_CONFIG = 11,
  TP_STATUS_BUFFER_TOO_SMALL = 12,
  TP_STATUS_PANIC = 13,
} TpStatus;

typedef enum TpScheme {
  TP_SCHEME_IMPLICIT_EULER = 0,
  TP_SCHEME_IMPLICIT_MIDPOINT = 1,
  TP_SCHEME_SEMI_EXPLICIT_HALF = 2,
  TP_SCHEME_SEMI_EXPLICIT_HALF_ITERATIVE = 3,
  TP_SCHEME_SEMI_EXPLICIT_FULL = 4,
  TP_SCHEME_SIGMA_SPLITTING = 5,
  TP_SCHEME_HF_M_ITERATIVE = 6,
  TP_SCHEME_H_F_M_ITERATIVE = 7,
  TP_SCHEME_F_H_M_ITERATIVE = 8,
} TpScheme;

typedef enum TpDampingAnchor {
  TP_DAMPING_ANCHOR_PREVIOUS_ITERATE = 0,
  TP_DAMPING_ANCHOR_PREVIOUS_STEP = 1,
} TpDampingAnchor;

typedef enum TpStartup {
  TP_STARTUP_CONSTANT_HISTORY = 0,
  TP_STARTUP_IMPLICIT_EULER_STEP = 1,
} TpStartup;

/**
 * An assembled system with its initial data and loads.
 */
typedef struct TpProblem TpProblem;

typedef struct TpTrajectory TpTrajectory;

/**
 * Scheme settings. `final_time <= 0` uses the problem's final time and
 * `gamma <= 0` the relaxation factor from the coupling conditions.
 */
typedef struct TpSchemeConfig {
  enum TpScheme scheme;
  double tau;
  double final_time;
  double l_p;
  double l_theta;
  size_t inner_iterations;
  double sigma;
  double gamma;
  enum TpDampingAnchor damping_anchor;
  enum TpStartup startup;
} TpSchemeConfig;

/**
 * Coupling condition numbers of one report.
 */
typedef struct TpConditions {
  /**
   * 1 for constants from material parameters, 0 for spectral ones
   */
  int32_t physical;
  double omega_hd;
  double omega_fd;
  double gamma;
  size_t k_min;
  int32_t fd_precondition;
} TpConditions;

/**
 * Relative final time errors.
 */
typedef struct TpErrors {
  double e_u;
  double e_p;
  double e_theta;
  double e_total;
} TpErrors;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL terminated string.
 */
const char *tp_version(void);

/**
 * Copies the last error message of this thread into `buf` (NUL
 * terminated). `*len` receives the length needed without the NUL.
 *
 * # Safety
 * `buf` must point to `cap` writable bytes or be NULL with `cap == 0`.
 */
enum TpStatus tp_last_error_message(char *buf, size_t cap, size_t *len);

/**
 * Looks up a scheme by its id, e.g. `"semi_explicit_half"`.
 *
 * # Safety
 * `name` must be a NUL terminated string.
 */
enum TpStatus tp_scheme_from_name(const char *name, enum TpScheme *out);

/**
 * Default settings for `scheme` with step `tau`.
 */
struct TpSchemeConfig tp_scheme_config_default(enum TpScheme scheme, double tau);

/**
 * The geothermal preset on an `n x n` mesh with displacement degree
 * `u_degree` (1 or 2).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum TpStatus tp_problem_geothermal(size_t n, size_t u_degree, struct TpProblem **out);

/**
 * The 3-dof toy system with coupling `alpha` and thermal capacity `c0_tilde`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum TpStatus tp_problem_toy(double alpha, double c0_tilde, struct TpProblem **out);

/**
 * Builds the problem described by a TOML configuration document.
 *
 * # Safety
 * `text` must be a NUL terminated string and `out` a valid pointer.
 */
enum TpStatus tp_problem_from_config(const char *text, struct TpProblem **out);

/**
 * # Safety
 * `p` must come from a `tp_problem_*` constructor and not be used afterwards.
 */
void tp_problem_free(struct TpProblem *p);

/**
 * Numbers of displacement, pressure and temperature unknowns.
 *
 * # Safety
 * All pointers must be valid.
 */
enum TpStatus tp_problem_dims(const struct TpProblem *p, size_t *n_u, size_t *n_p, size_t *n_theta);

/**
 * Condition reports: the physical one first when material parameters
 * exist, then the spectral one. Writes up to `cap` reports and the
 * available count to `*count`.
 *
 * # Safety
 * `out` must point to `cap` writable reports.
 */
enum TpStatus tp_problem_conditions(const struct TpProblem *p,
                                    struct TpConditions *out,
                                    size_t cap,
                                    size_t *count);

/**
 * Integrates the problem. A diverged run still succeeds; query it with
 * [`tp_trajectory_status`].
 *
 * # Safety
 * All pointers must be valid.
 */
enum TpStatus tp_run(const struct TpProblem *p,
                     const struct TpSchemeConfig *config,
                     struct TpTrajectory **out);

/**
 * # Safety
 * `t` must come from [`tp_run`] and not be used afterwards.
 */
void tp_trajectory_free(struct TpTrajectory *t);

/**
 * Number of stored time levels, including the initial one.
 *
 * # Safety
 * All pointers must be valid.
 */
enum TpStatus tp_trajectory_len(const struct TpTrajectory *t, size_t *len);

/**
 * `*diverged` is 1 when the run blew up at level `*step`, else 0.
 *
 * # Safety
 * All pointers must be valid.
 */
enum TpStatus tp_trajectory_status(const struct TpTrajectory *t, int32_t *diverged, size_t *step);

/**
 * Copies level `index` into the given buffers. Any buffer may be NULL to
 * skip that component; lengths must match the problem dimensions.
 *
 * # Safety
 * Non-NULL buffers must hold the stated number of doubles.
 */
enum TpStatus tp_trajectory_state(const struct TpTrajectory *t,
                                  size_t index,
                                  double *time,
                                  double *u,
                                  size_t n_u,
                                  double *p,
                                  size_t n_p,
                                  double *theta,
                                  size_t n_theta);

/**
 * Errors of the last level of `approx` against the last level of
 * `reference`, in the energy norms of `p`.
 *
 * # Safety
 * All pointers must be valid.
 */
enum TpStatus tp_final_time_error(const struct TpProblem *p,
                                  const struct TpTrajectory *reference,
                                  const struct TpTrajectory *approx,
                                  struct TpErrors *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* THERMOPORO_H */
