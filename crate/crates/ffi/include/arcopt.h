#ifndef ARCOPT_H
#define ARCOPT_H

/* Generated by cbindgen from arcopt-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Trace column selector for `arcopt_run_column`.
typedef enum ArcoptColumn {
  ARCOPT_COLUMN_COST = 0,
  ARCOPT_COLUMN_GRAD_NORM = 1,
  ARCOPT_COLUMN_SIGMA = 2,
  ARCOPT_COLUMN_RHO = 3,
  ARCOPT_COLUMN_STEP_NORM = 4,
  ARCOPT_COLUMN_INNER_ITERS = 5,
  ARCOPT_COLUMN_HESSVEC_COUNT = 6,
  ARCOPT_COLUMN_GRAD_COUNT = 7,
  ARCOPT_COLUMN_TIME_SECONDS = 8,
  ARCOPT_COLUMN_ACCEPTED = 9,
} ArcoptColumn;

// Solver selection for `arcopt_run`.
typedef enum ArcoptSolver {
  ARCOPT_SOLVER_ARC_LANCZOS = 0,
  ARCOPT_SOLVER_ARC_NLCG = 1,
  ARCOPT_SOLVER_TRUST_REGION = 2,
  ARCOPT_SOLVER_GRADIENT_DESCENT = 3,
} ArcoptSolver;

// Status codes returned by every fallible function.
typedef enum ArcoptStatus {
  ARCOPT_STATUS_OK = 0,
  ARCOPT_STATUS_NULL_POINTER = 1,
  ARCOPT_STATUS_INVALID_ARGUMENT = 2,
  ARCOPT_STATUS_RUNTIME_ERROR = 3,
  ARCOPT_STATUS_UTF8_ERROR = 4,
  ARCOPT_STATUS_BUFFER_TOO_SMALL = 5,
  ARCOPT_STATUS_PANIC = 6,
} ArcoptStatus;

// Why a run stopped (mirrors the trace's termination reason).
typedef enum ArcoptTermination {
  ARCOPT_TERMINATION_GRAD_TOL = 0,
  ARCOPT_TERMINATION_SECOND_ORDER_MET = 1,
  ARCOPT_TERMINATION_ZERO_STEP = 2,
  ARCOPT_TERMINATION_MAX_ITERS = 3,
} ArcoptTermination;

// An instantiated benchmark problem plus its reproducible initial guess.
typedef struct ArcoptProblem ArcoptProblem;

// A finished solver run.
typedef struct ArcoptRun ArcoptRun;

// Solver parameters, passed by value. Non-positive `sigma_0` or
// `second_order_tol` select the library defaults.
typedef struct ArcoptParams {
  double theta;
  double sigma_min;
  double sigma_0;
  double eta1;
  double eta2;
  double gamma1;
  double gamma2;
  double gamma3;
  double grad_tol;
  size_t max_iters;
  bool second_order;
  double second_order_tol;
  uint64_t seed;
} ArcoptParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the most recent error on this thread. The pointer stays
// valid until the next failing call on the same thread.
const char *arcopt_last_error(void);

// Library version as a static NUL-terminated string.
const char *arcopt_version(void);

// Default solver parameters.
struct ArcoptParams arcopt_params_default(void);

// Dominant invariant subspace of a random symmetric matrix on Gr(n, p).
//
// # Safety
// `out` must be a valid pointer to writable memory for one handle pointer.
enum ArcoptStatus arcopt_problem_invariant_subspace(size_t n,
                                                    size_t p,
                                                    uint64_t seed,
                                                    struct ArcoptProblem **out);

// Truncated SVD of a random matrix on St(m, p) x St(n, p).
//
// # Safety
// `out` must be a valid pointer to writable memory for one handle pointer.
enum ArcoptStatus arcopt_problem_truncated_svd(size_t m,
                                               size_t n,
                                               size_t p,
                                               uint64_t seed,
                                               struct ArcoptProblem **out);

// Low-rank matrix completion on Gr(m, r) with oversampling factor `osf`.
//
// # Safety
// `out` must be a valid pointer to writable memory for one handle pointer.
enum ArcoptStatus arcopt_problem_matrix_completion(size_t m,
                                                   size_t n,
                                                   size_t r,
                                                   double osf,
                                                   uint64_t seed,
                                                   struct ArcoptProblem **out);

// Max-cut relaxation of an Erdos-Renyi graph on OB(n, p).
//
// # Safety
// `out` must be a valid pointer to writable memory for one handle pointer.
enum ArcoptStatus arcopt_problem_maxcut_random(size_t n,
                                               double edge_prob,
                                               size_t p,
                                               uint64_t seed,
                                               struct ArcoptProblem **out);

// Max-cut relaxation of a graph loaded from a Gset edge-list file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` as in the other constructors.
enum ArcoptStatus arcopt_problem_maxcut_gset(const char *path,
                                             size_t p,
                                             uint64_t seed,
                                             struct ArcoptProblem **out);

// Synchronization of `m` rotations in SO(d) from noisy relative measurements.
//
// # Safety
// `out` must be a valid pointer to writable memory for one handle pointer.
enum ArcoptStatus arcopt_problem_rotation_sync(size_t m,
                                               size_t d,
                                               double edge_prob,
                                               double noise,
                                               uint64_t seed,
                                               struct ArcoptProblem **out);

// ShapeFit point recovery from pairwise directions, on an affine slice.
//
// # Safety
// `out` must be a valid pointer to writable memory for one handle pointer.
enum ArcoptStatus arcopt_problem_shapefit(size_t n,
                                          size_t d,
                                          double edge_prob,
                                          uint64_t seed,
                                          struct ArcoptProblem **out);

// Intrinsic dimension of the problem's manifold; 0 for a null handle.
//
// # Safety
// `problem` must be a live handle from a constructor (or null).
size_t arcopt_problem_dim(const struct ArcoptProblem *problem);

// Copy the problem's display name into `buf` (NUL-terminated, truncated to
// `len`). Returns the untruncated length.
//
// # Safety
// `problem` must be a live handle; `buf` must point to `len` writable bytes.
size_t arcopt_problem_name(const struct ArcoptProblem *problem, char *buf, size_t len);

// Release a problem handle.
//
// # Safety
// `problem` must be a handle from a constructor, not yet freed; null is a no-op.
void arcopt_problem_free(struct ArcoptProblem *problem);

// Run a solver from the problem's reproducible initial guess.
//
// # Safety
// `problem` must be a live handle; `out` must point to writable memory for
// one handle pointer.
enum ArcoptStatus arcopt_run(const struct ArcoptProblem *problem,
                             enum ArcoptSolver solver,
                             struct ArcoptParams params,
                             struct ArcoptRun **out);

// Number of recorded iterations; 0 for a null handle.
//
// # Safety
// `run` must be a live run handle (or null).
size_t arcopt_run_len(const struct ArcoptRun *run);

// Final cost of the run.
//
// # Safety
// `run` must be a live run handle (or null; NaN is returned).
double arcopt_run_f_final(const struct ArcoptRun *run);

// Gradient norm at the last recorded iteration.
//
// # Safety
// `run` must be a live run handle (or null; NaN is returned).
double arcopt_run_final_grad_norm(const struct ArcoptRun *run);

// Why the run stopped.
//
// # Safety
// `run` must be a live run handle (or null; MaxIters is returned).
enum ArcoptTermination arcopt_run_termination(const struct ArcoptRun *run);

// Copy one trace column into `buf` (up to `len` entries). Returns the number
// of entries written. Undefined ratio entries copy as NaN; booleans as 0/1.
//
// # Safety
// `run` must be a live run handle; `buf` must point to `len` writable f64.
size_t arcopt_run_column(const struct ArcoptRun *run,
                         enum ArcoptColumn column,
                         double *buf,
                         size_t len);

// Write the run's trace in the canonical CSV schema.
//
// # Safety
// `run` must be a live run handle; `path` a NUL-terminated string.
enum ArcoptStatus arcopt_run_write_csv(const struct ArcoptRun *run, const char *path);

// Release a run handle.
//
// # Safety
// `run` must be a handle from `arcopt_run`, not yet freed; null is a no-op.
void arcopt_run_free(struct ArcoptRun *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ARCOPT_H */
