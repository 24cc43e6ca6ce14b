#ifndef BILEVEL_SCHED_H
#define BILEVEL_SCHED_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define BS_ALGO_LSA 0

#define BS_ALGO_LSS 1

#define BS_ALGO_LSFA 2

#define BS_ALGO_RBS 3

#define BS_ALGO_MSLS 4

typedef enum BsStatus {
  BS_STATUS_OK = 0,
  BS_STATUS_NULL_POINTER = 1,
  BS_STATUS_INVALID_UTF8 = 2,
  BS_STATUS_INVALID_INSTANCE = 3,
  BS_STATUS_INVALID_ARGUMENT = 4,
  BS_STATUS_IO = 5,
  BS_STATUS_INFEASIBLE = 6,
  BS_STATUS_BUFFER_TOO_SMALL = 7,
  BS_STATUS_PANIC = 8,
} BsStatus;

typedef struct BsInstance BsInstance;

typedef struct BsSolution BsSolution;

// Solver options. Zero or negative fields select the defaults.
typedef struct BsSolveOptions {
  // Wall-clock budget in seconds; `<= 0` means unlimited.
  double budget_seconds;
  // Deterministic step budget; overrides `budget_seconds` when non-zero.
  uint64_t step_budget;
  uint32_t beam_width;
  // Negative selects the fitted default.
  double alpha;
  uint32_t seeds;
  double ls_fraction;
} BsSolveOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *bs_last_error_message(void);

// Parses an instance from JSON text.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum BsStatus bs_instance_from_json(const char *json, struct BsInstance **out);

// Loads an instance file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum BsStatus bs_instance_load(const char *path, struct BsInstance **out);

// Number of jobs, or 0 for a null handle.
//
// # Safety
// `inst` must be null or a live handle.
size_t bs_instance_job_count(const struct BsInstance *inst);

// # Safety
// `inst` must be null or a handle from this library not yet freed.
void bs_instance_free(struct BsInstance *inst);

struct BsSolveOptions bs_solve_options_default(void);

// Runs algorithm `algo` (one of the `BS_ALGO_*` values). `opts` may be null.
//
// # Safety
// `inst` must be a live handle, `opts` null or valid, `out` a valid pointer.
enum BsStatus bs_solve(const struct BsInstance *inst,
                       uint32_t algo,
                       const struct BsSolveOptions *opts,
                       struct BsSolution **out);

// # Safety
// `sol` must be a live handle and `out` a valid pointer.
enum BsStatus bs_solution_weighted_tardy(const struct BsSolution *sol, uint64_t *out);

// Sum of completion times in raw time units.
//
// # Safety
// `sol` must be a live handle and `out` a valid pointer.
enum BsStatus bs_solution_total_completion(const struct BsSolution *sol, double *out);

// Copies the selected job ids, ascending, into `buf`. `len` always receives
// the number of ids; if `cap` is smaller nothing is copied and
// `BS_STATUS_BUFFER_TOO_SMALL` is returned. `buf` may be null when `cap` is 0.
//
// # Safety
// `buf` must have room for `cap` values and `len` must be valid.
enum BsStatus bs_solution_selected(const struct BsSolution *sol,
                                   uint32_t *buf,
                                   size_t cap,
                                   size_t *len);

// Full report as JSON. Release with [`bs_string_free`].
//
// # Safety
// `sol` must be a live handle and `out` a valid pointer.
enum BsStatus bs_solution_to_json(const struct BsSolution *sol, char **out);

// # Safety
// `sol` must be null or a handle from this library not yet freed.
void bs_solution_free(struct BsSolution *sol);

// # Safety
// `s` must be null or a string returned by this library not yet freed.
void bs_string_free(char *s);

// Fitted beam width and `alpha` for recovering beam search.
//
// # Safety
// Output pointers must be valid.
enum BsStatus bs_rbs_params(uint64_t n_jobs,
                            uint64_t n,
                            uint64_t m,
                            uint32_t *beam_width,
                            double *alpha);

// Fitted beam width, seed count, and local search share for MSLS.
//
// # Safety
// Output pointers must be valid.
enum BsStatus bs_msls_params(uint64_t n_jobs,
                             uint64_t m,
                             uint32_t *beam_width,
                             uint32_t *seeds,
                             double *ls_fraction);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BILEVEL_SCHED_H */
