#ifndef POMDP_H
#define POMDP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

#define POMDP_OK 0

#define POMDP_ERR_NON_STOCHASTIC_ROW -1

#define POMDP_ERR_DIMENSION_MISMATCH -2

#define POMDP_ERR_NEGATIVE_ENTRY -3

#define POMDP_ERR_NON_INCREASING_LEVELS -4

#define POMDP_ERR_UNSUPPORTED_EXACT -5

#define POMDP_ERR_NOT_TP2 -6

#define POMDP_ERR_LP_INFEASIBLE -7

#define POMDP_ERR_ORDERING_VIOLATION -8

#define POMDP_ERR_LP_NUMERIC_FAILURE -9

#define POMDP_ERR_ZERO_LIKELIHOOD -10

#define POMDP_ERR_BLOWUP -11

#define POMDP_ERR_INFEASIBLE -12

#define POMDP_ERR_NO_MAXIMIZER -13

#define POMDP_ERR_INVALID_PROBABILITY -14

#define POMDP_ERR_NON_TRANSIENT -15

#define POMDP_ERR_PRIOR_MASS_ON_STATE1 -16

#define POMDP_ERR_PRECONDITION_FAILED -17

#define POMDP_ERR_NOT_MONOTONE -18

#define POMDP_ERR_NOT_COMPARABLE -19

#define POMDP_ERR_INVALID -20

// A required pointer argument was null.
#define POMDP_ERR_NULL_POINTER -100

// A string argument was not valid UTF-8.
#define POMDP_ERR_UTF8 -101

// The library panicked; the handle arguments should be considered unusable.
#define POMDP_ERR_PANIC -102

// Finite-horizon solver selectors for `pomdp_solve_finite`.
#define POMDP_METHOD_INCREMENTAL_PRUNING 0

#define POMDP_METHOD_MONAHAN 1

// Opaque validated model.
typedef struct PomdpModelHandle PomdpModelHandle;

// Opaque solved value function.
typedef struct PomdpSolutionHandle PomdpSolutionHandle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the next call.
const char *pomdp_last_error_message(void);

// Parses and validates a model JSON document.
//
// # Safety
// `json` must be a nul-terminated string and `out` a writable pointer.
int32_t pomdp_model_from_json(const char *json, struct PomdpModelHandle **out);

// Loads a named preset that is a plain or embedded POMDP. `rho < 0` keeps the preset discount.
//
// # Safety
// `name` must be a nul-terminated string and `out` a writable pointer.
int32_t pomdp_model_preset(const char *name, double rho, struct PomdpModelHandle **out);

// Numbers of states, actions and observations.
//
// # Safety
// `model` must come from this library; outputs must be writable.
int32_t pomdp_model_dims(const struct PomdpModelHandle *model,
                         uintptr_t *x,
                         uintptr_t *u,
                         uintptr_t *y);

// # Safety
// `model` must be null or a handle from this library not yet freed.
void pomdp_model_free(struct PomdpModelHandle *model);

// One Bayes update after taking action `u` and observing `y` (both 1-based).
// Writes the posterior to `out` (length X) and the normalizer to `sigma` if non-null.
//
// # Safety
// `pi` and `out` must point to `len` doubles.
int32_t pomdp_filter_step(const struct PomdpModelHandle *model,
                          const double *pi,
                          uintptr_t len,
                          uint32_t y,
                          uint32_t u,
                          double *out,
                          double *sigma);

// Exact `horizon`-stage solve with one of the `POMDP_METHOD_*` selectors.
//
// # Safety
// `model` must come from this library and `out` be writable.
int32_t pomdp_solve_finite(const struct PomdpModelHandle *model,
                           uintptr_t horizon,
                           int32_t method,
                           struct PomdpSolutionHandle **out);

// Discounted value iteration until the successive-iterate gap is below `eps`.
//
// # Safety
// `model` must come from this library and `out` be writable.
int32_t pomdp_solve_discounted(const struct PomdpModelHandle *model,
                               double eps,
                               struct PomdpSolutionHandle **out);

// Value and 1-based optimal first action at a belief.
//
// # Safety
// `pi` must point to `len` doubles; outputs must be writable.
int32_t pomdp_solution_query(const struct PomdpSolutionHandle *sol,
                             const double *pi,
                             uintptr_t len,
                             double *value,
                             uint32_t *action);

// Error bound of a discounted solve (0 for finite horizon).
//
// # Safety
// `sol` must come from this library.
double pomdp_solution_error_bound(const struct PomdpSolutionHandle *sol);

// # Safety
// `sol` must be null or a handle from this library not yet freed.
void pomdp_solution_free(struct PomdpSolutionHandle *sol);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POMDP_H */
