#ifndef URNWALK_H
#define URNWALK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define URN_OK 0

#define URN_ERR_NULL -1

#define URN_ERR_INVALID -2

#define URN_ERR_RESOURCE -3

#define URN_ERR_PANIC -255

#define URN_WALK_POLYA 0

#define URN_WALK_ALPHA 1

#define URN_WALK_FRIEDMAN 2

#define URN_WALK_POLYA3D 3

#define URN_METHOD_EULER_PRODUCT 0

#define URN_METHOD_MOBIUS_TRUNCATED 1

#define URN_METHOD_BRUTE_FORCE 2

// Result of a Monte Carlo run, including every trial record.
typedef struct UrnSummary UrnSummary;

// Sieved Möbius/totient table.
typedef struct UrnTable UrnTable;

// A density value with its method and truncation bound.
typedef struct UrnDensity {
  double value;
  double tail_bound;
  // One of `URN_METHOD_*`.
  int32_t method;
  // Depth or grid size for truncated methods, 0 otherwise.
  uint64_t method_param;
} UrnDensity;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *urn_version(void);

// Message describing the last failure on this thread. The pointer stays
// valid until the next failing call on the same thread.
const char *urn_last_error_message(void);

// Builds a Möbius/totient table for `1..=limit`.
//
// # Safety
// `out_table` must be a valid pointer.
int32_t urn_table_new(uint64_t limit, struct UrnTable **out_table);

// Releases a table; null is ignored.
//
// # Safety
// `table` must come from `urn_table_new` and not be used afterwards.
void urn_table_free(struct UrnTable *table);

// # Safety
// `table` and `out_limit` must be valid pointers.
int32_t urn_table_limit(const struct UrnTable *table, uint64_t *out_limit);

// `μ(n)` for `1 ≤ n ≤ limit`.
//
// # Safety
// `table` and `out_mu` must be valid pointers.
int32_t urn_table_mobius(const struct UrnTable *table, uint64_t n, int8_t *out_mu);

// `φ(n)` for `1 ≤ n ≤ limit`.
//
// # Safety
// `table` and `out_phi` must be valid pointers.
int32_t urn_table_totient(const struct UrnTable *table, uint64_t n, uint64_t *out_phi);

// Closed-form density of visible points on `(a0 + n r0, b0 + m u0)`.
//
// # Safety
// `out_density` must be a valid pointer.
int32_t urn_delta_general(uint64_t a0,
                          uint64_t b0,
                          uint64_t r0,
                          uint64_t u0,
                          struct UrnDensity *out_density);

// Truncated Möbius series for the same density; `depth ≤ table limit`.
//
// # Safety
// `table` and `out_density` must be valid pointers.
int32_t urn_delta_general_mobius(const struct UrnTable *table,
                                 uint64_t a0,
                                 uint64_t b0,
                                 uint64_t r0,
                                 uint64_t u0,
                                 uint64_t depth,
                                 struct UrnDensity *out_density);

// `Δ(c)`, the density for equal steps `c` from `(1, 1)`.
//
// # Safety
// `out_density` must be a valid pointer.
int32_t urn_delta_c(uint64_t c, struct UrnDensity *out_density);

// Density of `k`-visible points.
//
// # Safety
// `out_value` must be a valid pointer.
int32_t urn_k_visible_density(uint64_t k, double *out_value);

// `1/ζ(3)` and its error bound.
//
// # Safety
// Both out-pointers must be valid.
int32_t urn_constant_p(double *out_value, double *out_error_bound);

// `Π_p (1 − 3/p² + 2/p³)` truncated at `cutoff`, with its tail bound.
//
// # Safety
// Both out-pointers must be valid.
int32_t urn_constant_t(uint64_t cutoff, double *out_value, double *out_error_bound);

// `E(Q_N)` for Pólya's walk from `(1, 1)`; needs `N + 2 ≤ table limit`.
//
// # Safety
// `table` and `out_value` must be valid pointers.
int32_t urn_expected_q_closed_form(const struct UrnTable *table, uint64_t n, double *out_value);

// Runs `trials` independent walks of `horizon` steps. `kind` is one of
// `URN_WALK_*`; `alpha` is read only for the α-walk; `start` holds `dims`
// coordinates (3 for the three-colour urn, else 2).
//
// # Safety
// `start` must point to `dims` values, `k_list` to `k_len` values (or be
// null with `k_len == 0`), and `out_summary` must be valid.
int32_t urn_monte_carlo(int32_t kind,
                        double alpha,
                        const uint64_t *start,
                        size_t dims,
                        uint64_t step_right,
                        uint64_t step_up,
                        uint64_t horizon,
                        uint64_t trials,
                        const uint64_t *k_list,
                        size_t k_len,
                        uint64_t master_seed,
                        struct UrnSummary **out_summary);

// Releases a summary; null is ignored.
//
// # Safety
// `summary` must come from `urn_monte_carlo` and not be used afterwards.
void urn_summary_free(struct UrnSummary *summary);

// Mean, variance and standard error of the visible fraction.
//
// # Safety
// All pointers must be valid.
int32_t urn_summary_q(const struct UrnSummary *summary,
                      double *out_mean,
                      double *out_var,
                      double *out_stderr);

// Mean fraction of steps with gcd exactly `k`; `k` must have been requested.
//
// # Safety
// All pointers must be valid.
int32_t urn_summary_q_k(const struct UrnSummary *summary, uint64_t k, double *out_mean);

// Number of trials held by the summary.
//
// # Safety
// All pointers must be valid.
int32_t urn_summary_trials(const struct UrnSummary *summary, uint64_t *out_trials);

// Visible fraction and right-step count of trial `index`.
//
// # Safety
// All pointers must be valid.
int32_t urn_summary_trial(const struct UrnSummary *summary,
                          uint64_t index,
                          double *out_q,
                          uint64_t *out_right_count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* URNWALK_H */
