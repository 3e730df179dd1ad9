#ifndef BETALAB_H
#define BETALAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BetalabStatus {
  BETALAB_STATUS_OK = 0,
  BETALAB_STATUS_NULL_POINTER = 1,
  BETALAB_STATUS_INVALID_ARGUMENT = 2,
  BETALAB_STATUS_NUMERIC_FAILURE = 3,
  BETALAB_STATUS_BUFFER_TOO_SMALL = 4,
  BETALAB_STATUS_PANIC = 5,
} BetalabStatus;

/**
 * A solved equilibrium measure.
 */
typedef struct BetalabEquilibrium BetalabEquilibrium;

/**
 * A polynomial potential.
 */
typedef struct BetalabPotential BetalabPotential;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message on this thread, NUL-terminated and
 * truncated to `len` bytes, and returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t betalab_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *betalab_version(void);

/**
 * Potential with ascending coefficients `coefficients[0..len]`. When
 * `auto_offset` is nonzero the offset is chosen so that `min V > 1`.
 *
 * # Safety
 * `coefficients` must point to `len` doubles; `out` must be writable.
 */
enum BetalabStatus betalab_potential_new(const double *coefficients,
                                         size_t len,
                                         double offset,
                                         int32_t auto_offset,
                                         struct BetalabPotential **out);

/**
 * # Safety
 * `p` must be null or a handle from [`betalab_potential_new`] not yet freed.
 */
void betalab_potential_free(struct BetalabPotential *p);

/**
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum BetalabStatus betalab_potential_eval(const struct BetalabPotential *p, double x, double *out);

/**
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum BetalabStatus betalab_equilibrium_solve(const struct BetalabPotential *p,
                                             struct BetalabEquilibrium **out);

/**
 * # Safety
 * `e` must be null or a handle from [`betalab_equilibrium_solve`] not yet freed.
 */
void betalab_equilibrium_free(struct BetalabEquilibrium *e);

/**
 * Number of cuts `q`.
 *
 * # Safety
 * `e` must be a live handle and `out` writable.
 */
enum BetalabStatus betalab_equilibrium_cut_count(const struct BetalabEquilibrium *e, size_t *out);

/**
 * Writes `A_1, B_1, …, A_q, B_q` into `out[0..2q]`.
 *
 * # Safety
 * `e` must be a live handle and `out` must hold `len` doubles.
 */
enum BetalabStatus betalab_equilibrium_edges(const struct BetalabEquilibrium *e,
                                             double *out,
                                             size_t len);

/**
 * Writes `R_1, …, R_q` into `out[0..q]`.
 *
 * # Safety
 * `e` must be a live handle and `out` must hold `len` doubles.
 */
enum BetalabStatus betalab_equilibrium_filling_fractions(const struct BetalabEquilibrium *e,
                                                         double *out,
                                                         size_t len);

/**
 * # Safety
 * `e` must be a live handle and `out` writable.
 */
enum BetalabStatus betalab_equilibrium_density(const struct BetalabEquilibrium *e,
                                               double x,
                                               double *out);

/**
 * # Safety
 * `e` must be a live handle and `out` writable.
 */
enum BetalabStatus betalab_equilibrium_cdf(const struct BetalabEquilibrium *e,
                                           double x,
                                           double *out);

/**
 * # Safety
 * `e` must be a live handle and `out` writable.
 */
enum BetalabStatus betalab_equilibrium_quantile(const struct BetalabEquilibrium *e,
                                                double p,
                                                double *out);

/**
 * Stieltjes transform `m(re + i·im)`.
 *
 * # Safety
 * `e` must be a live handle; `out_re` and `out_im` writable.
 */
enum BetalabStatus betalab_equilibrium_stieltjes(const struct BetalabEquilibrium *e,
                                                 double re,
                                                 double im,
                                                 double *out_re,
                                                 double *out_im);

/**
 * `W₁` between the empirical measure of `config[0..n]` and the equilibrium measure.
 *
 * # Safety
 * `e` must be a live handle, `config` must hold `n` doubles, `out` writable.
 */
enum BetalabStatus betalab_wasserstein1(const struct BetalabEquilibrium *e,
                                        const double *config,
                                        size_t n,
                                        double *out);

/**
 * One exact draw for `V = x²/2`, sorted, into `out[0..n]`.
 *
 * # Safety
 * `out` must hold `n` doubles.
 */
enum BetalabStatus betalab_tridiagonal_sample(double beta, size_t n, uint64_t seed, double *out);

/**
 * Metropolis samples of the full-line model: `samples` sorted
 * configurations of length `n`, row by row, into `out[0..samples·n]`.
 *
 * # Safety
 * `p` must be a live handle and `out` must hold `out_len` doubles.
 */
enum BetalabStatus betalab_mcmc_sample(const struct BetalabPotential *p,
                                       double beta,
                                       size_t n,
                                       size_t samples,
                                       size_t burn_in,
                                       size_t thinning,
                                       uint64_t seed,
                                       double *out,
                                       size_t out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BETALAB_H */
