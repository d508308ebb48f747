#ifndef DECOMPOUND_H
#define DECOMPOUND_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum DcStatus {
  DC_STATUS_OK = 0,
  DC_STATUS_INVALID_ARGUMENT = 1,
  DC_STATUS_NULL_POINTER = 2,
  DC_STATUS_BUFFER_TOO_SMALL = 3,
  DC_STATUS_DEGENERATE_INPUT = 4,
  DC_STATUS_RESOURCE_LIMIT = 5,
  DC_STATUS_NOT_APPLICABLE = 6,
  DC_STATUS_BREAKDOWN = 7,
  DC_STATUS_INPUT_ERROR = 8,
  DC_STATUS_IO_ERROR = 9,
  DC_STATUS_INTERNAL = 10,
  DC_STATUS_PANIC = 11,
} DcStatus;

// Opaque increment dataset.
typedef struct DcData DcData;

// Opaque set of posterior draws.
typedef struct DcSamples DcSamples;

// Prior and sampler settings for [`dc_fit`]. `m = 0` selects
// `min(15, largest increment)`.
typedef struct DcFitOptions {
  size_t m;
  double a;
  double c;
  size_t iterations;
  size_t burn_in;
  size_t thin;
  uint64_t seed;
  double pi_neighbor;
  size_t sweeps;
  size_t threads;
} DcFitOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` as a
// NUL-terminated string, truncating if needed. Returns the full message
// length in bytes (without the terminator).
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t dc_last_error_message(char *buf, size_t len);

// Builds a dataset from `n` gaps and increments.
//
// # Safety
// `deltas` and `z` must be valid for `n` elements; `out` must be writable.
enum DcStatus dc_data_new(const double *deltas, const uint32_t *z, size_t n, struct DcData **out);

// Reads a `delta,z` CSV file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum DcStatus dc_data_from_csv(const char *path, struct DcData **out);

// Loads an embedded dataset (`horse_kick` or `plant`).
//
// # Safety
// `name` must be a NUL-terminated string; `out` must be writable.
enum DcStatus dc_data_embedded(const char *name, struct DcData **out);

// Number of increments, or 0 for a null handle.
//
// # Safety
// `data` must be null or a live handle.
size_t dc_data_len(const struct DcData *data);

// Copies gaps and increments into caller buffers of length `dc_data_len`.
//
// # Safety
// `data` must be a live handle; buffers must be valid for `len` elements.
enum DcStatus dc_data_copy(const struct DcData *data, double *deltas, uint32_t *z, size_t len);

// # Safety
// `data` must be null or a handle not yet freed.
void dc_data_free(struct DcData *data);

// Simulates increments with intensity `lambda`, jump pmf `p` on
// `1..=p_len` (renormalised) and the given gaps.
//
// # Safety
// `p` must be valid for `p_len` elements, `deltas` for `n`; `out` writable.
enum DcStatus dc_simulate(double lambda,
                          const double *p,
                          size_t p_len,
                          const double *deltas,
                          size_t n,
                          uint64_t seed,
                          struct DcData **out);

// Compound pmf `q_0..q_{k_max}` of intensity `lambda` and jump pmf `p` on
// `1..=p_len`. `q` must hold `k_max + 1` values.
//
// # Safety
// `p` must be valid for `p_len` elements and `q` for `q_len`.
enum DcStatus dc_panjer_forward(double lambda,
                                const double *p,
                                size_t p_len,
                                size_t k_max,
                                double *q,
                                size_t q_len);

// Recovers `lambda` and `p_1..p_{k_max}` from `q_0..q_{q_len-1}`. `p` must
// hold `k_max` values; entries may be negative when `q` is not a compound
// Poisson law.
//
// # Safety
// `q` must be valid for `q_len` elements, `p` for `p_len`, `lambda` writable.
enum DcStatus dc_panjer_inverse(const double *q,
                                size_t q_len,
                                size_t k_max,
                                double *lambda,
                                double *p,
                                size_t p_len);

// Plug-in estimate. Writes `lambda_hat` and up to `nu_len` entries of
// `nu_hat`; `nu_written` receives the full length (the largest increment).
// Fails with `BufferTooSmall` when `nu_len` is short.
//
// # Safety
// `data` must be a live handle; `nu` valid for `nu_len`; other outputs writable.
enum DcStatus dc_plugin_estimate(const struct DcData *data,
                                 double *lambda_hat,
                                 double *nu,
                                 size_t nu_len,
                                 size_t *nu_written);

// Default settings: data-driven `m`, `a = 0.01`, `c = 2`, 500,000
// iterations with 250,000 burn-in, neighbour probability 0.8.
struct DcFitOptions dc_fit_options_default(void);

// Runs the Gibbs sampler.
//
// # Safety
// `data` must be a live handle, `options` readable and `out` writable.
enum DcStatus dc_fit(const struct DcData *data,
                     const struct DcFitOptions *options,
                     struct DcSamples **out);

// Number of retained draws, or 0 for a null handle.
//
// # Safety
// `samples` must be null or a live handle.
size_t dc_samples_rows(const struct DcSamples *samples);

// Number of coordinates per draw, or 0 for a null handle.
//
// # Safety
// `samples` must be null or a live handle.
size_t dc_samples_m(const struct DcSamples *samples);

// Copies all draws row-major into `out` (`rows × m` values).
//
// # Safety
// `samples` must be a live handle; `out` valid for `len` elements.
enum DcStatus dc_samples_copy(const struct DcSamples *samples, double *out, size_t len);

// Posterior mean of each coordinate (`m` values).
//
// # Safety
// `samples` must be a live handle; `out` valid for `len` elements.
enum DcStatus dc_samples_mean(const struct DcSamples *samples, double *out, size_t len);

// # Safety
// `samples` must be null or a handle not yet freed.
void dc_samples_free(struct DcSamples *samples);

// `∑_{k=1}^{50} |est_k − truth_k|` with missing entries read as 0; NaN on
// null input.
//
// # Safety
// Both arrays must be valid for their lengths.
double dc_err_l1(const double *truth,
                 size_t truth_len,
                 const double *estimate,
                 size_t estimate_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DECOMPOUND_H */
