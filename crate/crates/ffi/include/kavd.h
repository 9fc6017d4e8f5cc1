#ifndef KAVD_H
#define KAVD_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every entry point.
typedef enum KavdStatus {
  KAVD_STATUS_OK = 0,
  KAVD_STATUS_NULL_POINTER = 1,
  KAVD_STATUS_INVALID_ARGUMENT = 2,
  KAVD_STATUS_EMPTY_INPUT = 3,
  KAVD_STATUS_DIMENSION_MISMATCH = 4,
  KAVD_STATUS_PARSE = 5,
  KAVD_STATUS_OUT_OF_DOMAIN = 6,
  KAVD_STATUS_INVALID_FUNCTION = 7,
  KAVD_STATUS_CONTRACT_VIOLATION = 8,
  KAVD_STATUS_PARAMETERS_TOO_COARSE = 9,
  KAVD_STATUS_RESOLUTION_EXHAUSTED = 10,
  KAVD_STATUS_RESOURCE_EXHAUSTED = 11,
  KAVD_STATUS_FORMAT = 12,
  KAVD_STATUS_IO = 13,
  KAVD_STATUS_PANIC = 14,
} KavdStatus;

// A distance-based density structure.
typedef struct KavdDensity KavdDensity;

// A normalized point set.
typedef struct KavdPointSet KavdPointSet;

// An approximate Voronoi sketch for `d_k` (or the weighted `d_tau`).
typedef struct KavdSketch KavdSketch;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. Valid until the next call that fails.
const char *kavd_last_error_message(void);

// Library version as a static nul-terminated string.
const char *kavd_version(void);

// Normalizes `n` points of dimension `dim` stored row-major in `coords`.
// `weights` may be null for unit weights.
//
// # Safety
// `coords` must hold `n * dim` doubles and `weights`, if not null, `n` doubles.
enum KavdStatus kavd_point_set_new(const double *coords,
                                   size_t n,
                                   size_t dim,
                                   const double *weights,
                                   struct KavdPointSet **out);

// # Safety
// `ps` must be null or a handle from [`kavd_point_set_new`] not yet freed.
void kavd_point_set_free(struct KavdPointSet *ps);

// # Safety
// `ps` must be a live point set handle.
enum KavdStatus kavd_point_set_len(const struct KavdPointSet *ps, size_t *out);

// Exact `d_k` at `q` by brute force.
//
// # Safety
// `ps` must be a live handle and `q` must hold `dim` doubles.
enum KavdStatus kavd_exact_knn_distance(const struct KavdPointSet *ps,
                                        const double *q,
                                        size_t dim,
                                        size_t k,
                                        double *out);

// Builds a `(1 + eps, k)` sketch; `eps` in `(0, 1/2]`.
//
// # Safety
// `ps` must be a live handle.
enum KavdStatus kavd_sketch_build(const struct KavdPointSet *ps,
                                  size_t k,
                                  double eps,
                                  struct KavdSketch **out);

// Weighted variant: approximates the smallest radius holding weight `tau`.
//
// # Safety
// `ps` must be a live handle.
enum KavdStatus kavd_sketch_build_weighted(const struct KavdPointSet *ps,
                                           double tau,
                                           double eps,
                                           struct KavdSketch **out);

// Approximate distance and the index of a witness point.
//
// # Safety
// `sk` must be a live handle and `q` must hold `dim` doubles.
enum KavdStatus kavd_sketch_query(const struct KavdSketch *sk,
                                  const double *q,
                                  size_t dim,
                                  double *value,
                                  size_t *witness);

// Number of cells holding a record.
//
// # Safety
// `sk` must be a live handle.
enum KavdStatus kavd_sketch_cell_count(const struct KavdSketch *sk, size_t *out);

// # Safety
// `sk` must be a live handle and `file` a nul-terminated path.
enum KavdStatus kavd_sketch_save(const struct KavdSketch *sk, const char *file);

// # Safety
// `file` must be a nul-terminated path.
enum KavdStatus kavd_sketch_load(const char *file, struct KavdSketch **out);

// # Safety
// `sk` must be null or a live handle.
void kavd_sketch_free(struct KavdSketch *sk);

// Builds a density structure for `f` given as `l1`, `l2sq` or `pow:<p>`.
//
// # Safety
// `ps` must be a live handle and `f` a nul-terminated string.
enum KavdStatus kavd_density_build(const struct KavdPointSet *ps,
                                   size_t k,
                                   double eps,
                                   const char *f,
                                   struct KavdDensity **out);

// `xi` with `(1 - eps) xi <= sum_{i <= k} f(d_i(q)) <= (1 + eps) xi`.
//
// # Safety
// `ds` must be a live handle and `q` must hold `dim` doubles.
enum KavdStatus kavd_density_query(const struct KavdDensity *ds,
                                   const double *q,
                                   size_t dim,
                                   double *value);

// # Safety
// `ds` must be null or a live handle.
void kavd_density_free(struct KavdDensity *ds);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KAVD_H */
