/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef COVBOUND_H
#define COVBOUND_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum CbStatus {
  CB_STATUS_OK = 0,
  CB_STATUS_NULL_POINTER = 1,
  CB_STATUS_VALIDATION = 2,
  CB_STATUS_PARSE = 3,
  CB_STATUS_FORMAT = 4,
  CB_STATUS_RANGE = 5,
  CB_STATUS_UNDEFINED = 6,
  CB_STATUS_NUMERICAL = 7,
  CB_STATUS_RUN = 8,
  CB_STATUS_IO = 9,
  CB_STATUS_SERIALIZATION = 10,
  CB_STATUS_PANIC = 11,
} CbStatus;

// Opaque labeled dataset.
typedef struct CbDataset CbDataset;

// Opaque multilayer perceptron.
typedef struct CbMlp CbMlp;

// Cover quantities of a train/test pair.
typedef struct CbCoverSummary {
  double rho_t;
  double cd;
  // NaN when the cover difference is zero.
  double cc;
  double delta_t;
} CbCoverSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer is
// valid until the next call into this library on the same thread.
const char *covbound_last_error(void);

// Schema version of the library's JSON reports.
uint32_t covbound_schema_version(void);

// Builds a single-label dataset from `n` row-major points of dimension
// `dim` in `[0,1]` and labels in `1..=classes`.
//
// # Safety
// `points` must hold `n * dim` values and `labels` `n` values.
enum CbStatus covbound_dataset_new(size_t dim,
                                   size_t classes,
                                   const double *points,
                                   const uint32_t *labels,
                                   size_t n,
                                   struct CbDataset **out);

// Loads a CSV dataset (`x1,...,xd,label` rows).
//
// # Safety
// `path` must be a NUL-terminated string.
enum CbStatus covbound_dataset_load_csv(const char *path_, size_t classes, struct CbDataset **out);

// The separated-interval problem: `n` training points and `n_test`
// equispaced test points.
//
// # Safety
// `train` and `test` must be valid for writes.
enum CbStatus covbound_dataset_synth_1d(size_t n,
                                        double gap,
                                        size_t n_test,
                                        struct CbDataset **train,
                                        struct CbDataset **test);

// Releases a dataset. NULL is ignored.
//
// # Safety
// `ds` must come from this library and not be used afterwards.
void covbound_dataset_free(struct CbDataset *ds);

// Number of points, or 0 for NULL.
//
// # Safety
// `ds` must be NULL or a live dataset handle.
size_t covbound_dataset_len(const struct CbDataset *ds);

// Dimension, or 0 for NULL.
//
// # Safety
// `ds` must be NULL or a live dataset handle.
size_t covbound_dataset_dim(const struct CbDataset *ds);

// Total cover, cover difference, cover complexity and separation gap.
//
// # Safety
// Handles must be live; `out` must be valid for writes.
enum CbStatus covbound_cover(const struct CbDataset *train,
                             const struct CbDataset *test,
                             struct CbCoverSummary *out);

// Smallest distance between differently labeled points.
//
// # Safety
// `ds` must be live; `out` must be valid for writes.
enum CbStatus covbound_separation_gap(const struct CbDataset *ds, double *out);

// He-initialized network with layer sizes `sizes[0..n_sizes]` (input
// dimension first, class count last).
//
// # Safety
// `sizes` must hold `n_sizes` values.
enum CbStatus covbound_mlp_new(const size_t *sizes,
                               size_t n_sizes,
                               uint64_t seed,
                               struct CbMlp **out);

// Loads a JSON checkpoint.
//
// # Safety
// `path` must be a NUL-terminated string.
enum CbStatus covbound_mlp_load(const char *path_, struct CbMlp **out);

// Writes a JSON checkpoint.
//
// # Safety
// `net` must be live; `path` a NUL-terminated string.
enum CbStatus covbound_mlp_save(const struct CbMlp *net, const char *path_);

// Releases a network. NULL is ignored.
//
// # Safety
// `net` must come from this library and not be used afterwards.
void covbound_mlp_free(struct CbMlp *net);

// Class probabilities at one input. `x` holds the input dimension's
// values; `probs` receives `probs_len` values, which must equal the class
// count.
//
// # Safety
// Buffers must be valid for the given lengths.
enum CbStatus covbound_mlp_forward(const struct CbMlp *net,
                                   const double *x,
                                   size_t x_len,
                                   double *probs,
                                   size_t probs_len);

// Full-batch Adam training on a single-label dataset.
//
// # Safety
// Handles must be live.
enum CbStatus covbound_mlp_train(struct CbMlp *net,
                                 const struct CbDataset *data,
                                 double learning_rate,
                                 size_t iterations,
                                 uint64_t seed);

// Grid estimate of `delta_f(eps)` on `[0,1]^d` (`d` = 1 or 2) with
// `resolution` points per axis.
//
// # Safety
// `net` must be live; `out` must be valid for writes.
enum CbStatus covbound_delta_f_grid(const struct CbMlp *net,
                                    size_t resolution,
                                    double eps,
                                    double *out);

// `1 - (sqrt(dim) / delta)(1 - rho)`; negative values are vacuous bounds.
//
// # Safety
// `out` must be valid for writes.
enum CbStatus covbound_lower_bound(double rho, size_t dim, double delta, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COVBOUND_H */
