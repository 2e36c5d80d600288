#ifndef MVFUSE_H
#define MVFUSE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MvfuseStatus {
  MVFUSE_STATUS_OK = 0,
  MVFUSE_STATUS_NULL_POINTER = 1,
  MVFUSE_STATUS_INVALID_ARGUMENT = 2,
  MVFUSE_STATUS_IO = 3,
  MVFUSE_STATUS_PARSE = 4,
  MVFUSE_STATUS_FORMAT = 5,
  MVFUSE_STATUS_DATASET = 6,
  MVFUSE_STATUS_CONFIG = 7,
  MVFUSE_STATUS_SHAPE = 8,
  MVFUSE_STATUS_PANIC = 9,
} MvfuseStatus;

typedef struct MvfuseDataset MvfuseDataset;

typedef struct MvfuseModel MvfuseModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *mvfuse_last_error(void);

/**
 * Loads a dataset from a manifest file.
 */
enum MvfuseStatus mvfuse_dataset_load(const char *path, struct MvfuseDataset **out_dataset);

/**
 * Generates a synthetic dataset. `scheme` is `"xor2"` or `"shared+specific"`;
 * `shared` only affects the latter.
 */
enum MvfuseStatus mvfuse_dataset_synthetic(const char *scheme,
                                           size_t samples,
                                           size_t views,
                                           size_t classes,
                                           size_t dim,
                                           double noise,
                                           double shared,
                                           uint64_t seed,
                                           struct MvfuseDataset **out_dataset);

/**
 * Number of samples; 0 for a null handle.
 */
size_t mvfuse_dataset_len(const struct MvfuseDataset *ds);

size_t mvfuse_dataset_num_views(const struct MvfuseDataset *ds);

size_t mvfuse_dataset_num_classes(const struct MvfuseDataset *ds);

/**
 * Width of view `view`; 0 when out of range.
 */
size_t mvfuse_dataset_view_dim(const struct MvfuseDataset *ds, size_t view);

void mvfuse_dataset_free(struct MvfuseDataset *ds);

/**
 * Runs the full protocol and writes mean and standard deviation of the test
 * accuracy. `config_path` (a TOML experiment config) and `fusion` may be
 * null; the dataset comes from `ds` either way.
 */
enum MvfuseStatus mvfuse_bench(const struct MvfuseDataset *ds,
                               const char *config_path,
                               const char *fusion,
                               double *out_mean,
                               double *out_std);

/**
 * Trains one run (seed = configured seed + `run`) and returns the selected
 * model together with its normalization.
 */
enum MvfuseStatus mvfuse_train(const struct MvfuseDataset *ds,
                               const char *config_path,
                               const char *fusion,
                               size_t run,
                               struct MvfuseModel **out_model);

enum MvfuseStatus mvfuse_model_load(const char *path, struct MvfuseModel **out_model);

enum MvfuseStatus mvfuse_model_save(const struct MvfuseModel *m, const char *path);

size_t mvfuse_model_num_views(const struct MvfuseModel *m);

size_t mvfuse_model_num_classes(const struct MvfuseModel *m);

size_t mvfuse_model_view_dim(const struct MvfuseModel *m, size_t view);

/**
 * Class probabilities for `rows` samples of raw (unnormalized) features.
 * `views` holds one pointer per model view to a row-major
 * `rows × view_dim` block; `out` receives `rows × num_classes` values and
 * must have room for `out_len >= rows * num_classes`.
 */
enum MvfuseStatus mvfuse_model_predict(const struct MvfuseModel *m,
                                       const double *const *views,
                                       size_t rows,
                                       double *out,
                                       size_t out_len);

/**
 * Accuracy over every sample of `ds`, normalized with the model's statistics.
 */
enum MvfuseStatus mvfuse_model_evaluate(const struct MvfuseModel *m,
                                        const struct MvfuseDataset *ds,
                                        double *out_accuracy);

void mvfuse_model_free(struct MvfuseModel *m);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MVFUSE_H */
