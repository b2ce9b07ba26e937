#ifndef UNICLS_H
#define UNICLS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum UcBiasMode {
  UC_BIAS_MODE_ZERO = 0,
  UC_BIAS_MODE_DIVERSE = 1,
  UC_BIAS_MODE_UNIFIED = 2,
} UcBiasMode;

typedef enum UcFamily {
  UC_FAMILY_LINEAR = 0,
  UC_FAMILY_NORMALIZED = 1,
} UcFamily;

typedef enum UcStatus {
  UC_STATUS_OK = 0,
  UC_STATUS_NULL_POINTER = 1,
  UC_STATUS_INVALID_ARGUMENT = 2,
  UC_STATUS_DIMENSION_MISMATCH = 3,
  UC_STATUS_ZERO_NORM = 4,
  UC_STATUS_PARSE_ERROR = 5,
  UC_STATUS_IO_ERROR = 6,
  UC_STATUS_NO_CORRECT_SAMPLES = 7,
  UC_STATUS_PANIC = 8,
} UcStatus;

typedef struct UcDataset UcDataset;

typedef struct UcHead UcHead;

typedef struct UcMetricBatch UcMetricBatch;

/**
 * Accuracies in percent and the optimal unified threshold.
 */
typedef struct UcAccuracy {
  double a_sw;
  double a_cw;
  double a_uni;
  double t_star;
  size_t num_samples;
  size_t sw_count;
  size_t cw_count;
  size_t uni_count;
} UcAccuracy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *uc_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *uc_version(void);

/**
 * `features` holds `num_samples × dim` values row by row; `labels` holds
 * `num_samples` class indices below `num_classes`.
 */
enum UcStatus uc_dataset_new(const double *features,
                             const size_t *labels,
                             size_t num_samples,
                             size_t dim,
                             size_t num_classes,
                             struct UcDataset **out);

/**
 * Loads a feature CSV (`id,label,f0,...`).
 */
enum UcStatus uc_dataset_load_csv(const char *path, struct UcDataset **out);

size_t uc_dataset_len(const struct UcDataset *data);

void uc_dataset_free(struct UcDataset *data);

/**
 * `weights` holds `num_classes × dim` values: row `j` is the weight
 * vector of class `j`.
 */
enum UcStatus uc_head_new(const double *weights,
                          const double *bias,
                          size_t num_classes,
                          size_t dim,
                          enum UcFamily family,
                          enum UcBiasMode bias_mode,
                          double gamma,
                          struct UcHead **out);

/**
 * Loads a head saved as JSON by the command-line tool.
 */
enum UcStatus uc_head_load_json(const char *path, struct UcHead **out);

void uc_head_free(struct UcHead *head);

/**
 * Wraps precomputed metrics: `values` holds `num_samples × num_classes`
 * entries row by row.
 */
enum UcStatus uc_metric_batch_new(const double *values,
                                  const size_t *labels,
                                  size_t num_samples,
                                  size_t num_classes,
                                  struct UcMetricBatch **out);

enum UcStatus uc_compute_metrics(const struct UcHead *head,
                                 const struct UcDataset *data,
                                 bool include_bias,
                                 struct UcMetricBatch **out);

/**
 * Row-wise SoftMax of every sample's metrics, as a new batch.
 */
enum UcStatus uc_metric_batch_softmax(const struct UcMetricBatch *batch,
                                      struct UcMetricBatch **out);

size_t uc_metric_batch_len(const struct UcMetricBatch *batch);

/**
 * Copies all `len × num_classes` metric values into `out`, which must
 * hold `capacity` doubles.
 */
enum UcStatus uc_metric_batch_values(const struct UcMetricBatch *batch,
                                     double *out,
                                     size_t capacity);

void uc_metric_batch_free(struct UcMetricBatch *batch);

enum UcStatus uc_evaluate(const struct UcMetricBatch *batch, struct UcAccuracy *out);

/**
 * Optimal per-class thresholds. `has_threshold[i]` is 0 for classes without
 * samples, in which case `thresholds[i]` is NaN.
 */
enum UcStatus uc_class_thresholds(const struct UcMetricBatch *batch,
                                  double *thresholds,
                                  uint8_t *has_threshold,
                                  size_t num_classes);

/**
 * Loss of one sample from its bias-free metrics. `loss` is one of the
 * twelve table names such as `"bce-nu"`.
 */
enum UcStatus uc_loss_value(const char *loss,
                            double gamma,
                            const double *raw_metrics,
                            const double *bias,
                            size_t num_classes,
                            size_t label,
                            double *out);

/**
 * Minimizer of the unified-bias BCE loss with positives at `upper` and
 * negatives at `lower`.
 */
enum UcStatus uc_stationary_bias(double lower, double upper, size_t num_classes, double *out);

enum UcStatus uc_corollary_condition(double lower, double upper, size_t num_classes, bool *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UNICLS_H */
