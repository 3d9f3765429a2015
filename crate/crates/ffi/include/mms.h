#ifndef MMS_H
#define MMS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MmsStatus {
  MMS_STATUS_OK = 0,
  MMS_STATUS_NULL_POINTER = 1,
  MMS_STATUS_INVALID_ARGUMENT = 2,
  MMS_STATUS_INVALID_RANKING = 3,
  MMS_STATUS_DIMENSION_MISMATCH = 4,
  MMS_STATUS_EMPTY_DATASET = 5,
  MMS_STATUS_PARSE = 6,
  MMS_STATUS_COMPLETION_CAP_EXCEEDED = 7,
  MMS_STATUS_EXACT_RANGE_EXCEEDED = 8,
  MMS_STATUS_NUMERICAL = 9,
  MMS_STATUS_IO = 10,
  MMS_STATUS_CONFIG = 11,
  MMS_STATUS_PANIC = 99,
} MmsStatus;

/**
 * Opaque ranking dataset.
 */
typedef struct MmsDataset MmsDataset;

/**
 * Opaque distance model: the Spearman distance distribution for a fixed
 * number of items, exact or approximate according to the counts settings.
 */
typedef struct MmsModel MmsModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *mms_version(void);

/**
 * Message for the most recent failure on this thread, or NULL if the last
 * call succeeded. The pointer stays valid until the next call into the
 * library on the same thread.
 */
const char *mms_last_error(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and must not be freed twice.
 */
void mms_string_free(char *s);

/**
 * Parses rankings from CSV text: a header of item labels, one ranking per
 * row, empty or `NA` cells for unranked items, and an optional `freq`
 * column of multiplicities.
 *
 * # Safety
 * `csv` must be a NUL-terminated string and `out` a writable pointer.
 */
enum MmsStatus mms_dataset_from_csv(const char *csv, struct MmsDataset **out);

/**
 * Builds a dataset from a row-major `n_rows x n_items` array of ranks,
 * where 0 marks an unranked item. Items are labelled `item1..itemN`.
 *
 * # Safety
 * `ranks` must point to `n_rows * n_items` readable values and `out` must
 * be writable.
 */
enum MmsStatus mms_dataset_from_ranks(const uint32_t *ranks,
                                      size_t n_rows,
                                      size_t n_items,
                                      struct MmsDataset **out);

/**
 * Number of items, or 0 for NULL.
 *
 * # Safety
 * `data` must be NULL or a live dataset handle.
 */
size_t mms_dataset_n_items(const struct MmsDataset *data);

/**
 * Total sample size counting multiplicities, or 0 for NULL.
 *
 * # Safety
 * `data` must be NULL or a live dataset handle.
 */
uint64_t mms_dataset_total(const struct MmsDataset *data);

/**
 * # Safety
 * `data` must be NULL or a handle from this library not yet freed.
 */
void mms_dataset_free(struct MmsDataset *data);

/**
 * Builds the distance model for `n` items. Exact counts are used up to
 * `exact_max` items and the rate-function approximation above it; pass 0
 * for the default threshold.
 *
 * # Safety
 * `out` must be writable.
 */
enum MmsStatus mms_model_new(size_t n, size_t exact_max, struct MmsModel **out);

/**
 * Whether the model's counts are exact rather than approximated.
 *
 * # Safety
 * `model` must be NULL or a live model handle.
 */
bool mms_model_is_exact(const struct MmsModel *model);

/**
 * Writes `log Z(theta)` to `out`.
 *
 * # Safety
 * `model` must be a live model handle and `out` writable.
 */
enum MmsStatus mms_model_log_partition(const struct MmsModel *model, double theta, double *out);

/**
 * # Safety
 * `model` must be NULL or a handle from this library not yet freed.
 */
void mms_model_free(struct MmsModel *model);

/**
 * Fits mixtures with `g_min..=g_max` components by EM and selects `G` by
 * the BIC elbow rule. On success `*json_out` holds the fit-result document
 * (release it with [`mms_string_free`]).
 *
 * # Safety
 * `data` and `model` must be live handles and `json_out` writable.
 */
enum MmsStatus mms_fit(const struct MmsDataset *data,
                       const struct MmsModel *model,
                       size_t g_min,
                       size_t g_max,
                       size_t n_starts,
                       uint64_t seed,
                       char **json_out);

/**
 * Runs a simulation study described by TOML text and writes the report
 * as JSON to `*json_out`.
 *
 * # Safety
 * `spec_toml` must be a NUL-terminated string and `json_out` writable.
 */
enum MmsStatus mms_simulate(const char *spec_toml, char **json_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MMS_H */
