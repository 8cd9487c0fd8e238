/* C interface for the fall-risk assessment library. */

#ifndef IFRA_H
#define IFRA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum IfraStatus {
  IFRA_STATUS_OK = 0,
  // A required pointer argument was NULL.
  IFRA_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  IFRA_STATUS_INVALID_UTF8 = 2,
  // File could not be read or written.
  IFRA_STATUS_IO = 3,
  // File contents failed to parse or validate.
  IFRA_STATUS_PARSE = 4,
  // Input data violates a precondition.
  IFRA_STATUS_DATA = 5,
  // A numeric routine failed.
  IFRA_STATUS_NUMERIC = 6,
  // Unexpected internal failure.
  IFRA_STATUS_INTERNAL = 7,
} IfraStatus;

// Opaque feature catalog handle.
typedef struct IfraCatalog IfraCatalog;

// Opaque cohort handle.
typedef struct IfraDataset IfraDataset;

// Opaque risk-scale handle.
typedef struct IfraScale IfraScale;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static string; do not free.
const char *ifra_version(void);

// Message for the most recent error on this thread, or NULL if none.
// The caller owns the returned string.
char *ifra_last_error_message(void);

// Release a string returned by this library.
//
// # Safety
// `s` must have been returned by a function of this library and not yet
// freed; NULL is accepted and ignored.
void ifra_string_free(char *s);

// Load a feature catalog from a JSON file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be a valid pointer.
enum IfraStatus ifra_catalog_load(const char *path, struct IfraCatalog **out);

// Number of features in the catalog; 0 for NULL.
//
// # Safety
// `catalog` must be NULL or a live handle from this library.
size_t ifra_catalog_feature_count(const struct IfraCatalog *catalog);

// # Safety
// `catalog` must come from this library and not be freed twice.
void ifra_catalog_free(struct IfraCatalog *catalog);

// Load a cohort CSV against a catalog. Rows with missing feature cells
// are excluded; `excluded_out` (optional) receives how many.
//
// # Safety
// Pointer arguments must be valid; `catalog` must be a live handle.
enum IfraStatus ifra_dataset_load(const char *path,
                                  const struct IfraCatalog *catalog,
                                  struct IfraDataset **out,
                                  size_t *excluded_out);

// Number of subjects; 0 for NULL.
//
// # Safety
// `dataset` must be NULL or a live handle from this library.
size_t ifra_dataset_subject_count(const struct IfraDataset *dataset);

// Write the cohort back to CSV.
//
// # Safety
// `dataset` must be a live handle; `path` a NUL-terminated string.
enum IfraStatus ifra_dataset_save(const struct IfraDataset *dataset, const char *path);

// # Safety
// `dataset` must come from this library and not be freed twice.
void ifra_dataset_free(struct IfraDataset *dataset);

// Append `count` Gaussian-perturbed synthetic training fallers.
//
// # Safety
// `dataset` must be a live handle; `out` a valid pointer.
enum IfraStatus ifra_augment(const struct IfraDataset *dataset,
                             size_t count,
                             double noise_scale,
                             uint64_t seed,
                             struct IfraDataset **out);

// Load scale number `index` from a JSON file (0 for single-scale files).
//
// # Safety
// `path` must be a NUL-terminated string; `out` a valid pointer.
enum IfraStatus ifra_scale_load(const char *path, size_t index, struct IfraScale **out);

// The bundled 22-feature instrumented scale.
//
// # Safety
// `out` must be a valid pointer.
enum IfraStatus ifra_scale_builtin_ifra(struct IfraScale **out);

// Number of bundled clinical scales.
size_t ifra_builtin_clinical_count(void);

// One of the bundled clinical scales.
//
// # Safety
// `out` must be a valid pointer.
enum IfraStatus ifra_scale_builtin_clinical(size_t index, struct IfraScale **out);

// Scale name as a caller-owned string.
//
// # Safety
// `scale` must be NULL or a live handle from this library.
char *ifra_scale_name(const struct IfraScale *scale);

// Number of feature entries; 0 for NULL.
//
// # Safety
// `scale` must be NULL or a live handle from this library.
size_t ifra_scale_entry_count(const struct IfraScale *scale);

// # Safety
// `scale` must come from this library and not be freed twice.
void ifra_scale_free(struct IfraScale *scale);

// Stratify one subject with a scale. Writes 0/1/2 (low/medium/high) to
// `out_stratum`.
//
// # Safety
// Handles must be live; `subject_id` NUL-terminated; `out_stratum` valid.
enum IfraStatus ifra_assess_subject(const struct IfraDataset *dataset,
                                    const struct IfraScale *scale,
                                    const char *subject_id,
                                    int32_t *out_stratum);

// Evaluate a scale on one split (0/1/2, or 3 for all subjects). Writes
// the exact-test p-value and, when `out_counts` is non-NULL, the 2 x 3
// contingency counts row-major (non-fallers low/medium/high, then
// fallers).
//
// # Safety
// Handles must be live; output pointers valid (`out_counts` NULL or
// pointing at six u64 slots).
enum IfraStatus ifra_evaluate_scale(const struct IfraDataset *dataset,
                                    const struct IfraScale *scale,
                                    double alpha,
                                    int32_t split,
                                    double *out_p_value,
                                    uint64_t *out_counts);

// Run the feature-selection loop with default SVM settings and return
// the report as a caller-owned JSON string.
//
// # Safety
// `dataset` must be a live handle; `out_report_json` a valid pointer.
enum IfraStatus ifra_run_selection(const struct IfraDataset *dataset,
                                   size_t iterations,
                                   double accuracy_gate,
                                   double alpha,
                                   double relevance_threshold,
                                   uint64_t seed,
                                   char **out_report_json);

// Derive tertile thresholds from the dataset's training split for the
// features selected in `report_json` (the output of
// [`ifra_run_selection`]).
//
// # Safety
// `dataset` must be a live handle; `report_json` and `name`
// NUL-terminated; `out` a valid pointer.
enum IfraStatus ifra_derive_scale(const struct IfraDataset *dataset,
                                  const char *report_json,
                                  const char *name,
                                  struct IfraScale **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IFRA_H */
