/*
 * mbda: model-based domain adaptation for diffusion-weighted MRI lesion
 * classification. C interface over the C++ core.
 *
 * Conventions:
 *  - Every fallible call returns mbda_status. On failure a human-readable
 *    message is available from mbda_last_error() on the calling thread.
 *  - Handles are opaque and owned by the caller; release them with the
 *    matching *_free function. Freeing NULL is a no-op.
 *  - Strings returned through char** are heap-allocated by the library and
 *    must be released with mbda_string_free().
 *  - Configuration arguments are UTF-8 JSON text (NULL or "" selects the
 *    defaults). Fit configs use the keys of the "fit" section of a run
 *    config; run configs use the full layout documented in README.md.
 *  - Labels are 0 = benign, 1 = malignant.
 */
#ifndef MBDA_MBDA_H
#define MBDA_MBDA_H

#include <stddef.h>
#include <stdint.h>

#if defined(MBDA_BUILDING_LIBRARY)
#define MBDA_API __attribute__((visibility("default")))
#else
#define MBDA_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mbda_status {
  MBDA_OK = 0,
  MBDA_ERR_INVALID_ARGUMENT = 1,
  MBDA_ERR_FORMAT = 2,
  MBDA_ERR_PROTOCOL = 3,
  MBDA_ERR_DIMENSION_MISMATCH = 4,
  MBDA_ERR_IO = 5,
  MBDA_ERR_EMPTY_FAT_MASK = 6,
  MBDA_ERR_MISSING_BVALUE = 7,
  MBDA_ERR_B0_REQUIRED = 8,
  MBDA_ERR_UNDER_DETERMINED = 9,
  MBDA_ERR_DEGENERATE_INPUT = 10,
  MBDA_ERR_EMPTY_MASK = 11,
  MBDA_ERR_GEOMETRY = 12,
  MBDA_ERR_SHAPE_MISMATCH = 13,
  MBDA_ERR_SINGLE_CLASS_TRAINING = 14,
  MBDA_ERR_TOO_FEW_CASES = 15,
  MBDA_ERR_SINGLE_CLASS = 16,
  MBDA_ERR_LABEL_MISMATCH = 17,
  MBDA_ERR_INVALID_P = 18,
  MBDA_ERR_VALIDATION = 19,
  MBDA_ERR_BUFFER_TOO_SMALL = 20,
  MBDA_ERR_INTERNAL = 100
} mbda_status;

typedef enum mbda_log_level {
  MBDA_LOG_TRACE = 0,
  MBDA_LOG_DEBUG = 1,
  MBDA_LOG_INFO = 2,
  MBDA_LOG_WARN = 3,
  MBDA_LOG_ERROR = 4,
  MBDA_LOG_OFF = 6
} mbda_log_level;

MBDA_API const char* mbda_version(void);
MBDA_API const char* mbda_status_name(mbda_status status);
/* Message of the last failed call on this thread ("" if none). */
MBDA_API const char* mbda_last_error(void);
MBDA_API void mbda_string_free(char* str);
/* Diagnostics go to standard error. */
MBDA_API void mbda_set_log_level(mbda_log_level level);

/* Validates a run config and returns it with every default filled in. */
MBDA_API mbda_status mbda_config_resolve(const char* config_json, char** resolved_json);

/* ---- DWI stacks -------------------------------------------------------- */

typedef struct mbda_stack mbda_stack;

/* path: stack directory or its manifest.json. */
MBDA_API mbda_status mbda_stack_load(const char* path, mbda_stack** out);
/* meta_json (nullable): {"id": ..., "label": "benign"|"malignant", ...extra}. */
MBDA_API mbda_status mbda_stack_save(const mbda_stack* stack, const char* dir,
                                     const char* meta_json);
MBDA_API void mbda_stack_free(mbda_stack* stack);
MBDA_API mbda_status mbda_stack_shape(const mbda_stack* stack, size_t* width, size_t* height,
                                      size_t* n_bvalues);
MBDA_API mbda_status mbda_stack_bvalues(const mbda_stack* stack, double* out, size_t capacity);
MBDA_API mbda_status mbda_stack_theta(const mbda_stack* stack, double* theta);
/* Copies plane `index` (protocol order), row-major, width*height floats. */
MBDA_API mbda_status mbda_stack_plane(const mbda_stack* stack, size_t index, float* out,
                                      size_t capacity);
/* Lesion mask as width*height bytes (0/1). */
MBDA_API mbda_status mbda_stack_lesion_mask(const mbda_stack* stack, uint8_t* out,
                                            size_t capacity);
/* Manifest metadata loaded with the stack: id, label and extra fields. */
MBDA_API mbda_status mbda_stack_meta(const mbda_stack* stack, char** json_out);
MBDA_API mbda_status mbda_stack_subset(const mbda_stack* stack, const double* keep, size_t n,
                                       mbda_stack** out);

/* ---- Kurtosis signal model -------------------------------------------- */

typedef struct mbda_dki_params {
  double s0;
  double adc;   /* mm^2/s */
  double akc;
  double theta; /* fixed fat background level */
} mbda_dki_params;

typedef struct mbda_fit_result {
  mbda_dki_params params;
  double residual_norm;
  int iterations;
  int converged;
} mbda_fit_result;

MBDA_API double mbda_forward_signal(const mbda_dki_params* params, double b);
/* out = (dS/dS0, dS/dADC, dS/dAKC). */
MBDA_API mbda_status mbda_forward_jacobian(const mbda_dki_params* params, double b,
                                           double out[3]);
MBDA_API mbda_status mbda_fit_voxel(const double* bvalues, const double* signals, size_t n,
                                    double theta, const char* fit_config_json,
                                    mbda_fit_result* out);
/* Fits every lesion voxel. Writes parameter maps to out_dir when non-NULL.
 * ROI means are NaN when the lesion mask is empty. */
MBDA_API mbda_status mbda_fit_roi(const mbda_stack* stack, const char* fit_config_json,
                                  const char* out_dir, double* adc_mean, double* akc_mean);
MBDA_API double mbda_threshold_classify(double adc_mean, double threshold, double width);

/* ---- Domain adaptation ------------------------------------------------- */

/* Model prediction at target_b for lesion voxels (zero elsewhere). */
MBDA_API mbda_status mbda_restore_channel(const mbda_stack* stack, double target_b,
                                          const char* fit_config_json, float* out,
                                          size_t capacity);
/* Rebuilds the training protocol's channels. report_json (nullable) receives
 * {"kept": [...], "derived": [...], "dropped": [...]}. */
MBDA_API mbda_status mbda_adapt_stack(const mbda_stack* inference, const double* training,
                                      size_t n_training, const char* fit_config_json,
                                      mbda_stack** out, char** report_json);

/* ---- Synthetic phantoms ------------------------------------------------ */

/* Generates a dataset (one stack directory per case plus dataset.json) from
 * a run config. index_json (nullable) receives the dataset index. */
MBDA_API mbda_status mbda_phantom_generate(const char* config_json, const char* out_dir,
                                           char** index_json);

/* ---- Classifier -------------------------------------------------------- */

typedef struct mbda_network mbda_network;

/* options_json: {"architecture": "e2e"|"f2e", "protocol": [b...],
 *                "fold": k}  trains on fold k's training part and selects on
 * its validation part of the stratified split. */
MBDA_API mbda_status mbda_network_train(const char* dataset_dir, const char* config_json,
                                        const char* options_json, mbda_network** out);
MBDA_API mbda_status mbda_network_load(const char* file, mbda_network** out);
MBDA_API mbda_status mbda_network_save(const mbda_network* net, const char* file);
MBDA_API void mbda_network_free(mbda_network* net);
MBDA_API mbda_status mbda_network_info(const mbda_network* net, char** json_out);
/* options_json: {"mode": "matched"|"altered"|"mbda", "inference": [b...],
 *                "kind": "missing"|"shifted", "fold": k | -1 for all cases}
 * csv_out receives "id,label,score" rows in case-id order. */
MBDA_API mbda_status mbda_network_predict_dataset(const mbda_network* net,
                                                  const char* dataset_dir,
                                                  const char* config_json,
                                                  const char* options_json, char** csv_out);

/* ---- Statistics -------------------------------------------------------- */

typedef struct mbda_delong {
  double auc_a;
  double auc_b;
  double var_a;
  double var_b;
  double cov_ab;
  double z;
  double p_two_sided;
  int degenerate;
} mbda_delong;

MBDA_API mbda_status mbda_auc(const double* scores, const int* labels, size_t n, double* out);
MBDA_API mbda_status mbda_delong_variance(const double* scores, const int* labels, size_t n,
                                          double* out);
MBDA_API mbda_status mbda_delong_test(const double* scores_a, const double* scores_b,
                                      const int* labels, size_t n, mbda_delong* out);
/* reject[i] = 1 when hypothesis i is rejected. */
MBDA_API mbda_status mbda_holm_bonferroni(const double* pvalues, size_t n, double alpha,
                                          int* reject);

/* ---- Scenario matrix --------------------------------------------------- */

/* JSON array of {"training", "inference", "kind"} rows. */
MBDA_API mbda_status mbda_scenario_enumerate(const double* full_protocol, size_t n,
                                             const char* kind, char** json_out);
/* options_json: {"kind": "missing"|"shifted", "training": [...],
 *                "inference": [...]}; training/inference select a single row.
 * Writes report.csv, report.json, summary.json and results.json. */
MBDA_API mbda_status mbda_scenario_run(const char* dataset_dir, const char* config_json,
                                       const char* options_json, const char* out_dir);
/* Re-emits the report files from a results.json written by a scenario run. */
MBDA_API mbda_status mbda_report_emit(const char* results_json, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* MBDA_MBDA_H */
