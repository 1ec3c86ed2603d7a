#ifndef DEEPPHARM_DEEPPHARM_H
#define DEEPPHARM_DEEPPHARM_H

#include <stddef.h>
#include <stdint.h>

#if defined(DEEPPHARM_BUILDING)
#define DP_API __attribute__((visibility("default")))
#else
#define DP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dp_status {
  DP_OK = 0,
  DP_ERR_IO = 1,
  DP_ERR_MISSING_COLUMN,
  DP_ERR_NON_NUMERIC_CELL,
  DP_ERR_RANGE_VIOLATION,
  DP_ERR_DUPLICATE_ID,
  DP_ERR_NO_LABELS,
  DP_ERR_ALREADY_NORMALIZED,
  DP_ERR_RESULT_OUT_OF_RANGE,
  DP_ERR_EMPTY_INPUT,
  DP_ERR_UNBALANCED_BRANCH,
  DP_ERR_UNMATCHED_RING_CLOSURE,
  DP_ERR_UNKNOWN_ELEMENT,
  DP_ERR_VALENCE_VIOLATION,
  DP_ERR_SMILES_SYNTAX,
  DP_ERR_BAD_RADIUS,
  DP_ERR_BAD_WIDTH,
  DP_ERR_NOT_STANDARDIZED,
  DP_ERR_NOT_NORMALIZED,
  DP_ERR_TOO_FEW_RECORDS,
  DP_ERR_EMPTY_SUBSET_FOR_TASK,
  DP_ERR_BAD_GROUP_COUNT,
  DP_ERR_BAD_SPEC,
  DP_ERR_SHAPE_MISMATCH,
  DP_ERR_NON_BINARY_LABEL,
  DP_ERR_EMPTY_TRAINING_SET,
  DP_ERR_VERSION_MISMATCH,
  DP_ERR_CORRUPT_FILE,
  DP_ERR_INCOMPATIBLE_PRETRAINED,
  DP_ERR_NO_MEMBER_FOR_TASK,
  DP_ERR_EMPTY_VALIDATION_TASK,
  DP_ERR_K_TOO_LARGE,
  DP_ERR_NO_POSITIVES,
  DP_ERR_EMPTY_TASK,
  DP_ERR_CONFIG,
  DP_ERR_MISSING_ARTIFACT,
  DP_ERR_INVALID_ARGUMENT,
  DP_ERR_INTERNAL = 100
} dp_status;

/* Tasks, in column order: bioavailability, plasma protein binding rate,
   apparent volume of distribution at steady state, elimination half-life. */
enum { DP_TASK_BA = 0, DP_TASK_PPBR = 1, DP_TASK_VDSS = 2, DP_TASK_HL = 3, DP_NUM_TASKS = 4 };

enum { DP_SUBSET_TRAIN = 0, DP_SUBSET_VAL = 1, DP_SUBSET_TEST = 2 };

typedef struct dp_dataset dp_dataset;
typedef struct dp_split dp_split;
typedef struct dp_model dp_model;
typedef struct dp_pipeline dp_pipeline;

DP_API const char* dp_version(void);
DP_API const char* dp_status_name(dp_status status);
/* Message of the last failure on the calling thread; "" after success. */
DP_API const char* dp_last_error(void);

/* Strings returned through char** are owned by the caller. */
DP_API void dp_string_free(char* s);

/* ---- fingerprints ---- */

/* Writes nbits bytes of 0/1 into bits_out. */
DP_API dp_status dp_ecfp(const char* smiles, int radius, size_t nbits, uint8_t* bits_out);

/* ---- datasets ---- */

DP_API dp_status dp_dataset_load(const char* path, dp_dataset** out);
DP_API void dp_dataset_free(dp_dataset* ds);
DP_API size_t dp_dataset_size(const dp_dataset* ds);
/* divisors may be NULL for the defaults (100, 100, 2000, 168). */
DP_API dp_status dp_dataset_normalize(dp_dataset* ds, const double* divisors);
DP_API dp_status dp_dataset_label(const dp_dataset* ds, size_t row, int task, double* value,
                                  int* present);
DP_API dp_status dp_dataset_save(const dp_dataset* ds, const char* path);

/* ---- splitting ---- */

DP_API dp_status dp_split_mdfiswd(const dp_dataset* ds, double w1, double w2, uint64_t seed,
                                  dp_split** out);
DP_API dp_status dp_split_random(const dp_dataset* ds, uint64_t seed, dp_split** out);
DP_API void dp_split_free(dp_split* split);
DP_API size_t dp_split_count(const dp_split* split, int subset);
/* labels_out receives one DP_SUBSET_* value per record. */
DP_API dp_status dp_split_labels(const dp_split* split, size_t n, int* labels_out);
DP_API dp_status dp_subset_error(const dp_dataset* ds, const dp_split* split, int task,
                                 int ngroups, double* out);

/* ---- networks ---- */

/* sizes holds count widths: input, hidden..., output. tanh hidden layers,
   sigmoid output. */
DP_API dp_status dp_model_init(const size_t* sizes, size_t count, uint64_t seed, dp_model** out);
DP_API dp_status dp_model_load(const char* path, dp_model** out);
DP_API dp_status dp_model_save(const dp_model* model, const char* path);
DP_API void dp_model_free(dp_model* model);
DP_API size_t dp_model_input_width(const dp_model* model);
DP_API size_t dp_model_output_width(const dp_model* model);
DP_API size_t dp_model_layer_count(const dp_model* model);
/* inputs is rows x input_width, outputs rows x output_width, both row-major. */
DP_API dp_status dp_model_forward(const dp_model* model, const double* inputs, size_t rows,
                                  double* outputs);
DP_API dp_status dp_model_transfer(const dp_model* pretrained, size_t task_layer,
                                   size_t out_width, uint64_t seed, int freeze_features,
                                   dp_model** out);

/* ---- metrics ---- */

DP_API dp_status dp_accuracy_at(const double* pred, const double* label, size_t n,
                                double threshold, double* out);
DP_API dp_status dp_mae(const double* pred, const double* label, size_t n, double* out);
DP_API dp_status dp_recall(const double* pred, const double* label, size_t n, double cutoff,
                           double* out);

/* ---- pipeline ---- */

DP_API dp_status dp_default_config(char** json_out);

typedef void (*dp_log_fn)(const char* line, void* user);

/* config_path may be NULL for the default configuration. */
DP_API dp_status dp_pipeline_create(const char* config_path, const char* out_dir,
                                    dp_pipeline** out);
DP_API void dp_pipeline_free(dp_pipeline* p);
DP_API dp_status dp_pipeline_set_seed(dp_pipeline* p, uint64_t seed);
DP_API dp_status dp_pipeline_set_threads(dp_pipeline* p, size_t threads);
DP_API dp_status dp_pipeline_set_log(dp_pipeline* p, dp_log_fn fn, void* user);
/* One of: fingerprint split pretrain train transfer consensus evaluate predict. */
DP_API dp_status dp_pipeline_run(dp_pipeline* p, const char* subcommand);

#ifdef __cplusplus
}
#endif

#endif
