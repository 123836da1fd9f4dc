/**
 * Copyright 2026 The tractaug Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the tractaug library.
 *
 * Objects are opaque handles created by ta_*_create / ta_*_read and released
 * with the matching ta_*_free (free functions accept NULL). Every fallible
 * call returns a ta_status; on failure ta_last_error() describes the error
 * for the calling thread until its next failing call. Strings returned
 * through char** outputs are owned by the caller and released with
 * ta_string_free. Pointers returned through const outputs stay valid while
 * their handle lives.
 */
#ifndef TRACTAUG_H
#define TRACTAUG_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TA_API __declspec(dllexport)
#else
#define TA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ta_status {
  TA_OK = 0,
  TA_ERR_INVALID_ARGUMENT = 1,
  TA_ERR_GEOMETRY_MISMATCH = 2,
  TA_ERR_IO = 3,
  TA_ERR_BAD_MAGIC = 4,
  TA_ERR_UNSUPPORTED_DATATYPE = 5,
  TA_ERR_NOT_3D = 6,
  TA_ERR_TRUNCATED = 7,
  TA_ERR_SCHEMA = 8,
  TA_ERR_AUGMENTATION_EXHAUSTED = 9,
  TA_ERR_TRAINING = 10,
  TA_ERR_INTERNAL = 99
} ta_status;

typedef enum ta_strategy { TA_RC1 = 1, TA_RC2 = 2, TA_TC1 = 3, TA_TC2 = 4 } ta_strategy;

typedef struct ta_volume ta_volume;   /* float image with geometry */
typedef struct ta_mask ta_mask;       /* binary mask with geometry */
typedef struct ta_labels ta_labels;   /* named tract masks sharing one geometry */
typedef struct ta_model ta_model;     /* segmenter checkpoint */
typedef struct ta_samples ta_samples; /* synthetic (image, labels) pairs */

TA_API const char* ta_version(void);
TA_API const char* ta_last_error(void);
TA_API const char* ta_status_name(ta_status status);
TA_API void ta_string_free(char* s);

/* Worker threads used by parallel sections (>= 1). Results never depend on it. */
TA_API ta_status ta_set_threads(int threads);
TA_API int ta_get_threads(void);
/* "debug", "info", "warn", "error" or "off". */
TA_API ta_status ta_set_log_level(const char* level);

/* Volumes. dims are (x, y, z) with x fastest in `data`; spacing in mm. */
TA_API ta_status ta_volume_create(const int64_t dims[3], const float spacing[3], const float* data, ta_volume** out);
TA_API ta_status ta_volume_read(const char* path, ta_volume** out);
TA_API ta_status ta_volume_write(const ta_volume* v, const char* path);
TA_API ta_status ta_volume_dims(const ta_volume* v, int64_t dims[3]);
TA_API ta_status ta_volume_data(const ta_volume* v, const float** data, size_t* count);
TA_API void ta_volume_free(ta_volume* v);

/* Masks. `data` holds one byte per voxel, 0 or 1. */
TA_API ta_status ta_mask_create(const int64_t dims[3], const float spacing[3], const uint8_t* data, ta_mask** out);
TA_API ta_status ta_mask_read(const char* path, ta_mask** out);
TA_API ta_status ta_mask_write(const ta_mask* m, const char* path);
TA_API ta_status ta_mask_data(const ta_mask* m, const uint8_t** data, size_t* count);
TA_API ta_status ta_mask_count(const ta_mask* m, size_t* count);
TA_API void ta_mask_free(ta_mask* m);

/* Label maps. The masks are copied. */
TA_API ta_status ta_labels_create(const char* const* names, const ta_mask* const* channels, size_t count,
                                  ta_labels** out);
TA_API ta_status ta_labels_count(const ta_labels* l, size_t* count);
TA_API ta_status ta_labels_name(const ta_labels* l, size_t index, const char** name);
TA_API ta_status ta_labels_channel(const ta_labels* l, size_t index, ta_mask** out);
TA_API void ta_labels_free(ta_labels* l);

/* Masking-based augmentation: min(2^N - 1, 100) distinct samples. */
TA_API ta_status ta_augment(const ta_volume* image, const ta_labels* labels, ta_strategy strategy, uint64_t seed,
                            ta_samples** out);
TA_API ta_status ta_samples_count(const ta_samples* s, size_t* count);
TA_API ta_status ta_samples_image(const ta_samples* s, size_t index, ta_volume** out);
TA_API ta_status ta_samples_labels(const ta_samples* s, size_t index, ta_labels** out);
TA_API void ta_samples_free(ta_samples* s);

/* Majority vote over `count` label maps; ties go to foreground. */
TA_API ta_status ta_majority_vote(const ta_labels* const* predictions, size_t count, ta_labels** out);

/* Metrics. */
TA_API ta_status ta_dice(const ta_mask* a, const ta_mask* b, double* out);
TA_API ta_status ta_paired_t_test(const double* x, const double* y, size_t n, double* t, double* p);

/* Models. */
TA_API ta_status ta_model_load(const char* path, ta_model** out);
TA_API ta_status ta_model_save(const ta_model* m, const char* path);
TA_API ta_status ta_model_predict(const ta_model* m, const ta_volume* image, ta_labels** out);
TA_API void ta_model_free(ta_model* m);

/* Runs a workflow ("phantom", "augment", "train-pretrain", "adapt",
 * "predict", "ensemble", "dice", "experiment") with JSON options. On
 * success *result_json (may be NULL) receives a JSON summary. */
TA_API ta_status ta_run_workflow(const char* name, const char* options_json, char** result_json);

#ifdef __cplusplus
}
#endif

#endif /* TRACTAUG_H */
