/* Copyright 2026 The OGRS Lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the experiment harness. Handles are opaque; every call that
 * can fail returns an ogrs_status and leaves a message for ogrs_last_error()
 * on the calling thread. */

#ifndef OGRS_LAB_H_
#define OGRS_LAB_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define OGRS_LAB_API __declspec(dllexport)
#else
#define OGRS_LAB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ogrs_status {
  OGRS_OK = 0,
  OGRS_ERR_INVALID_ARGUMENT = 1,
  OGRS_ERR_SCHEDULE_GAP = 2,
  OGRS_ERR_VALIDATION = 3,
  OGRS_ERR_PARSE = 4,
  OGRS_ERR_EMPTY_DATASET = 5,
  OGRS_ERR_IO = 6,
  OGRS_ERR_GUARD = 7,
  OGRS_ERR_INCOMPLETE_TRACE = 8,
  OGRS_ERR_RUN_FAILED = 9,
  OGRS_ERR_INTERNAL = 10
} ogrs_status;

typedef struct ogrs_config ogrs_config;
typedef struct ogrs_result ogrs_result;

OGRS_LAB_API const char* ogrs_version(void);
OGRS_LAB_API const char* ogrs_status_name(ogrs_status status);
/* Message of the last failed call on this thread; "" when none. */
OGRS_LAB_API const char* ogrs_last_error(void);

OGRS_LAB_API ogrs_status ogrs_config_load(const char* path, ogrs_config** out);
OGRS_LAB_API ogrs_status ogrs_config_parse(const char* text, ogrs_config** out);
OGRS_LAB_API void ogrs_config_free(ogrs_config* config);
/* Full YAML rendering; release with ogrs_string_free. */
OGRS_LAB_API ogrs_status ogrs_config_serialize(const ogrs_config* config, char** out);
OGRS_LAB_API void ogrs_string_free(char* text);
OGRS_LAB_API ogrs_status ogrs_config_set_seeds(ogrs_config* config, const uint64_t* seeds, size_t count);
OGRS_LAB_API ogrs_status ogrs_config_set_output_dir(ogrs_config* config, const char* dir);
OGRS_LAB_API ogrs_status ogrs_config_set_m_grid(ogrs_config* config, const int* m_grid, size_t count);
OGRS_LAB_API ogrs_status ogrs_config_set_slope_max(ogrs_config* config, double slope_max);
OGRS_LAB_API ogrs_status ogrs_config_equal(const ogrs_config* a, const ogrs_config* b, int* equal);

/* Each writes its artifacts under the config's output directory. OGRS_OK
 * means the command executed; ogrs_result_exit_code reports failed runs (1)
 * or an audit slope above the limit (1). */
OGRS_LAB_API ogrs_status ogrs_run(const ogrs_config* config, ogrs_result** out);
OGRS_LAB_API ogrs_status ogrs_compare(const ogrs_config* config, ogrs_result** out);
OGRS_LAB_API ogrs_status ogrs_audit(const ogrs_config* config, ogrs_result** out);

OGRS_LAB_API void ogrs_result_free(ogrs_result* result);
OGRS_LAB_API int ogrs_result_exit_code(const ogrs_result* result);
OGRS_LAB_API size_t ogrs_result_file_count(const ogrs_result* result);
OGRS_LAB_API const char* ogrs_result_file(const ogrs_result* result, size_t index);
OGRS_LAB_API size_t ogrs_result_run_count(const ogrs_result* result);
/* Any out pointer may be NULL. final_accuracy is NaN for a failed run. */
OGRS_LAB_API ogrs_status ogrs_result_run(const ogrs_result* result, size_t index, const char** selector,
                                         const char** setting, uint64_t* seed, double* final_accuracy,
                                         int* failed);
/* Audit results; OGRS_ERR_INVALID_ARGUMENT when the result is not an audit. */
OGRS_LAB_API ogrs_status ogrs_result_audit(const ogrs_result* result, double* slope, int* flat, int* passed);

#ifdef __cplusplus
}
#endif

#endif /* OGRS_LAB_H_ */
