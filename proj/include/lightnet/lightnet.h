/* Copyright 2026 The LightNet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

/* C interface to liblightnet.
 *
 * All objects are opaque handles released with the matching *_free call.
 * Functions return LWN_OK or an error status; the message of the most recent
 * failure on the calling thread is available from lwn_last_error(). Strings
 * returned through char** out-parameters are owned by the caller and must be
 * released with lwn_string_free(). */

#ifndef LIGHTNET_LIGHTNET_H_
#define LIGHTNET_LIGHTNET_H_

#include <stddef.h>
#include <stdint.h>

#if defined(LIGHTNET_BUILDING_LIBRARY)
#define LWN_API __attribute__((visibility("default")))
#else
#define LWN_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lwn_status {
  LWN_OK = 0,
  LWN_ERR_INVALID_ARGUMENT = 1,
  LWN_ERR_FORMAT = 2,
  LWN_ERR_IO = 3,
  LWN_ERR_NUMERIC = 4,
  LWN_ERR_STATE = 5,
  LWN_ERR_INTERNAL = 6
} lwn_status;

typedef enum lwn_precision { LWN_F32 = 0, LWN_F64 = 1 } lwn_precision;
typedef enum lwn_schedule { LWN_SCHEDULE_CONSTANT = 0, LWN_SCHEDULE_COSINE = 1 } lwn_schedule;
typedef enum lwn_channels { LWN_GRAY1 = 0, LWN_REPLICATE3 = 1 } lwn_channels;

typedef struct lwn_arch lwn_arch;
typedef struct lwn_dataset lwn_dataset;
typedef struct lwn_model lwn_model;

LWN_API const char* lwn_version(void);
LWN_API const char* lwn_last_error(void);
LWN_API const char* lwn_status_name(lwn_status status);
LWN_API void lwn_string_free(char* s);

/* Architectures. Builtin names: "mobilenetv3-large", "resnet50" (an optional
 * "builtin:" prefix is accepted). */
LWN_API lwn_status lwn_arch_builtin(const char* name, lwn_arch** out);
LWN_API lwn_status lwn_arch_mobilenetv3(size_t in_channels, size_t num_classes,
                                        double width_multiplier, lwn_arch** out);
LWN_API lwn_status lwn_arch_from_file(const char* path, lwn_arch** out);
LWN_API lwn_status lwn_arch_from_json(const char* json, lwn_arch** out);
LWN_API lwn_status lwn_arch_to_json(const lwn_arch* arch, char** out);
LWN_API lwn_status lwn_arch_table(const lwn_arch* arch, char** out);
LWN_API size_t lwn_arch_num_classes(const lwn_arch* arch);
LWN_API size_t lwn_arch_in_channels(const lwn_arch* arch);
LWN_API void lwn_arch_free(lwn_arch* arch);

/* Cost analysis. input_shape is "HxWxC"; convention is "madds" or "flops";
 * format is "table" or "csv". Totals are in multiply-accumulates. Any of the
 * out-parameters may be NULL. */
LWN_API lwn_status lwn_analyze(const lwn_arch* arch, const char* input_shape,
                               const char* convention, const char* format, char** report,
                               uint64_t* total_madds, uint64_t* total_params);
LWN_API lwn_status lwn_compare_last_stages(double width_multiplier, size_t input_resolution,
                                           char** report, int64_t* delta_madds,
                                           double* relocated_conv_ratio);

/* Datasets hold a training split and a test split. */
LWN_API lwn_status lwn_synth_generate(size_t num_classes, size_t train_per_class,
                                      size_t test_per_class, size_t resolution, uint64_t seed,
                                      lwn_dataset** out);
LWN_API lwn_status lwn_dataset_write(const lwn_dataset* dataset, const char* dir);
LWN_API lwn_status lwn_dataset_load(const char* dir, lwn_dataset** out);
/* Keeps k training samples per class; the test split is shared unchanged. */
LWN_API lwn_status lwn_dataset_subsample(const lwn_dataset* dataset, size_t k, uint64_t seed,
                                         lwn_dataset** out);
LWN_API size_t lwn_dataset_num_classes(const lwn_dataset* dataset);
LWN_API size_t lwn_dataset_train_size(const lwn_dataset* dataset);
LWN_API size_t lwn_dataset_test_size(const lwn_dataset* dataset);
LWN_API lwn_status lwn_dataset_class_name(const lwn_dataset* dataset, size_t index, char** out);
LWN_API void lwn_dataset_free(lwn_dataset* dataset);

typedef struct lwn_train_config {
  size_t epochs;
  size_t batch_size;
  double learning_rate;
  double momentum;
  double weight_decay;
  lwn_schedule schedule;
  uint64_t seed;
  lwn_precision precision;
  size_t resolution;
  lwn_channels channels;
} lwn_train_config;

LWN_API void lwn_train_config_default(lwn_train_config* config);

typedef void (*lwn_epoch_callback)(void* user, size_t epoch, double learning_rate,
                                   double mean_loss, double train_accuracy);

LWN_API lwn_status lwn_model_create(const lwn_arch* arch, uint64_t seed, lwn_precision precision,
                                    lwn_model** out);
LWN_API lwn_status lwn_model_train(lwn_model* model, const lwn_dataset* dataset,
                                   const lwn_train_config* config, lwn_epoch_callback callback,
                                   void* user, char** history_csv);
/* Evaluates on the test split. per_class_accuracy (optional) receives
 * num_classes fractions. */
LWN_API lwn_status lwn_model_evaluate(lwn_model* model, const lwn_dataset* dataset,
                                      size_t resolution, lwn_channels channels, char** table,
                                      double* average_accuracy, double* per_class_accuracy);
LWN_API lwn_status lwn_model_save(lwn_model* model, const char* path);
LWN_API lwn_status lwn_model_load(const lwn_arch* arch, const char* path,
                                  lwn_precision precision, lwn_model** out);
LWN_API lwn_status lwn_model_state_hash(lwn_model* model, uint64_t* out);
LWN_API lwn_status lwn_model_parameter_count(lwn_model* model, size_t* out);
LWN_API void lwn_model_free(lwn_model* model);

typedef void (*lwn_sweep_callback)(void* user, size_t k, uint64_t seed, double average_accuracy);

LWN_API lwn_status lwn_sweep(const lwn_dataset* dataset, const lwn_arch* arch,
                             const size_t* k_list, size_t k_count, const uint64_t* seeds,
                             size_t seed_count, const lwn_train_config* config,
                             lwn_sweep_callback callback, void* user, char** csv);

/* Runs the finite-difference suite; *all_passed is 1 when every check is
 * below its threshold. */
LWN_API lwn_status lwn_gradcheck(uint64_t seed, char** report, int* all_passed);

#ifdef __cplusplus
}
#endif

#endif /* LIGHTNET_LIGHTNET_H_ */
