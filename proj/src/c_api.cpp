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

#include "lightnet/lightnet.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>
#include <variant>

#include "lightnet/arch.hpp"
#include "lightnet/checkpoint.hpp"
#include "lightnet/cost.hpp"
#include "lightnet/data.hpp"
#include "lightnet/error.hpp"
#include "lightnet/gradcheck.hpp"
#include "lightnet/model.hpp"
#include "lightnet/synth.hpp"
#include "lightnet/train.hpp"

using lightnet::ErrorCode;

struct lwn_arch {
  lightnet::ArchSpec spec;
};

struct lwn_dataset {
  std::vector<std::string> classes;
  std::vector<lightnet::Sample> train;
  std::vector<lightnet::Sample> test;
};

struct lwn_model {
  std::variant<lightnet::Model<float>, lightnet::Model<double>> model;
};

namespace {

thread_local std::string g_last_error;

lwn_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return LWN_ERR_INVALID_ARGUMENT;
    case ErrorCode::kFormat: return LWN_ERR_FORMAT;
    case ErrorCode::kIo: return LWN_ERR_IO;
    case ErrorCode::kNumeric: return LWN_ERR_NUMERIC;
    case ErrorCode::kState: return LWN_ERR_STATE;
    case ErrorCode::kInternal: return LWN_ERR_INTERNAL;
  }
  return LWN_ERR_INTERNAL;
}

template <typename F>
lwn_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return LWN_OK;
  } catch (const lightnet::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return LWN_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return LWN_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return LWN_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename T>
T& non_null(T* p, const char* what) {
  lightnet::require(p != nullptr, what, " must not be NULL");
  return *p;
}

std::string text(const char* p, const char* what) {
  lightnet::require(p != nullptr, what, " must not be NULL");
  return std::string(p);
}

lightnet::TrainConfig to_config(const lwn_train_config& c) {
  lightnet::TrainConfig cfg;
  cfg.epochs = c.epochs;
  cfg.batch_size = c.batch_size;
  cfg.learning_rate = c.learning_rate;
  cfg.momentum = c.momentum;
  cfg.weight_decay = c.weight_decay;
  lightnet::require(c.schedule == LWN_SCHEDULE_CONSTANT || c.schedule == LWN_SCHEDULE_COSINE,
                    "invalid schedule");
  cfg.lr_schedule = c.schedule == LWN_SCHEDULE_CONSTANT ? lightnet::LrSchedule::kConstant
                                                        : lightnet::LrSchedule::kCosine;
  cfg.seed = c.seed;
  lightnet::require(c.precision == LWN_F32 || c.precision == LWN_F64, "invalid precision");
  cfg.precision = c.precision == LWN_F32 ? lightnet::Precision::kF32 : lightnet::Precision::kF64;
  cfg.resolution = c.resolution;
  lightnet::require(c.channels == LWN_GRAY1 || c.channels == LWN_REPLICATE3,
                    "invalid channel mode");
  cfg.channel_mode =
      c.channels == LWN_GRAY1 ? lightnet::ChannelMode::kGray1 : lightnet::ChannelMode::kReplicate3;
  cfg.validate();
  return cfg;
}

lightnet::ChannelMode to_channels(lwn_channels c) {
  lightnet::require(c == LWN_GRAY1 || c == LWN_REPLICATE3, "invalid channel mode");
  return c == LWN_GRAY1 ? lightnet::ChannelMode::kGray1 : lightnet::ChannelMode::kReplicate3;
}

}  // namespace

extern "C" {

LWN_API const char* lwn_version(void) { return "1.0.0"; }

LWN_API const char* lwn_last_error(void) { return g_last_error.c_str(); }

LWN_API const char* lwn_status_name(lwn_status status) {
  switch (status) {
    case LWN_OK: return "ok";
    case LWN_ERR_INVALID_ARGUMENT: return "invalid argument";
    case LWN_ERR_FORMAT: return "format error";
    case LWN_ERR_IO: return "i/o error";
    case LWN_ERR_NUMERIC: return "numeric error";
    case LWN_ERR_STATE: return "state error";
    case LWN_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

LWN_API void lwn_string_free(char* s) { std::free(s); }

LWN_API lwn_status lwn_arch_builtin(const char* name, lwn_arch** out) {
  return guarded([&] {
    non_null(out, "out");
    const std::string n = text(name, "name");
    *out = new lwn_arch{lightnet::builtin_arch(n, 3, 1000, 1.0)};
  });
}

LWN_API lwn_status lwn_arch_mobilenetv3(size_t in_channels, size_t num_classes,
                                        double width_multiplier, lwn_arch** out) {
  return guarded([&] {
    non_null(out, "out");
    *out = new lwn_arch{lightnet::mobilenetv3_large_spec(in_channels, num_classes, width_multiplier)};
  });
}

LWN_API lwn_status lwn_arch_from_file(const char* path, lwn_arch** out) {
  return guarded([&] {
    non_null(out, "out");
    *out = new lwn_arch{lightnet::parse_arch_file(text(path, "path"))};
  });
}

LWN_API lwn_status lwn_arch_from_json(const char* json, lwn_arch** out) {
  return guarded([&] {
    non_null(out, "out");
    *out = new lwn_arch{lightnet::parse_arch_json(text(json, "json"))};
  });
}

LWN_API lwn_status lwn_arch_to_json(const lwn_arch* arch, char** out) {
  return guarded([&] { non_null(out, "out") = dup_string(lightnet::arch_to_json(non_null(arch, "arch").spec)); });
}

LWN_API lwn_status lwn_arch_table(const lwn_arch* arch, char** out) {
  return guarded([&] {
    std::string text;
    for (const std::string& row : lightnet::arch_table_rows(non_null(arch, "arch").spec)) {
      text += row + "\n";
    }
    non_null(out, "out") = dup_string(text);
  });
}

LWN_API size_t lwn_arch_num_classes(const lwn_arch* arch) {
  return arch ? arch->spec.num_classes : 0;
}

LWN_API size_t lwn_arch_in_channels(const lwn_arch* arch) {
  return arch ? arch->spec.in_channels : 0;
}

LWN_API void lwn_arch_free(lwn_arch* arch) { delete arch; }

LWN_API lwn_status lwn_analyze(const lwn_arch* arch, const char* input_shape,
                               const char* convention, const char* format, char** report,
                               uint64_t* total_madds, uint64_t* total_params) {
  return guarded([&] {
    const lightnet::CostReport r = lightnet::analyze(
        non_null(arch, "arch").spec, lightnet::parse_input_shape(text(input_shape, "input_shape")),
        lightnet::parse_convention(convention ? convention : "madds"));
    const lightnet::ReportFormat f = lightnet::parse_report_format(format ? format : "table");
    if (report) *report = dup_string(lightnet::render_report(r, f));
    if (total_madds) *total_madds = r.total_madds;
    if (total_params) *total_params = r.total_params;
  });
}

LWN_API lwn_status lwn_compare_last_stages(double width_multiplier, size_t input_resolution,
                                           char** report, int64_t* delta_madds,
                                           double* relocated_conv_ratio) {
  return guarded([&] {
    const auto cmp = lightnet::compare_last_stages(width_multiplier, input_resolution);
    if (report) *report = dup_string(lightnet::render_comparison(cmp));
    if (delta_madds) *delta_madds = cmp.delta_madds;
    if (relocated_conv_ratio) *relocated_conv_ratio = cmp.relocated_conv_ratio;
  });
}

LWN_API lwn_status lwn_synth_generate(size_t num_classes, size_t train_per_class,
                                      size_t test_per_class, size_t resolution, uint64_t seed,
                                      lwn_dataset** out) {
  return guarded([&] {
    non_null(out, "out");
    lightnet::SynthConfig cfg{num_classes, train_per_class, test_per_class, resolution, seed};
    lightnet::SynthDataset ds = lightnet::synth_sar_generate(cfg);
    *out = new lwn_dataset{ds.manifest.classes, std::move(ds.train), std::move(ds.test)};
  });
}

LWN_API lwn_status lwn_dataset_write(const lwn_dataset* dataset, const char* dir) {
  return guarded([&] {
    const lwn_dataset& d = non_null(dataset, "dataset");
    lightnet::SynthDataset ds;
    ds.manifest.classes = d.classes;
    ds.train = d.train;
    ds.test = d.test;
    lightnet::write_chip_dataset(ds, text(dir, "dir"));
  });
}

LWN_API lwn_status lwn_dataset_load(const char* dir, lwn_dataset** out) {
  return guarded([&] {
    non_null(out, "out");
    const lightnet::ChipDataset ds = lightnet::load_chip_dataset(text(dir, "dir"));
    *out = new lwn_dataset{ds.manifest.classes, ds.train(), ds.test()};
  });
}

LWN_API lwn_status lwn_dataset_subsample(const lwn_dataset* dataset, size_t k, uint64_t seed,
                                         lwn_dataset** out) {
  return guarded([&] {
    const lwn_dataset& d = non_null(dataset, "dataset");
    non_null(out, "out");
    *out = new lwn_dataset{d.classes, lightnet::subsample_per_class(d.train, k, seed), d.test};
  });
}

LWN_API size_t lwn_dataset_num_classes(const lwn_dataset* dataset) {
  return dataset ? dataset->classes.size() : 0;
}

LWN_API size_t lwn_dataset_train_size(const lwn_dataset* dataset) {
  return dataset ? dataset->train.size() : 0;
}

LWN_API size_t lwn_dataset_test_size(const lwn_dataset* dataset) {
  return dataset ? dataset->test.size() : 0;
}

LWN_API lwn_status lwn_dataset_class_name(const lwn_dataset* dataset, size_t index, char** out) {
  return guarded([&] {
    const lwn_dataset& d = non_null(dataset, "dataset");
    lightnet::require(index < d.classes.size(), "class index ", index, " out of range");
    non_null(out, "out") = dup_string(d.classes[index]);
  });
}

LWN_API void lwn_dataset_free(lwn_dataset* dataset) { delete dataset; }

LWN_API void lwn_train_config_default(lwn_train_config* config) {
  if (config == nullptr) return;
  const lightnet::TrainConfig d;
  config->epochs = d.epochs;
  config->batch_size = d.batch_size;
  config->learning_rate = d.learning_rate;
  config->momentum = d.momentum;
  config->weight_decay = d.weight_decay;
  config->schedule = LWN_SCHEDULE_COSINE;
  config->seed = d.seed;
  config->precision = LWN_F32;
  config->resolution = d.resolution;
  config->channels = LWN_GRAY1;
}

LWN_API lwn_status lwn_model_create(const lwn_arch* arch, uint64_t seed, lwn_precision precision,
                                    lwn_model** out) {
  return guarded([&] {
    const lightnet::ArchSpec& spec = non_null(arch, "arch").spec;
    non_null(out, "out");
    if (precision == LWN_F32) {
      *out = new lwn_model{lightnet::Model<float>(spec, seed)};
    } else if (precision == LWN_F64) {
      *out = new lwn_model{lightnet::Model<double>(spec, seed)};
    } else {
      lightnet::fail(ErrorCode::kInvalidArgument, "invalid precision");
    }
  });
}

LWN_API lwn_status lwn_model_train(lwn_model* model, const lwn_dataset* dataset,
                                   const lwn_train_config* config, lwn_epoch_callback callback,
                                   void* user, char** history_csv) {
  return guarded([&] {
    lwn_model& m = non_null(model, "model");
    const lwn_dataset& d = non_null(dataset, "dataset");
    const lightnet::TrainConfig cfg = to_config(non_null(config, "config"));
    lightnet::EpochCallback cb;
    if (callback) {
      cb = [&](const lightnet::EpochStats& s) {
        callback(user, s.epoch, s.learning_rate, s.mean_loss, s.train_accuracy);
      };
    }
    const lightnet::TrainHistory history =
        std::visit([&](auto& net) { return lightnet::train(net, d.train, cfg, cb); }, m.model);
    if (history_csv) *history_csv = dup_string(lightnet::render_history_csv(history));
  });
}

LWN_API lwn_status lwn_model_evaluate(lwn_model* model, const lwn_dataset* dataset,
                                      size_t resolution, lwn_channels channels, char** table,
                                      double* average_accuracy, double* per_class_accuracy) {
  return guarded([&] {
    lwn_model& m = non_null(model, "model");
    const lwn_dataset& d = non_null(dataset, "dataset");
    const lightnet::ChannelMode mode = to_channels(channels);
    const lightnet::Metrics metrics = std::visit(
        [&](auto& net) { return lightnet::evaluate(net, d.test, resolution, mode); }, m.model);
    if (table) {
      *table = dup_string(lightnet::render_metrics_table(metrics, d.classes) +
                          lightnet::render_confusion(metrics));
    }
    if (average_accuracy) *average_accuracy = metrics.average_accuracy;
    if (per_class_accuracy) {
      for (std::size_t c = 0; c < metrics.per_class_accuracy.size(); ++c) {
        per_class_accuracy[c] = metrics.per_class_accuracy[c];
      }
    }
  });
}

LWN_API lwn_status lwn_model_save(lwn_model* model, const char* path) {
  return guarded([&] {
    lwn_model& m = non_null(model, "model");
    const std::string p = text(path, "path");
    std::visit([&](auto& net) { lightnet::save_checkpoint(net, p); }, m.model);
  });
}

LWN_API lwn_status lwn_model_load(const lwn_arch* arch, const char* path, lwn_precision precision,
                                  lwn_model** out) {
  return guarded([&] {
    const lightnet::ArchSpec& spec = non_null(arch, "arch").spec;
    const std::string p = text(path, "path");
    non_null(out, "out");
    if (precision == LWN_F32) {
      *out = new lwn_model{lightnet::load_checkpoint<float>(spec, p)};
    } else if (precision == LWN_F64) {
      *out = new lwn_model{lightnet::load_checkpoint<double>(spec, p)};
    } else {
      lightnet::fail(ErrorCode::kInvalidArgument, "invalid precision");
    }
  });
}

LWN_API lwn_status lwn_model_state_hash(lwn_model* model, uint64_t* out) {
  return guarded([&] {
    lwn_model& m = non_null(model, "model");
    non_null(out, "out") = std::visit([](auto& net) { return net.state_hash(); }, m.model);
  });
}

LWN_API lwn_status lwn_model_parameter_count(lwn_model* model, size_t* out) {
  return guarded([&] {
    lwn_model& m = non_null(model, "model");
    non_null(out, "out") = std::visit([](auto& net) { return net.parameter_count(); }, m.model);
  });
}

LWN_API void lwn_model_free(lwn_model* model) { delete model; }

LWN_API lwn_status lwn_sweep(const lwn_dataset* dataset, const lwn_arch* arch,
                             const size_t* k_list, size_t k_count, const uint64_t* seeds,
                             size_t seed_count, const lwn_train_config* config,
                             lwn_sweep_callback callback, void* user, char** csv) {
  return guarded([&] {
    const lwn_dataset& d = non_null(dataset, "dataset");
    const lightnet::ArchSpec& spec = non_null(arch, "arch").spec;
    lightnet::require(k_count == 0 || k_list != nullptr, "k_list must not be NULL");
    lightnet::require(seed_count == 0 || seeds != nullptr, "seeds must not be NULL");
    const lightnet::TrainConfig cfg = to_config(non_null(config, "config"));
    lightnet::SweepCallback cb;
    if (callback) {
      cb = [&](const lightnet::SweepRun& r) {
        callback(user, r.k, r.seed, r.metrics.average_accuracy);
      };
    }
    const lightnet::SweepReport report = lightnet::run_limited_data_sweep(
        d.train, d.test, d.classes, spec, std::vector<std::size_t>(k_list, k_list + k_count),
        std::vector<std::uint64_t>(seeds, seeds + seed_count), cfg, cb);
    if (csv) *csv = dup_string(report.to_csv());
  });
}

LWN_API lwn_status lwn_gradcheck(uint64_t seed, char** report, int* all_passed) {
  return guarded([&] {
    const lightnet::GradCheckReport r = lightnet::run_gradient_suite(seed);
    if (report) *report = dup_string(r.render());
    if (all_passed) *all_passed = r.all_passed() ? 1 : 0;
  });
}

}  // extern "C"
