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

// SGD training, evaluation metrics and the limited-data sweep.

#ifndef LIGHTNET_TRAIN_HPP_
#define LIGHTNET_TRAIN_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "lightnet/arch.hpp"
#include "lightnet/data.hpp"
#include "lightnet/model.hpp"

namespace lightnet {

enum class LrSchedule { kConstant, kCosine };
enum class Precision { kF32, kF64 };

LrSchedule parse_lr_schedule(std::string_view name);
Precision parse_precision(std::string_view name);
const char* lr_schedule_name(LrSchedule s);
const char* precision_name(Precision p);

struct TrainConfig {
  std::size_t epochs = 150;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  double momentum = 0.9;
  double weight_decay = 4e-5;
  LrSchedule lr_schedule = LrSchedule::kCosine;
  std::uint64_t seed = 0;
  Precision precision = Precision::kF32;
  std::size_t resolution = 64;
  ChannelMode channel_mode = ChannelMode::kGray1;

  // Batch statistics need two samples, so batch_size 1 is rejected.
  void validate() const;
  double learning_rate_at(std::size_t epoch) const;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double learning_rate = 0.0;
  double mean_loss = 0.0;
  double train_accuracy = 0.0;  // fraction in [0, 1]
};

using TrainHistory = std::vector<EpochStats>;
using EpochCallback = std::function<void(const EpochStats&)>;

template <typename T>
TrainHistory train(Model<T>& model, const std::vector<Sample>& samples, const TrainConfig& config,
                   const EpochCallback& on_epoch = {});

// One optimizer update from the gradients currently held by the parameters.
template <typename T>
void sgd_step(std::vector<Parameter<T>*> params, double learning_rate, double momentum,
              double weight_decay);

std::string render_history_csv(const TrainHistory& history);

struct Metrics {
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::vector<double> per_class_accuracy;           // fractions
  double average_accuracy = 0.0;                    // unweighted mean over classes

  std::size_t num_classes() const { return confusion.size(); }
};

// Every class in [0, num_classes) must occur in `truth`.
Metrics compute_metrics(std::size_t num_classes, std::span<const int> truth,
                        std::span<const int> predicted);

template <typename T>
std::vector<int> predict_labels(Model<T>& model, const std::vector<Sample>& samples,
                                std::size_t resolution, ChannelMode mode);

template <typename T>
Metrics evaluate(Model<T>& model, const std::vector<Sample>& samples, std::size_t resolution,
                 ChannelMode mode);

// Per-class rows plus an "Average" row, percentages with two decimals.
std::string render_metrics_table(const Metrics& metrics, const std::vector<std::string>& classes);
std::string render_confusion(const Metrics& metrics);

struct SweepRun {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  Metrics metrics;
  std::uint64_t initial_hash = 0;
  std::uint64_t final_hash = 0;
};

struct SweepSummary {
  std::size_t k = 0;
  std::vector<double> per_class_accuracy;
  double average_accuracy = 0.0;
};

struct SweepReport {
  std::vector<std::string> classes;
  std::vector<SweepRun> runs;        // (k, seed) order
  std::vector<SweepSummary> summary;  // one per k, mean over seeds

  // Header k,seed,<classes>,average; summary rows carry seed "mean".
  std::string to_csv() const;
};

using SweepCallback = std::function<void(const SweepRun&)>;

// For each k and seed: subsample the training set, train a freshly
// initialized model built from `spec`, evaluate on the full test set.
SweepReport run_limited_data_sweep(const std::vector<Sample>& train_samples,
                                   const std::vector<Sample>& test_samples,
                                   const std::vector<std::string>& classes, const ArchSpec& spec,
                                   const std::vector<std::size_t>& k_list,
                                   const std::vector<std::uint64_t>& seeds,
                                   const TrainConfig& config, const SweepCallback& on_run = {});

}  // namespace lightnet

#endif  // LIGHTNET_TRAIN_HPP_
