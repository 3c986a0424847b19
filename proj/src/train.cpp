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

#include "lightnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <sstream>

#include "lightnet/error.hpp"
#include "lightnet/random.hpp"

namespace lightnet {

LrSchedule parse_lr_schedule(std::string_view name) {
  if (name == "constant") return LrSchedule::kConstant;
  if (name == "cosine") return LrSchedule::kCosine;
  fail(ErrorCode::kInvalidArgument, "unknown lr schedule '", name, "' (expected constant|cosine)");
}

Precision parse_precision(std::string_view name) {
  if (name == "f32") return Precision::kF32;
  if (name == "f64") return Precision::kF64;
  fail(ErrorCode::kInvalidArgument, "unknown precision '", name, "' (expected f32|f64)");
}

const char* lr_schedule_name(LrSchedule s) {
  return s == LrSchedule::kConstant ? "constant" : "cosine";
}

const char* precision_name(Precision p) { return p == Precision::kF32 ? "f32" : "f64"; }

void TrainConfig::validate() const {
  require(epochs >= 1, "epochs must be >= 1");
  require(batch_size >= 2, "batch_size must be >= 2 (batch norm needs batch statistics), got ",
          batch_size);
  require(std::isfinite(learning_rate) && learning_rate >= 0.0,
          "learning_rate must be finite and >= 0, got ", learning_rate);
  require(momentum >= 0.0 && momentum < 1.0, "momentum must be in [0, 1), got ", momentum);
  require(std::isfinite(weight_decay) && weight_decay >= 0.0, "weight_decay must be >= 0, got ",
          weight_decay);
  require(resolution >= kMinImageExtent, "resolution must be >= ", kMinImageExtent, ", got ",
          resolution);
}

double TrainConfig::learning_rate_at(std::size_t epoch) const {
  if (lr_schedule == LrSchedule::kConstant) return learning_rate;
  const double progress = static_cast<double>(epoch) / static_cast<double>(epochs);
  return learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

template <typename T>
void sgd_step(std::vector<Parameter<T>*> params, double learning_rate, double momentum,
              double weight_decay) {
  const T lr = static_cast<T>(learning_rate);
  const T mu = static_cast<T>(momentum);
  const T wd = static_cast<T>(weight_decay);
  for (Parameter<T>* p : params) {
    if (p->grad.empty()) continue;
    if (p->velocity.empty()) p->velocity = Tensor<T>::zeros_like(p->value);
    T* value = p->value.data();
    T* velocity = p->velocity.data();
    const T* grad = p->grad.data();
    const T decay = p->decay ? wd : T{0};
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      velocity[i] = mu * velocity[i] + grad[i];
      value[i] -= lr * (velocity[i] + decay * value[i]);
    }
  }
}

namespace {

void check_labels(const std::vector<Sample>& samples, std::size_t num_classes, const char* what) {
  require(!samples.empty(), what, ": empty dataset");
  std::vector<std::size_t> counts(num_classes, 0);
  for (const Sample& s : samples) {
    if (s.label < 0 || static_cast<std::size_t>(s.label) >= num_classes) {
      fail(ErrorCode::kInvalidArgument, what, ": sample '", s.source_id, "' has label ", s.label,
           " but the model has ", num_classes, " classes");
    }
    ++counts[s.label];
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) {
      fail(ErrorCode::kInvalidArgument, what, ": class ", c,
           " has no samples (model and dataset class counts differ)");
    }
  }
}

template <typename T>
std::vector<Tensor<T>> preprocess_all(const std::vector<Sample>& samples, std::size_t resolution,
                                      ChannelMode mode) {
  std::vector<Tensor<T>> out;
  out.reserve(samples.size());
  for (const Sample& s : samples) {
    Tensor<float> t = preprocess(s.image, resolution, mode);
    if constexpr (std::is_same_v<T, float>) {
      out.push_back(std::move(t));
    } else {
      out.push_back(t.template cast<T>());
    }
  }
  return out;
}

template <typename T>
Tensor<T> gather(const std::vector<Tensor<T>>& cache, std::span<const std::size_t> indices) {
  Shape dims = cache.front().dims();
  const std::size_t per = cache.front().size();
  dims.insert(dims.begin(), indices.size());
  Tensor<T> batch(dims);
  for (std::size_t n = 0; n < indices.size(); ++n) {
    std::copy_n(cache[indices[n]].data(), per, batch.data() + n * per);
  }
  return batch;
}

std::size_t argmax_row(const auto* row, std::size_t k) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < k; ++j) {
    if (row[j] > row[best]) best = j;
  }
  return best;
}

}  // namespace

template <typename T>
TrainHistory train(Model<T>& model, const std::vector<Sample>& samples, const TrainConfig& config,
                   const EpochCallback& on_epoch) {
  config.validate();
  const std::size_t k = model.num_classes();
  check_labels(samples, k, "train");
  require(samples.size() >= 2, "train: need at least 2 samples, got ", samples.size());
  require(model.spec().in_channels == channel_count(config.channel_mode), "train: model expects ",
          model.spec().in_channels, " input channels but channel mode gives ",
          channel_count(config.channel_mode));

  const std::vector<Tensor<T>> cache = preprocess_all<T>(samples, config.resolution,
                                                         config.channel_mode);
  const std::vector<Parameter<T>*> params = model.parameters();
  std::vector<std::size_t> order(samples.size());
  TrainHistory history;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(config.seed, 0xe90c4, epoch));
    rng.shuffle(std::span<std::size_t>(order));

    // A trailing single-sample batch is folded into its predecessor.
    std::vector<std::pair<std::size_t, std::size_t>> batches;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      batches.emplace_back(start, std::min(start + config.batch_size, order.size()));
    }
    if (batches.size() > 1 && batches.back().second - batches.back().first == 1) {
      batches[batches.size() - 2].second = batches.back().second;
      batches.pop_back();
    }

    const double lr = config.learning_rate_at(epoch);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto [begin, end] = batches[b];
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      std::vector<int> labels(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) labels[i] = samples[idx[i]].label;

      model.zero_grad();
      double loss_value = 0.0;
      try {
        Tape<T> tape;
        const Var x = tape.leaf(gather(cache, idx));
        const Var logits = model.forward(tape, x, Mode::kTrain);
        const Var loss = softmax_cross_entropy(tape, logits, std::span<const int>(labels));
        loss_value = static_cast<double>(tape.value(loss)[0]);
        if (!std::isfinite(loss_value)) {
          fail(ErrorCode::kNumeric, "loss is ", loss_value);
        }
        const Tensor<T>& out = tape.value(logits);
        for (std::size_t i = 0; i < idx.size(); ++i) {
          if (argmax_row(out.data() + i * k, k) == static_cast<std::size_t>(labels[i])) ++correct;
        }
        tape.backward(loss);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNumeric) throw;
        fail(ErrorCode::kNumeric, "training diverged at epoch ", epoch + 1, " batch ", b + 1, ": ",
             e.what());
      }
      sgd_step<T>(params, lr, config.momentum, config.weight_decay);
      loss_sum += loss_value * static_cast<double>(idx.size());
    }
    EpochStats stats;
    stats.epoch = epoch + 1;
    stats.learning_rate = lr;
    stats.mean_loss = loss_sum / static_cast<double>(samples.size());
    stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(samples.size());
    history.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return history;
}

std::string render_history_csv(const TrainHistory& history) {
  std::ostringstream os;
  os << "epoch,learning_rate,loss,train_accuracy\n";
  char line[128];
  for (const EpochStats& s : history) {
    std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g\n", s.epoch, s.learning_rate,
                  s.mean_loss, s.train_accuracy);
    os << line;
  }
  return os.str();
}

Metrics compute_metrics(std::size_t num_classes, std::span<const int> truth,
                        std::span<const int> predicted) {
  require(num_classes >= 1, "compute_metrics: need at least one class");
  require(truth.size() == predicted.size(), "compute_metrics: ", truth.size(), " labels but ",
          predicted.size(), " predictions");
  Metrics m;
  m.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto t = static_cast<std::size_t>(truth[i]);
    const auto p = static_cast<std::size_t>(predicted[i]);
    require(truth[i] >= 0 && t < num_classes, "compute_metrics: label ", truth[i], " out of range");
    require(predicted[i] >= 0 && p < num_classes, "compute_metrics: prediction ", predicted[i],
            " out of range");
    ++m.confusion[t][p];
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    const std::size_t total = std::accumulate(m.confusion[c].begin(), m.confusion[c].end(),
                                              std::size_t{0});
    require(total > 0, "compute_metrics: class ", c, " has no samples");
    const double acc = static_cast<double>(m.confusion[c][c]) / static_cast<double>(total);
    m.per_class_accuracy.push_back(acc);
    sum += acc;
  }
  m.average_accuracy = sum / static_cast<double>(num_classes);
  return m;
}

template <typename T>
std::vector<int> predict_labels(Model<T>& model, const std::vector<Sample>& samples,
                                std::size_t resolution, ChannelMode mode) {
  require(model.spec().in_channels == channel_count(mode), "predict: model expects ",
          model.spec().in_channels, " input channels but channel mode gives ", channel_count(mode));
  constexpr std::size_t kChunk = 64;
  const std::size_t k = model.num_classes();
  std::vector<int> out;
  out.reserve(samples.size());
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < samples.size(); start += kChunk) {
    idx.resize(std::min(kChunk, samples.size() - start));
    std::iota(idx.begin(), idx.end(), start);
    Batch batch = make_batch(samples, idx, resolution, mode);
    Tensor<T> logits;
    try {
      if constexpr (std::is_same_v<T, float>) {
        logits = model.predict(batch.images);
      } else {
        logits = model.predict(batch.images.template cast<T>());
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNumeric) throw;
      fail(ErrorCode::kNumeric, "inference overflowed on samples ", start, "..",
           start + idx.size() - 1, " (starting at '", samples[start].source_id, "'): ", e.what());
    }
    for (std::size_t i = 0; i < idx.size(); ++i) {
      out.push_back(static_cast<int>(argmax_row(logits.data() + i * k, k)));
    }
  }
  return out;
}

template <typename T>
Metrics evaluate(Model<T>& model, const std::vector<Sample>& samples, std::size_t resolution,
                 ChannelMode mode) {
  check_labels(samples, model.num_classes(), "evaluate");
  const std::vector<int> predicted = predict_labels(model, samples, resolution, mode);
  std::vector<int> truth;
  truth.reserve(samples.size());
  for (const Sample& s : samples) truth.push_back(s.label);
  return compute_metrics(model.num_classes(), truth, predicted);
}

namespace {

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", fraction * 100.0);
  return buf;
}

}  // namespace

std::string render_metrics_table(const Metrics& metrics, const std::vector<std::string>& classes) {
  std::size_t width = 7;
  for (const std::string& c : classes) width = std::max(width, c.size());
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-*s  %9s\n", static_cast<int>(width), "Class", "Accuracy");
  os << line;
  for (std::size_t c = 0; c < metrics.num_classes(); ++c) {
    const std::string name = c < classes.size() ? classes[c] : std::to_string(c);
    std::snprintf(line, sizeof line, "%-*s  %8s%%\n", static_cast<int>(width), name.c_str(),
                  percent(metrics.per_class_accuracy[c]).c_str());
    os << line;
  }
  std::snprintf(line, sizeof line, "%-*s  %8s%%\n", static_cast<int>(width), "Average",
                percent(metrics.average_accuracy).c_str());
  os << line;
  return os.str();
}

std::string render_confusion(const Metrics& metrics) {
  std::ostringstream os;
  os << "confusion (rows = true, cols = predicted)\n";
  for (const auto& row : metrics.confusion) {
    for (std::size_t j = 0; j < row.size(); ++j) os << (j ? " " : "") << row[j];
    os << "\n";
  }
  return os.str();
}

std::string SweepReport::to_csv() const {
  std::ostringstream os;
  os << "k,seed";
  for (const std::string& c : classes) os << ',' << c;
  os << ",average\n";
  for (const SweepRun& r : runs) {
    os << r.k << ',' << r.seed;
    for (double a : r.metrics.per_class_accuracy) os << ',' << percent(a);
    os << ',' << percent(r.metrics.average_accuracy) << "\n";
  }
  for (const SweepSummary& s : summary) {
    os << s.k << ",mean";
    for (double a : s.per_class_accuracy) os << ',' << percent(a);
    os << ',' << percent(s.average_accuracy) << "\n";
  }
  return os.str();
}

namespace {

template <typename T>
SweepRun sweep_run(const std::vector<Sample>& train_samples, const std::vector<Sample>& test_samples,
                   const ArchSpec& spec, std::size_t k, std::uint64_t seed,
                   const TrainConfig& config) {
  SweepRun run;
  run.k = k;
  run.seed = seed;
  const std::vector<Sample> subset = subsample_per_class(train_samples, k, seed);
  Model<T> model(spec, seed);
  run.initial_hash = model.state_hash();
  TrainConfig cfg = config;
  cfg.seed = seed;
  train(model, subset, cfg);
  run.final_hash = model.state_hash();
  run.metrics = evaluate(model, test_samples, cfg.resolution, cfg.channel_mode);
  return run;
}

}  // namespace

SweepReport run_limited_data_sweep(const std::vector<Sample>& train_samples,
                                   const std::vector<Sample>& test_samples,
                                   const std::vector<std::string>& classes, const ArchSpec& spec,
                                   const std::vector<std::size_t>& k_list,
                                   const std::vector<std::uint64_t>& seeds,
                                   const TrainConfig& config, const SweepCallback& on_run) {
  config.validate();
  require(!k_list.empty(), "sweep: k list is empty");
  require(!seeds.empty(), "sweep: seed list is empty");
  require(classes.size() == spec.num_classes, "sweep: ", classes.size(),
          " class names but the architecture has ", spec.num_classes, " classes");
  SweepReport report;
  report.classes = classes;
  for (std::size_t k : k_list) {
    SweepSummary summary;
    summary.k = k;
    summary.per_class_accuracy.assign(classes.size(), 0.0);
    for (std::uint64_t seed : seeds) {
      SweepRun run;
      try {
        run = config.precision == Precision::kF32
                  ? sweep_run<float>(train_samples, test_samples, spec, k, seed, config)
                  : sweep_run<double>(train_samples, test_samples, spec, k, seed, config);
      } catch (const Error& e) {
        fail(e.code(), "sweep run k=", k, " seed=", seed, ": ", e.what());
      }
      for (std::size_t c = 0; c < classes.size(); ++c) {
        summary.per_class_accuracy[c] += run.metrics.per_class_accuracy[c];
      }
      summary.average_accuracy += run.metrics.average_accuracy;
      if (on_run) on_run(run);
      report.runs.push_back(std::move(run));
    }
    const double n = static_cast<double>(seeds.size());
    for (double& a : summary.per_class_accuracy) a /= n;
    summary.average_accuracy /= n;
    report.summary.push_back(std::move(summary));
  }
  return report;
}

#define LIGHTNET_INSTANTIATE_TRAIN(T)                                                          \
  template void sgd_step<T>(std::vector<Parameter<T>*>, double, double, double);               \
  template TrainHistory train<T>(Model<T>&, const std::vector<Sample>&, const TrainConfig&,    \
                                 const EpochCallback&);                                        \
  template std::vector<int> predict_labels<T>(Model<T>&, const std::vector<Sample>&,           \
                                              std::size_t, ChannelMode);                       \
  template Metrics evaluate<T>(Model<T>&, const std::vector<Sample>&, std::size_t, ChannelMode);

LIGHTNET_INSTANTIATE_TRAIN(float)
LIGHTNET_INSTANTIATE_TRAIN(double)

}  // namespace lightnet
