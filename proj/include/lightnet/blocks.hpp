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

// Network building blocks: convolution units, squeeze-and-excitation, the
// inverted-residual bottleneck (bneck), the efficient classifier head, and
// the remaining unit types an ArchSpec row can name.

#ifndef LIGHTNET_BLOCKS_HPP_
#define LIGHTNET_BLOCKS_HPP_

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lightnet/arch.hpp"
#include "lightnet/autograd.hpp"
#include "lightnet/ops.hpp"
#include "lightnet/random.hpp"

namespace lightnet {

Activation to_activation(Nonlinearity nl);

// Visits learnable parameters and non-learnable buffers (BN running
// statistics) in a fixed order. Checkpoints and optimizers rely on it.
template <typename T>
struct StateVisitor {
  std::function<void(Parameter<T>&)> parameter;
  std::function<void(const std::string& name, Tensor<T>& buffer)> buffer;
};

template <typename T>
class Module {
 public:
  virtual ~Module() = default;
  virtual Var forward(Tape<T>& tape, Var x, Mode mode) = 0;
  virtual void visit(const StateVisitor<T>& v) = 0;
  // Re-draws weights (fan-in Gaussian), zero biases, BN gamma=1/beta=0.
  virtual void initialize(Rng& rng) = 0;
};

// Weight ~ N(0, 2 / fan_in); fan_in = Cin/groups * Kh * Kw (or D for dense).
template <typename T>
void init_fan_in(Tensor<T>& weight, std::size_t fan_in, Rng& rng);

template <typename T>
class BatchNorm {
 public:
  BatchNorm(const std::string& name, std::size_t channels);
  Var forward(Tape<T>& tape, Var x, Mode mode);
  void visit(const StateVisitor<T>& v);
  void reset();

  Parameter<T> gamma;
  Parameter<T> beta;
  Tensor<T> running_mean;
  Tensor<T> running_var;

 private:
  std::string name_;
};

// Convolution followed by optional batch norm and a nonlinearity.
template <typename T>
class ConvUnit : public Module<T> {
 public:
  ConvUnit(const std::string& name, const ConvParams& params, bool batch_norm, Activation act);

  Var forward(Tape<T>& tape, Var x, Mode mode) override;
  void visit(const StateVisitor<T>& v) override;
  void initialize(Rng& rng) override;

  const ConvParams& params() const { return params_; }
  Activation activation() const { return act_; }
  bool has_batch_norm() const { return bn_.has_value(); }
  bool has_bias() const { return bias_.has_value(); }
  Parameter<T>& weight() { return weight_; }
  std::optional<Parameter<T>>& bias() { return bias_; }
  std::optional<BatchNorm<T>>& batch_norm() { return bn_; }

 private:
  ConvParams params_;
  Activation act_;
  Parameter<T> weight_;
  std::optional<Parameter<T>> bias_;  // present only without BN
  std::optional<BatchNorm<T>> bn_;
};

struct SEConfig {
  std::size_t channels = 0;
  std::size_t reduction = 4;
  std::size_t hidden() const;  // ceil(channels / reduction), >= 1
};

// Squeeze-and-excitation: global average pool, 1x1 conv C->C/4, ReLU,
// 1x1 conv C/4->C, hard sigmoid, per-channel scale of the input.
template <typename T>
class SqueezeExcite : public Module<T> {
 public:
  SqueezeExcite(const std::string& name, const SEConfig& config);

  Var forward(Tape<T>& tape, Var x, Mode mode) override;
  void visit(const StateVisitor<T>& v) override;
  void initialize(Rng& rng) override;

  // Gate values [N,C,1,1] of the most recent forward pass.
  Var last_gate() const { return last_gate_; }
  const SEConfig& config() const { return config_; }
  ConvUnit<T>& reduce() { return reduce_; }
  ConvUnit<T>& expand() { return expand_; }

 private:
  SEConfig config_;
  ConvUnit<T> reduce_;
  ConvUnit<T> expand_;
  Var last_gate_;
};

struct BneckSpec {
  std::size_t in_channels = 0;
  std::size_t exp_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 3;
  std::size_t stride = 1;
  bool use_se = false;
  Activation nonlinearity = Activation::kRelu;

  void validate() const;
  bool has_residual() const { return stride == 1 && in_channels == out_channels; }
  bool has_expansion() const { return exp_channels != in_channels; }
};

// expand 1x1 (omitted when exp == in) -> depthwise KxK -> [SE] -> linear
// 1x1 projection + BN -> [+ input when stride 1 and in == out].
template <typename T>
class Bneck : public Module<T> {
 public:
  Bneck(const std::string& name, const BneckSpec& spec);

  Var forward(Tape<T>& tape, Var x, Mode mode) override;
  void visit(const StateVisitor<T>& v) override;
  void initialize(Rng& rng) override;

  const BneckSpec& spec() const { return spec_; }
  bool has_residual() const { return spec_.has_residual(); }
  ConvUnit<T>* expansion() { return expand_.get(); }
  ConvUnit<T>& depthwise() { return depthwise_; }
  SqueezeExcite<T>* squeeze_excite() { return se_.get(); }
  ConvUnit<T>& projection() { return project_; }

 private:
  BneckSpec spec_;
  std::unique_ptr<ConvUnit<T>> expand_;
  ConvUnit<T> depthwise_;
  std::unique_ptr<SqueezeExcite<T>> se_;
  ConvUnit<T> project_;
};

template <typename T>
class GlobalAvgPool : public Module<T> {
 public:
  Var forward(Tape<T>& tape, Var x, Mode mode) override;
  void visit(const StateVisitor<T>&) override {}
  void initialize(Rng&) override {}
};

template <typename T>
class MaxPool : public Module<T> {
 public:
  MaxPool(std::size_t kernel, std::size_t stride, std::size_t padding)
      : kernel_(kernel), stride_(stride), padding_(padding) {}
  Var forward(Tape<T>& tape, Var x, Mode mode) override;
  void visit(const StateVisitor<T>&) override {}
  void initialize(Rng&) override {}

 private:
  std::size_t kernel_, stride_, padding_;
};

// Flattens [N,C,H,W] to [N, C*H*W] and applies weight [D,K] + bias.
template <typename T>
class DenseUnit : public Module<T> {
 public:
  DenseUnit(const std::string& name, std::size_t in_features, std::size_t out_features,
            Activation act);
  Var forward(Tape<T>& tape, Var x, Mode mode) override;
  void visit(const StateVisitor<T>& v) override;
  void initialize(Rng& rng) override;

 private:
  std::size_t in_features_;
  Activation act_;
  Parameter<T> weight_;
  Parameter<T> bias_;
};

// ResNet bottleneck: 1x1 -> KxK (stride) -> 1x1, BN after each, projection
// shortcut (1x1 stride + BN) when the shape changes.
template <typename T>
class ResidualBottleneck : public Module<T> {
 public:
  ResidualBottleneck(const std::string& name, std::size_t in, std::size_t mid, std::size_t out,
                     std::size_t kernel, std::size_t stride, Activation act);
  Var forward(Tape<T>& tape, Var x, Mode mode) override;
  void visit(const StateVisitor<T>& v) override;
  void initialize(Rng& rng) override;

 private:
  Activation act_;
  ConvUnit<T> conv1_;
  ConvUnit<T> conv2_;
  ConvUnit<T> conv3_;
  std::unique_ptr<ConvUnit<T>> shortcut_;
};

// Classifier head: 1x1 conv to `head` channels + BN + h-swish at full
// resolution, global pool, then 1x1 conv (no BN) to `features` + h-swish and
// 1x1 conv (no BN) to the class count, all at 1x1. Returns logits [N,K].
template <typename T>
class EfficientLastStage : public Module<T> {
 public:
  EfficientLastStage(const std::string& name, std::size_t in_channels, std::size_t head,
                     std::size_t features, std::size_t num_classes);
  Var forward(Tape<T>& tape, Var x, Mode mode) override;
  void visit(const StateVisitor<T>& v) override;
  void initialize(Rng& rng) override;

  // Value of the most recent pooled tensor fed to the relocated wide conv.
  Var last_pooled() const { return last_pooled_; }
  ConvUnit<T>& feature_conv() { return features_; }

 private:
  std::size_t num_classes_;
  ConvUnit<T> head_;
  GlobalAvgPool<T> pool_;
  ConvUnit<T> features_;
  ConvUnit<T> classifier_;
  Var last_pooled_;
};

// Cost-model fragments of the classifier head, starting from the final bneck
// output (160*k channels at the final feature resolution).
// Original: 1x1 -> 960, 3x3 dw, 1x1 -> 320, 1x1 -> 1280, pool, classifier.
ArchSpec original_last_stage_cost_graph(double width_multiplier = 1.0,
                                        std::size_t feature_resolution = 7,
                                        std::size_t num_classes = 1000);
// Efficient: 1x1 -> 960, pool, 1x1 -> 1280 (NBN), classifier (NBN).
ArchSpec efficient_last_stage_cost_graph(double width_multiplier = 1.0,
                                         std::size_t feature_resolution = 7,
                                         std::size_t num_classes = 1000);

}  // namespace lightnet

#endif  // LIGHTNET_BLOCKS_HPP_
