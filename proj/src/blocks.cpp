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

#include "lightnet/blocks.hpp"

#include <cmath>

#include "lightnet/error.hpp"

namespace lightnet {

Activation to_activation(Nonlinearity nl) {
  switch (nl) {
    case Nonlinearity::kNone:
      return Activation::kIdentity;
    case Nonlinearity::kRelu:
      return Activation::kRelu;
    case Nonlinearity::kHardSwish:
      return Activation::kHardSwish;
  }
  return Activation::kIdentity;
}

template <typename T>
void init_fan_in(Tensor<T>& weight, std::size_t fan_in, Rng& rng) {
  const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (T& w : weight.values()) w = static_cast<T>(rng.normal() * std_dev);
}

// ---------------------------------------------------------------------------
// BatchNorm

template <typename T>
BatchNorm<T>::BatchNorm(const std::string& name, std::size_t channels)
    : gamma(name + ".gamma", Tensor<T>(Shape{channels}, T{1}), false),
      beta(name + ".beta", Tensor<T>(Shape{channels}, T{0}), false),
      running_mean(Shape{channels}, T{0}),
      running_var(Shape{channels}, T{1}),
      name_(name) {}

template <typename T>
Var BatchNorm<T>::forward(Tape<T>& tape, Var x, Mode mode) {
  return lightnet::batch_norm<T>(tape, x, tape.parameter(gamma), tape.parameter(beta),
                                 running_mean.values(), running_var.values(), mode);
}

template <typename T>
void BatchNorm<T>::visit(const StateVisitor<T>& v) {
  if (v.parameter) {
    v.parameter(gamma);
    v.parameter(beta);
  }
  if (v.buffer) {
    v.buffer(name_ + ".running_mean", running_mean);
    v.buffer(name_ + ".running_var", running_var);
  }
}

template <typename T>
void BatchNorm<T>::reset() {
  gamma.value.fill(T{1});
  beta.value.fill(T{0});
  running_mean.fill(T{0});
  running_var.fill(T{1});
}

// ---------------------------------------------------------------------------
// ConvUnit

template <typename T>
ConvUnit<T>::ConvUnit(const std::string& name, const ConvParams& params, bool batch_norm,
                      Activation act)
    : params_(params), act_(act) {
  params_.validate();
  weight_ = Parameter<T>(name + ".conv.weight", Tensor<T>(params_.weight_shape()), true);
  if (batch_norm) {
    bn_.emplace(name + ".bn", params_.out_channels);
  } else {
    bias_.emplace(name + ".conv.bias", Tensor<T>(Shape{params_.out_channels}), false);
  }
}

template <typename T>
Var ConvUnit<T>::forward(Tape<T>& tape, Var x, Mode mode) {
  const Var w = tape.parameter(weight_);
  Var y;
  if (bias_.has_value()) {
    const Var b = tape.parameter(*bias_);
    y = conv2d(tape, x, w, &b, params_);
  } else {
    y = conv2d<T>(tape, x, w, nullptr, params_);
  }
  if (bn_.has_value()) y = bn_->forward(tape, y, mode);
  if (act_ != Activation::kIdentity) y = lightnet::activation(tape, y, act_);
  return y;
}

template <typename T>
void ConvUnit<T>::visit(const StateVisitor<T>& v) {
  if (v.parameter) v.parameter(weight_);
  if (bias_.has_value() && v.parameter) v.parameter(*bias_);
  if (bn_.has_value()) bn_->visit(v);
}

template <typename T>
void ConvUnit<T>::initialize(Rng& rng) {
  init_fan_in(weight_.value, params_.in_channels / params_.groups * params_.kernel_h * params_.kernel_w,
              rng);
  if (bias_.has_value()) bias_->value.fill(T{0});
  if (bn_.has_value()) bn_->reset();
}

// ---------------------------------------------------------------------------
// SqueezeExcite

std::size_t SEConfig::hidden() const {
  require(channels > 0 && reduction > 0, "SE config needs positive channels and reduction");
  return (channels + reduction - 1) / reduction;
}

template <typename T>
SqueezeExcite<T>::SqueezeExcite(const std::string& name, const SEConfig& config)
    : config_(config),
      reduce_(name + ".fc1", ConvParams::square(config.channels, config.hidden(), 1), false,
              Activation::kRelu),
      expand_(name + ".fc2", ConvParams::square(config.hidden(), config.channels, 1), false,
              Activation::kHardSigmoid) {}

template <typename T>
Var SqueezeExcite<T>::forward(Tape<T>& tape, Var x, Mode mode) {
  const Tensor<T>& in = tape.value(x);
  require(in.rank() == 4 && in.dim(1) == config_.channels, "SE: input has ",
          in.rank() == 4 ? in.dim(1) : 0, " channels, expected ", config_.channels);
  Var pooled = global_avg_pool(tape, x);
  Var hidden = reduce_.forward(tape, pooled, mode);
  last_gate_ = expand_.forward(tape, hidden, mode);
  return channel_scale(tape, x, last_gate_);
}

template <typename T>
void SqueezeExcite<T>::visit(const StateVisitor<T>& v) {
  reduce_.visit(v);
  expand_.visit(v);
}

template <typename T>
void SqueezeExcite<T>::initialize(Rng& rng) {
  reduce_.initialize(rng);
  expand_.initialize(rng);
}

// ---------------------------------------------------------------------------
// Bneck

void BneckSpec::validate() const {
  require(in_channels > 0 && exp_channels > 0 && out_channels > 0,
          "bneck: channel counts must be positive");
  require(kernel == 3 || kernel == 5, "bneck: kernel must be 3 or 5, got ", kernel);
  require(stride == 1 || stride == 2, "bneck: stride must be 1 or 2, got ", stride);
  require(nonlinearity == Activation::kRelu || nonlinearity == Activation::kHardSwish,
          "bneck: nonlinearity must be relu or h_swish, got ", activation_name(nonlinearity));
}

namespace {

const BneckSpec& validated(const BneckSpec& spec) {
  spec.validate();
  return spec;
}

}  // namespace

template <typename T>
Bneck<T>::Bneck(const std::string& name, const BneckSpec& spec)
    : spec_(validated(spec)),
      depthwise_(name + ".dw", ConvParams::depthwise(spec.exp_channels, spec.kernel, spec.stride),
                 true, spec.nonlinearity),
      project_(name + ".project", ConvParams::square(spec.exp_channels, spec.out_channels, 1), true,
               Activation::kIdentity) {
  if (spec_.has_expansion()) {
    expand_ = std::make_unique<ConvUnit<T>>(
        name + ".expand", ConvParams::square(spec.in_channels, spec.exp_channels, 1), true,
        spec.nonlinearity);
  }
  if (spec_.use_se) {
    se_ = std::make_unique<SqueezeExcite<T>>(name + ".se", SEConfig{spec.exp_channels, 4});
  }
}

template <typename T>
Var Bneck<T>::forward(Tape<T>& tape, Var x, Mode mode) {
  const Tensor<T>& in = tape.value(x);
  require(in.rank() == 4 && in.dim(1) == spec_.in_channels, "bneck: input has shape ",
          shape_to_string(in.dims()), ", expected ", spec_.in_channels, " channels");
  Var h = x;
  if (expand_) h = expand_->forward(tape, h, mode);
  h = depthwise_.forward(tape, h, mode);
  if (se_) h = se_->forward(tape, h, mode);
  h = project_.forward(tape, h, mode);
  if (spec_.has_residual()) h = add(tape, h, x);
  return h;
}

template <typename T>
void Bneck<T>::visit(const StateVisitor<T>& v) {
  if (expand_) expand_->visit(v);
  depthwise_.visit(v);
  if (se_) se_->visit(v);
  project_.visit(v);
}

template <typename T>
void Bneck<T>::initialize(Rng& rng) {
  if (expand_) expand_->initialize(rng);
  depthwise_.initialize(rng);
  if (se_) se_->initialize(rng);
  project_.initialize(rng);
}

// ---------------------------------------------------------------------------
// Pools and dense

template <typename T>
Var GlobalAvgPool<T>::forward(Tape<T>& tape, Var x, Mode) {
  return global_avg_pool(tape, x);
}

template <typename T>
Var MaxPool<T>::forward(Tape<T>& tape, Var x, Mode) {
  return max_pool(tape, x, kernel_, stride_, padding_);
}

template <typename T>
DenseUnit<T>::DenseUnit(const std::string& name, std::size_t in_features, std::size_t out_features,
                        Activation act)
    : in_features_(in_features),
      act_(act),
      weight_(name + ".weight", Tensor<T>(Shape{in_features, out_features}), true),
      bias_(name + ".bias", Tensor<T>(Shape{out_features}), false) {}

template <typename T>
Var DenseUnit<T>::forward(Tape<T>& tape, Var x, Mode) {
  const Tensor<T>& in = tape.value(x);
  const std::size_t n = in.dim(0);
  require(in.size() == n * in_features_, "dense: input ", shape_to_string(in.dims()),
          " flattens to ", in.size() / n, " features, expected ", in_features_);
  Var flat = reshape(tape, x, Shape{n, in_features_});
  const Var b = tape.parameter(bias_);
  Var y = dense(tape, flat, tape.parameter(weight_), &b);
  if (act_ != Activation::kIdentity) y = activation(tape, y, act_);
  return reshape(tape, y, Shape{n, weight_.value.dim(1), 1, 1});
}

template <typename T>
void DenseUnit<T>::visit(const StateVisitor<T>& v) {
  if (v.parameter) {
    v.parameter(weight_);
    v.parameter(bias_);
  }
}

template <typename T>
void DenseUnit<T>::initialize(Rng& rng) {
  init_fan_in(weight_.value, in_features_, rng);
  bias_.value.fill(T{0});
}

// ---------------------------------------------------------------------------
// ResidualBottleneck

template <typename T>
ResidualBottleneck<T>::ResidualBottleneck(const std::string& name, std::size_t in, std::size_t mid,
                                          std::size_t out, std::size_t kernel, std::size_t stride,
                                          Activation act)
    : act_(act),
      conv1_(name + ".conv1", ConvParams::square(in, mid, 1), true, act),
      conv2_(name + ".conv2", ConvParams::square(mid, mid, kernel, stride), true, act),
      conv3_(name + ".conv3", ConvParams::square(mid, out, 1), true, Activation::kIdentity) {
  if (stride != 1 || in != out) {
    shortcut_ = std::make_unique<ConvUnit<T>>(
        name + ".downsample", ConvParams::square(in, out, 1, stride), true, Activation::kIdentity);
  }
}

template <typename T>
Var ResidualBottleneck<T>::forward(Tape<T>& tape, Var x, Mode mode) {
  Var h = conv1_.forward(tape, x, mode);
  h = conv2_.forward(tape, h, mode);
  h = conv3_.forward(tape, h, mode);
  Var skip = shortcut_ ? shortcut_->forward(tape, x, mode) : x;
  h = add(tape, h, skip);
  if (act_ != Activation::kIdentity) h = activation(tape, h, act_);
  return h;
}

template <typename T>
void ResidualBottleneck<T>::visit(const StateVisitor<T>& v) {
  conv1_.visit(v);
  conv2_.visit(v);
  conv3_.visit(v);
  if (shortcut_) shortcut_->visit(v);
}

template <typename T>
void ResidualBottleneck<T>::initialize(Rng& rng) {
  conv1_.initialize(rng);
  conv2_.initialize(rng);
  conv3_.initialize(rng);
  if (shortcut_) shortcut_->initialize(rng);
}

// ---------------------------------------------------------------------------
// EfficientLastStage

template <typename T>
EfficientLastStage<T>::EfficientLastStage(const std::string& name, std::size_t in_channels,
                                          std::size_t head, std::size_t features,
                                          std::size_t num_classes)
    : num_classes_(num_classes),
      head_(name + ".head", ConvParams::square(in_channels, head, 1), true, Activation::kHardSwish),
      features_(name + ".features", ConvParams::square(head, features, 1), false,
                Activation::kHardSwish),
      classifier_(name + ".classifier", ConvParams::square(features, num_classes, 1), false,
                  Activation::kIdentity) {}

template <typename T>
Var EfficientLastStage<T>::forward(Tape<T>& tape, Var x, Mode mode) {
  const Tensor<T>& in = tape.value(x);
  require(in.rank() == 4 && in.dim(1) == head_.params().in_channels,
          "efficient last stage: input has shape ", shape_to_string(in.dims()), ", expected ",
          head_.params().in_channels, " channels");
  Var h = head_.forward(tape, x, mode);
  last_pooled_ = pool_.forward(tape, h, mode);
  h = features_.forward(tape, last_pooled_, mode);
  h = classifier_.forward(tape, h, mode);
  return reshape(tape, h, Shape{in.dim(0), num_classes_});
}

template <typename T>
void EfficientLastStage<T>::visit(const StateVisitor<T>& v) {
  head_.visit(v);
  features_.visit(v);
  classifier_.visit(v);
}

template <typename T>
void EfficientLastStage<T>::initialize(Rng& rng) {
  head_.initialize(rng);
  features_.initialize(rng);
  classifier_.initialize(rng);
}

// ---------------------------------------------------------------------------
// Cost-model fragments

namespace {

LayerSpec fragment_row(LayerOp op, std::size_t kernel, std::size_t out, Nonlinearity nl, bool bn) {
  LayerSpec l;
  l.op = op;
  l.kernel = kernel;
  l.stride = 1;
  l.out = out;
  l.nl = nl;
  l.bn = bn;
  return l;
}

ArchSpec fragment_base(const char* name, double width_multiplier, std::size_t feature_resolution,
                       std::size_t num_classes) {
  ArchSpec spec;
  spec.name = name;
  spec.in_channels = scale_channels(160, width_multiplier);
  spec.input_resolution = feature_resolution;
  spec.width_multiplier = width_multiplier;
  spec.num_classes = num_classes;
  return spec;
}

}  // namespace

ArchSpec original_last_stage_cost_graph(double width_multiplier, std::size_t feature_resolution,
                                        std::size_t num_classes) {
  ArchSpec spec =
      fragment_base("original-last-stage", width_multiplier, feature_resolution, num_classes);
  const std::size_t head = scale_channels(960, width_multiplier);
  constexpr auto HS = Nonlinearity::kHardSwish;
  spec.layers = {
      fragment_row(LayerOp::kConv2d, 1, head, HS, true),
      fragment_row(LayerOp::kDwConv, 3, head, HS, true),
      fragment_row(LayerOp::kConv2d, 1, scale_channels(320, width_multiplier), Nonlinearity::kNone,
                   true),
      fragment_row(LayerOp::kConv2d, 1, scale_channels(1280, width_multiplier), HS, true),
      fragment_row(LayerOp::kPool, 0, scale_channels(1280, width_multiplier), Nonlinearity::kNone,
                   false),
      fragment_row(LayerOp::kConv2d, 1, num_classes, Nonlinearity::kNone, false),
  };
  return spec;
}

ArchSpec efficient_last_stage_cost_graph(double width_multiplier, std::size_t feature_resolution,
                                         std::size_t num_classes) {
  ArchSpec spec =
      fragment_base("efficient-last-stage", width_multiplier, feature_resolution, num_classes);
  const std::size_t head = scale_channels(960, width_multiplier);
  constexpr auto HS = Nonlinearity::kHardSwish;
  spec.layers = {
      fragment_row(LayerOp::kConv2d, 1, head, HS, true),
      fragment_row(LayerOp::kPool, 0, head, Nonlinearity::kNone, false),
      fragment_row(LayerOp::kConv2d, 1, scale_channels(1280, width_multiplier), HS, false),
      fragment_row(LayerOp::kConv2d, 1, num_classes, Nonlinearity::kNone, false),
  };
  return spec;
}

template void init_fan_in(Tensor<float>&, std::size_t, Rng&);
template void init_fan_in(Tensor<double>&, std::size_t, Rng&);

#define LIGHTNET_INSTANTIATE_BLOCKS(T)    \
  template class BatchNorm<T>;            \
  template class ConvUnit<T>;             \
  template class SqueezeExcite<T>;        \
  template class Bneck<T>;                \
  template class GlobalAvgPool<T>;        \
  template class MaxPool<T>;              \
  template class DenseUnit<T>;            \
  template class ResidualBottleneck<T>;   \
  template class EfficientLastStage<T>;

LIGHTNET_INSTANTIATE_BLOCKS(float)
LIGHTNET_INSTANTIATE_BLOCKS(double)

#undef LIGHTNET_INSTANTIATE_BLOCKS

}  // namespace lightnet
