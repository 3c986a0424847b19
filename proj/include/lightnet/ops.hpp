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

// Primitive kernels of the compute core. Every function is stateless: the
// forward pass returns a fresh tensor and the backward pass receives the
// operands it needs explicitly. The autograd tape (autograd.hpp) records
// which operands to hand back.

#ifndef LIGHTNET_OPS_HPP_
#define LIGHTNET_OPS_HPP_

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "lightnet/tensor.hpp"

namespace lightnet {

// ---------------------------------------------------------------------------
// Convolution

struct ConvParams {
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;  // applied on every side
  std::size_t groups = 1;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;

  static ConvParams square(std::size_t in, std::size_t out, std::size_t kernel,
                           std::size_t stride = 1, std::size_t groups = 1);
  static ConvParams depthwise(std::size_t channels, std::size_t kernel, std::size_t stride);

  void validate() const;
  bool is_depthwise() const { return groups == in_channels && groups == out_channels; }
  // floor((extent + 2*pad - kernel) / stride) + 1; throws if the kernel does
  // not fit.
  std::size_t output_extent(std::size_t extent, std::size_t kernel) const;
  Shape weight_shape() const;
  Shape output_shape(const Shape& input) const;

  bool operator==(const ConvParams&) const = default;
};

// Cross-correlation (no kernel flip). weight is [Cout, Cin/groups, Kh, Kw];
// bias, when given, is [Cout].
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>* bias,
                         const ConvParams& params);

template <typename T>
struct ConvGrads {
  Tensor<T> input;
  Tensor<T> weight;
  Tensor<T> bias;  // empty when the forward pass had no bias
};

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                             const Tensor<T>& weight, bool has_bias, const ConvParams& params);

// ---------------------------------------------------------------------------
// Activations

enum class Activation { kIdentity, kRelu, kRelu6, kSigmoid, kSwish, kHardSigmoid, kHardSwish };

// Accepts relu, relu6, sigmoid, swish, hard_sigmoid, h_swish, identity/none.
Activation parse_activation(std::string_view name);
const char* activation_name(Activation kind);

template <typename T>
T activate(Activation kind, T x);
// Derivative with respect to x; kinks use subgradient 0.
template <typename T>
T activate_derivative(Activation kind, T x);

template <typename T>
Tensor<T> activation_forward(const Tensor<T>& x, Activation kind);
template <typename T>
Tensor<T> activation_backward(const Tensor<T>& grad_out, const Tensor<T>& x, Activation kind);

// ---------------------------------------------------------------------------
// Batch normalization

enum class Mode { kTrain, kEval };

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

template <typename T>
struct BatchNormState {
  explicit BatchNormState(std::size_t channels);

  Tensor<T> gamma;
  Tensor<T> beta;
  Tensor<T> running_mean;
  Tensor<T> running_var;
  double epsilon = kBatchNormEpsilon;
  double momentum = kBatchNormMomentum;
  Mode mode = Mode::kTrain;

  std::size_t channels() const { return gamma.size(); }
  void validate() const;
};

template <typename T>
struct BatchNormCache {
  Tensor<T> normalized;      // x_hat
  std::vector<T> inv_std;    // per channel
  Mode mode = Mode::kTrain;
};

// Normalizes per channel over N,H,W. Train mode uses batch statistics and
// updates the running estimates (unbiased variance, exponential average with
// `momentum`); eval mode uses the running estimates.
template <typename T>
Tensor<T> batch_norm_forward(const Tensor<T>& x, std::span<const T> gamma, std::span<const T> beta,
                             std::span<T> running_mean, std::span<T> running_var, double epsilon,
                             double momentum, Mode mode, BatchNormCache<T>* cache);

template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, BatchNormState<T>& state);

template <typename T>
struct BatchNormGrads {
  Tensor<T> input;
  Tensor<T> gamma;
  Tensor<T> beta;
};

template <typename T>
BatchNormGrads<T> batch_norm_backward(const Tensor<T>& grad_out, std::span<const T> gamma,
                                      const BatchNormCache<T>& cache);

// ---------------------------------------------------------------------------
// Pooling

template <typename T>
Tensor<T> global_avg_pool_forward(const Tensor<T>& x);
template <typename T>
Tensor<T> global_avg_pool_backward(const Tensor<T>& grad_out, const Shape& input_shape);

template <typename T>
struct MaxPoolResult {
  Tensor<T> output;
  std::vector<std::size_t> argmax;  // flat input index per output element
};

template <typename T>
MaxPoolResult<T> max_pool_forward(const Tensor<T>& x, std::size_t kernel, std::size_t stride,
                                  std::size_t padding);
template <typename T>
Tensor<T> max_pool_backward(const Tensor<T>& grad_out, std::span<const std::size_t> argmax,
                            const Shape& input_shape);

// ---------------------------------------------------------------------------
// Fully connected: x [N,D], weight [D,K], bias [K] -> [N,K]

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>* bias);

template <typename T>
struct DenseGrads {
  Tensor<T> input;
  Tensor<T> weight;
  Tensor<T> bias;
};

template <typename T>
DenseGrads<T> dense_backward(const Tensor<T>& grad_out, const Tensor<T>& x, const Tensor<T>& weight,
                             bool has_bias);

// ---------------------------------------------------------------------------
// Elementwise helpers

template <typename T>
Tensor<T> add_forward(const Tensor<T>& a, const Tensor<T>& b);

// y[n,c,h,w] = x[n,c,h,w] * gate[n,c]; gate is [N,C,1,1].
template <typename T>
Tensor<T> channel_scale_forward(const Tensor<T>& x, const Tensor<T>& gate);

template <typename T>
struct ChannelScaleGrads {
  Tensor<T> input;
  Tensor<T> gate;
};

template <typename T>
ChannelScaleGrads<T> channel_scale_backward(const Tensor<T>& grad_out, const Tensor<T>& x,
                                            const Tensor<T>& gate);

// ---------------------------------------------------------------------------
// Loss

template <typename T>
struct LossResult {
  double loss = 0.0;
  Tensor<T> grad;  // d(mean loss)/d(logits)
};

// Mean over the batch of -log softmax(logits)[label], max-subtracted.
template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels);

}  // namespace lightnet

#endif  // LIGHTNET_OPS_HPP_
