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

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "lightnet/error.hpp"
#include "lightnet/ops.hpp"
#include "lightnet/random.hpp"
#include "naive_conv.h"

namespace lightnet {
namespace {

using ::lightnet::testing::naive_conv2d;
using ::lightnet::testing::run_conv_oracle;

TEST(ActivationTest, HardSwishReferenceVector) {
  const std::vector<double> in = {-4, -3, -1, 0, 1, 3, 5};
  const std::vector<double> want = {0, 0, -1.0 / 3.0, 0, 2.0 / 3.0, 3, 5};
  for (std::size_t i = 0; i < in.size(); ++i) {
    EXPECT_EQ(activate(Activation::kHardSwish, in[i]), want[i]) << "x=" << in[i];
  }
}

TEST(ActivationTest, HardSigmoidAndRelu6) {
  EXPECT_EQ(activate(Activation::kHardSigmoid, -3.0), 0.0);
  EXPECT_EQ(activate(Activation::kHardSigmoid, 0.0), 0.5);
  EXPECT_EQ(activate(Activation::kHardSigmoid, 3.0), 1.0);
  EXPECT_EQ(activate(Activation::kHardSigmoid, 10.0), 1.0);
  EXPECT_EQ(activate(Activation::kRelu6, 7.5), 6.0);
  EXPECT_EQ(activate(Activation::kRelu6, -2.0), 0.0);
  EXPECT_EQ(activate(Activation::kRelu, -0.5), 0.0);
}

TEST(ActivationTest, HardSwishTracksSwish) {
  // Piecewise-linear approximation stays within 0.15 of x*sigmoid(x).
  for (double x = -8.0; x <= 8.0; x += 0.01) {
    EXPECT_NEAR(activate(Activation::kHardSwish, x), activate(Activation::kSwish, x), 0.15);
  }
}

TEST(ActivationTest, HardSwishDerivativePieces) {
  EXPECT_EQ(activate_derivative(Activation::kHardSwish, -4.0), 0.0);
  EXPECT_EQ(activate_derivative(Activation::kHardSwish, 4.0), 1.0);
  EXPECT_DOUBLE_EQ(activate_derivative(Activation::kHardSwish, 0.0), 0.5);
  EXPECT_DOUBLE_EQ(activate_derivative(Activation::kHardSwish, 1.5), 1.0);
  EXPECT_EQ(activate_derivative(Activation::kHardSigmoid, 4.0), 0.0);
  EXPECT_DOUBLE_EQ(activate_derivative(Activation::kHardSigmoid, 1.0), 1.0 / 6.0);
}

TEST(ActivationTest, ParseRejectsUnknown) {
  EXPECT_EQ(parse_activation("h_swish"), Activation::kHardSwish);
  EXPECT_THROW(parse_activation("gelu"), Error);
}

TEST(ConvTest, MatchesDirectConvolutionDouble) {
  const auto stats = run_conv_oracle<double>(200, 1);
  EXPECT_EQ(stats.configs, 200u);
  EXPECT_GT(stats.depthwise, 0u);
  EXPECT_GT(stats.pointwise, 0u);
  EXPECT_GT(stats.grouped, 0u);
  EXPECT_LT(stats.max_relative_error, 1e-12);
}

TEST(ConvTest, MatchesDirectConvolutionFloat) {
  const auto stats = run_conv_oracle<float>(150, 2);
  EXPECT_LT(stats.max_relative_error, 1e-5);
}

TEST(ConvTest, OutputShapeFollowsFloorFormula) {
  ConvParams p = ConvParams::square(3, 16, 3, 2);
  EXPECT_EQ(p.output_shape({1, 3, 224, 224}), (Shape{1, 16, 112, 112}));
  p.padding = 0;
  EXPECT_EQ(p.output_shape({1, 3, 7, 7}), (Shape{1, 16, 3, 3}));
}

TEST(ConvTest, RejectsMismatchedChannels) {
  ConvParams p = ConvParams::square(3, 4, 3);
  Tensor<double> x({1, 2, 5, 5});
  Tensor<double> w(p.weight_shape());
  EXPECT_THROW(conv2d_forward<double>(x, w, nullptr, p), Error);
  ConvParams g = ConvParams::square(3, 4, 3, 1, 2);
  EXPECT_THROW(g.validate(), Error);
}

TEST(ConvTest, KernelLargerThanPaddedInputThrows) {
  ConvParams p = ConvParams::square(1, 1, 5);
  p.padding = 0;
  Tensor<double> x({1, 1, 3, 3});
  Tensor<double> w(p.weight_shape());
  EXPECT_THROW(conv2d_forward<double>(x, w, nullptr, p), Error);
}

TEST(ConvTest, DepthwiseIsPerChannel) {
  // A depthwise conv equals C independent single-channel convs.
  Rng rng(9);
  const ConvParams p = ConvParams::depthwise(3, 3, 1);
  Tensor<double> x({1, 3, 5, 5});
  for (double& v : x.values()) v = rng.uniform(-1, 1);
  Tensor<double> w(p.weight_shape());
  for (double& v : w.values()) v = rng.uniform(-1, 1);
  const Tensor<double> out = conv2d_forward<double>(x, w, nullptr, p);
  for (std::size_t c = 0; c < 3; ++c) {
    Tensor<double> xc({1, 1, 5, 5}), wc({1, 1, 3, 3});
    std::copy_n(x.data() + c * 25, 25, xc.data());
    std::copy_n(w.data() + c * 9, 9, wc.data());
    const Tensor<double> ref = naive_conv2d<double>(xc, wc, nullptr, ConvParams::square(1, 1, 3));
    for (std::size_t i = 0; i < 25; ++i) EXPECT_NEAR(out[c * 25 + i], ref[i], 1e-14);
  }
}

TEST(BatchNormTest, TrainModeNormalizesAndUpdatesRunningStats) {
  Rng rng(4);
  Tensor<double> x({4, 2, 3, 3});
  for (double& v : x.values()) v = rng.uniform(-2, 5);
  BatchNormState<double> state(2);
  const Tensor<double> y = batch_norm(x, state);
  const std::size_t m = 4 * 9;
  for (std::size_t c = 0; c < 2; ++c) {
    double mean = 0, var = 0, xm = 0, xv = 0;
    for (std::size_t n = 0; n < 4; ++n) {
      for (std::size_t i = 0; i < 9; ++i) {
        mean += y[(n * 2 + c) * 9 + i];
        xm += x[(n * 2 + c) * 9 + i];
      }
    }
    mean /= m;
    xm /= m;
    for (std::size_t n = 0; n < 4; ++n) {
      for (std::size_t i = 0; i < 9; ++i) {
        var += std::pow(y[(n * 2 + c) * 9 + i] - mean, 2);
        xv += std::pow(x[(n * 2 + c) * 9 + i] - xm, 2);
      }
    }
    EXPECT_NEAR(mean, 0.0, 1e-12);
    EXPECT_NEAR(var / m, 1.0, 1e-4);
    EXPECT_NEAR(state.running_mean[c], 0.1 * xm, 1e-12);
    EXPECT_NEAR(state.running_var[c], 0.9 + 0.1 * xv / (m - 1), 1e-12);
  }
}

TEST(BatchNormTest, EvalModeUsesRunningStats) {
  BatchNormState<double> state(1);
  state.mode = Mode::kEval;
  state.running_mean[0] = 2.0;
  state.running_var[0] = 4.0;
  state.gamma[0] = 3.0;
  state.beta[0] = -1.0;
  Tensor<double> x({1, 1, 1, 2}, std::vector<double>{2.0, 6.0});
  const Tensor<double> y = batch_norm(x, state);
  EXPECT_NEAR(y[0], -1.0, 1e-12);
  EXPECT_NEAR(y[1], 3.0 * 4.0 / std::sqrt(4.0 + 1e-5) - 1.0, 1e-12);
  EXPECT_EQ(state.running_mean[0], 2.0);
}

TEST(BatchNormTest, DefaultEvalIsNearIdentity) {
  BatchNormState<double> state(3);
  state.mode = Mode::kEval;
  Tensor<double> x({2, 3, 2, 2});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i) - 10.0;
  const Tensor<double> y = batch_norm(x, state);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y[i], x[i], 1e-4);
}

TEST(BatchNormTest, SingleValuePerChannelRejectedInTrainMode) {
  BatchNormState<double> state(2);
  Tensor<double> x({1, 2, 1, 1});
  EXPECT_THROW(batch_norm(x, state), Error);
}

TEST(PoolTest, GlobalAveragePool) {
  Tensor<double> x({1, 2, 2, 2}, std::vector<double>{1, 2, 3, 4, 10, 20, 30, 40});
  const Tensor<double> y = global_avg_pool_forward(x);
  EXPECT_EQ(y.dims(), (Shape{1, 2, 1, 1}));
  EXPECT_EQ(y[0], 2.5);
  EXPECT_EQ(y[1], 25.0);
}

TEST(PoolTest, MaxPoolPicksLargest) {
  Tensor<double> x({1, 1, 3, 3}, std::vector<double>{1, 9, 2, 3, 4, 5, 8, 6, 7});
  const auto r = max_pool_forward(x, 2, 1, 0);
  EXPECT_EQ(r.output.dims(), (Shape{1, 1, 2, 2}));
  EXPECT_EQ(r.output[0], 9.0);
  EXPECT_EQ(r.output[1], 9.0);
  EXPECT_EQ(r.output[2], 8.0);
  EXPECT_EQ(r.output[3], 7.0);
  EXPECT_EQ(r.argmax[0], 1u);
}

TEST(DenseTest, MatchesManualProduct) {
  Tensor<double> x({2, 3}, std::vector<double>{1, 2, 3, -1, 0, 1});
  Tensor<double> w({3, 2}, std::vector<double>{1, 0, 0, 1, 1, 1});
  Tensor<double> b({2}, std::vector<double>{0.5, -0.5});
  const Tensor<double> y = dense_forward(x, w, &b);
  EXPECT_EQ(y[0], 4.5);
  EXPECT_EQ(y[1], 4.5);
  EXPECT_EQ(y[2], 0.5);
  EXPECT_EQ(y[3], 0.5);
}

TEST(ElementwiseTest, ChannelScaleBroadcastsGate) {
  Tensor<double> x({1, 2, 1, 2}, std::vector<double>{1, 2, 3, 4});
  Tensor<double> g({1, 2, 1, 1}, std::vector<double>{0.5, 2.0});
  const Tensor<double> y = channel_scale_forward(x, g);
  EXPECT_EQ(y[0], 0.5);
  EXPECT_EQ(y[1], 1.0);
  EXPECT_EQ(y[2], 6.0);
  EXPECT_EQ(y[3], 8.0);
  EXPECT_THROW(add_forward(x, g), Error);
}

TEST(LossTest, SoftmaxCrossEntropyValueAndGradient) {
  Tensor<double> logits({2, 3}, std::vector<double>{1, 2, 3, 0, 0, 0});
  const std::vector<int> labels = {2, 1};
  const auto r = softmax_cross_entropy(logits, std::span<const int>(labels));
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  const double want = 0.5 * (-std::log(std::exp(3.0) / z) + std::log(3.0));
  EXPECT_NEAR(r.loss, want, 1e-12);
  EXPECT_NEAR(r.grad[2], 0.5 * (std::exp(3.0) / z - 1.0), 1e-12);
  EXPECT_NEAR(r.grad[3], 0.5 / 3.0, 1e-12);
  EXPECT_NEAR(r.grad[4], 0.5 * (1.0 / 3.0 - 1.0), 1e-12);
}

TEST(LossTest, StableForLargeLogits) {
  Tensor<float> logits({1, 2}, std::vector<float>{1000.0f, 0.0f});
  const std::vector<int> labels = {0};
  const auto r = softmax_cross_entropy(logits, std::span<const int>(labels));
  EXPECT_TRUE(std::isfinite(r.loss));
  EXPECT_NEAR(r.loss, 0.0, 1e-6);
}

TEST(LossTest, RejectsOutOfRangeLabel) {
  Tensor<double> logits({1, 2});
  const std::vector<int> labels = {2};
  EXPECT_THROW(softmax_cross_entropy(logits, std::span<const int>(labels)), Error);
}

}  // namespace
}  // namespace lightnet
