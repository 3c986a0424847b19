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

#include <vector>

#include <gtest/gtest.h>

#include "lightnet/autograd.hpp"
#include "lightnet/error.hpp"

namespace lightnet {
namespace {

TEST(TapeTest, FanOutAccumulatesGradients) {
  Tape<double> tape;
  const Var x = tape.leaf(Tensor<double>({1, 1, 1, 3}, std::vector<double>{1, -2, 3}), true);
  const Var y = add(tape, x, x);
  tape.backward(y, Tensor<double>({1, 1, 1, 3}, 1.0));
  for (double g : tape.grad(x).values()) EXPECT_EQ(g, 2.0);
}

TEST(TapeTest, ChainRuleThroughActivation) {
  Tape<double> tape;
  const Var x = tape.leaf(Tensor<double>({1, 1, 1, 4}, std::vector<double>{-4, -1, 1, 4}), true);
  const Var y = activation(tape, x, Activation::kHardSwish);
  const Var z = add(tape, y, y);
  tape.backward(z, Tensor<double>({1, 1, 1, 4}, 1.0));
  const Tensor<double>& g = tape.grad(x);
  EXPECT_EQ(g[0], 0.0);
  EXPECT_DOUBLE_EQ(g[1], 2.0 * (2.0 * -1.0 + 3.0) / 6.0);
  EXPECT_DOUBLE_EQ(g[2], 2.0 * (2.0 * 1.0 + 3.0) / 6.0);
  EXPECT_EQ(g[3], 2.0);
}

TEST(TapeTest, ParametersReceiveGradients) {
  Parameter<double> w("w", Tensor<double>({2, 1}, std::vector<double>{3, -1}), true);
  Tape<double> tape;
  const Var x = tape.leaf(Tensor<double>({1, 2}, std::vector<double>{2, 5}));
  const Var y = dense(tape, x, tape.parameter(w), nullptr);
  tape.backward(y, Tensor<double>({1, 1}, 1.0));
  ASSERT_FALSE(w.grad.empty());
  EXPECT_EQ(w.grad[0], 2.0);
  EXPECT_EQ(w.grad[1], 5.0);
  w.zero_grad();
  EXPECT_EQ(w.grad[0], 0.0);
}

TEST(TapeTest, ScalarLossBackward) {
  Tape<double> tape;
  const Var logits = tape.leaf(Tensor<double>({1, 2}, std::vector<double>{0, 0}), true);
  const std::vector<int> labels = {1};
  const Var loss = softmax_cross_entropy(tape, logits, std::span<const int>(labels));
  tape.backward(loss);
  EXPECT_DOUBLE_EQ(tape.grad(logits)[0], 0.5);
  EXPECT_DOUBLE_EQ(tape.grad(logits)[1], -0.5);
}

TEST(TapeTest, BackwardErrors) {
  Tape<double> empty;
  try {
    empty.backward(Var{0});
    FAIL() << "expected an exception";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kState);
  }
  Tape<double> tape;
  tape.leaf(Tensor<double>({1}), true);
  EXPECT_THROW(tape.backward(Var{5}), Error);
}

TEST(TapeTest, NonFiniteOutputIsRejected) {
  Tape<double> tape;
  const Var a = tape.leaf(Tensor<double>({1, 1, 1, 1}, std::vector<double>{1e308}), true);
  try {
    add(tape, a, a);
    FAIL() << "expected an exception";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumeric);
  }
}

TEST(TapeTest, ValuesSurviveTapeGrowth) {
  Tape<double> tape;
  const Var x = tape.leaf(Tensor<double>({1, 1, 1, 1}, std::vector<double>{1.5}));
  const Tensor<double>& ref = tape.value(x);
  for (int i = 0; i < 1000; ++i) tape.leaf(Tensor<double>({4}));
  EXPECT_EQ(ref[0], 1.5);
}

}  // namespace
}  // namespace lightnet
