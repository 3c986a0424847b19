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
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "lightnet/error.hpp"
#include "lightnet/random.hpp"
#include "lightnet/tensor.hpp"

namespace lightnet {
namespace {

TEST(TensorTest, ShapeAndIndexing) {
  Tensor<float> t({2, 3, 4, 5});
  EXPECT_EQ(t.rank(), 4u);
  EXPECT_EQ(t.size(), 120u);
  EXPECT_EQ(shape_to_string(t.dims()), "2x3x4x5");
  t.at(1, 2, 3, 4) = 7.0f;
  EXPECT_EQ(t[119], 7.0f);
  t.at(0, 1, 0, 0) = 3.0f;
  EXPECT_EQ(t[20], 3.0f);
}

TEST(TensorTest, RejectsZeroDimsAndMismatchedValues) {
  EXPECT_THROW(Tensor<float>({2, 0}), Error);
  EXPECT_THROW(Tensor<float>({2, 2}, std::vector<float>(3)), Error);
}

TEST(TensorTest, ReshapeKeepsValues) {
  std::vector<double> v(12);
  std::iota(v.begin(), v.end(), 0.0);
  Tensor<double> t({3, 4}, v);
  Tensor<double> r = t.reshaped({2, 6});
  EXPECT_EQ(r.dims(), (Shape{2, 6}));
  EXPECT_EQ(r[11], 11.0);
  EXPECT_THROW(t.reshaped({5}), Error);
}

TEST(TensorTest, CheckFiniteThrowsNumeric) {
  Tensor<float> t({2}, std::vector<float>{1.0f, NAN});
  EXPECT_FALSE(t.all_finite());
  try {
    t.check_finite("probe");
    FAIL() << "expected an exception";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumeric);
  }
}

TEST(TensorTest, CastRoundTrip) {
  Tensor<float> t({3}, std::vector<float>{0.5f, -1.25f, 3.0f});
  EXPECT_EQ(t.cast<double>().cast<float>(), t);
}

TEST(RngTest, SameSeedSameStream) {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs = differs || x != c.next_u64();
  }
  EXPECT_TRUE(differs);
}

TEST(RngTest, UniformMomentsAndRange) {
  Rng rng(7);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
  }
  EXPECT_NEAR(sum / n, 0.5, 0.005);
  EXPECT_NEAR(sq / n - (sum / n) * (sum / n), 1.0 / 12.0, 0.002);
}

TEST(RngTest, NormalAndExponentialMoments) {
  Rng rng(11);
  const int n = 200000;
  double ns = 0, nsq = 0, es = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    ns += z;
    nsq += z * z;
    const double e = rng.exponential();
    ASSERT_GE(e, 0.0);
    es += e;
  }
  EXPECT_NEAR(ns / n, 0.0, 0.01);
  EXPECT_NEAR(nsq / n, 1.0, 0.01);
  EXPECT_NEAR(es / n, 1.0, 0.01);
}

TEST(RngTest, BelowIsUniform) {
  Rng rng(3);
  std::vector<int> counts(6, 0);
  const int n = 60000;
  for (int i = 0; i < n; ++i) {
    const auto v = rng.below(6);
    ASSERT_LT(v, 6u);
    ++counts[v];
  }
  for (int c : counts) EXPECT_NEAR(c, n / 6, 400);
}

TEST(RngTest, ShuffleIsPermutation) {
  Rng rng(5);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  rng.shuffle(std::span<int>(v));
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
}

TEST(RngTest, MixSeedSeparatesStreams) {
  EXPECT_NE(mix_seed(0, 1, 2), mix_seed(0, 2, 1));
  EXPECT_NE(mix_seed(0, 1), mix_seed(1, 1));
  EXPECT_EQ(mix_seed(9, 4, 4), mix_seed(9, 4, 4));
}

}  // namespace
}  // namespace lightnet
