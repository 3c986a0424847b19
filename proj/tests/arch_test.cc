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

#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "lightnet/arch.hpp"
#include "lightnet/cost.hpp"
#include "lightnet/error.hpp"
#include "lightnet/model.hpp"
#include "test_util.h"

namespace lightnet {
namespace {

using ::lightnet::testing::data_path;
using ::lightnet::testing::golden_path;

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::string error_message(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

TEST(ArchTest, SerializedSpecMatchesGoldenTable) {
  const ArchSpec spec = mobilenetv3_large_spec(3, 1000, 1.0);
  const ArchSpec reloaded = parse_arch_json(arch_to_json(spec));
  const std::vector<std::string> golden = read_lines(golden_path("mobilenetv3_large_table.txt"));
  ASSERT_EQ(golden.size(), 20u);
  EXPECT_EQ(arch_table_rows(reloaded), golden);
}

TEST(ArchTest, JsonRoundTripIsStable) {
  const ArchSpec spec = mobilenetv3_large_spec(1, 10, 0.5);
  const std::string json = arch_to_json(spec);
  const ArchSpec back = parse_arch_json(json);
  EXPECT_EQ(back.layers, spec.layers);
  EXPECT_EQ(arch_to_json(back), json);
}

TEST(ArchTest, LargeTableStructure) {
  const ArchSpec spec = mobilenetv3_large_spec(3, 1000, 1.0);
  ASSERT_EQ(spec.layers.size(), 20u);
  const std::vector<std::size_t> strides = {2, 1, 2, 1, 2, 1, 1, 2, 1, 1,
                                            1, 1, 1, 2, 1, 1, 1, 1, 1, 1};
  const std::vector<std::size_t> outs = {16,  16,  24,  24,  40,  40,  40,   80,   80,  80,
                                         80,  112, 112, 160, 160, 160, 960, 960, 1280, 1000};
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_EQ(spec.layers[i].stride, strides[i]) << i;
    EXPECT_EQ(spec.layers[i].out, outs[i]) << i;
  }
  const auto shapes = infer_shapes(spec);
  EXPECT_EQ(shapes[15].out_h, 7u);
  EXPECT_EQ(shapes[19].out_channels, 1000u);
  EXPECT_FALSE(spec.layers[18].bn);
  EXPECT_FALSE(spec.layers[19].bn);
}

TEST(ArchTest, WidthScalingRoundsUpToMultipleOfEight) {
  EXPECT_EQ(scale_channels(16, 0.25), 8u);
  EXPECT_EQ(scale_channels(24, 0.25), 8u);
  EXPECT_EQ(scale_channels(40, 0.25), 16u);
  EXPECT_EQ(scale_channels(960, 0.25), 240u);
  EXPECT_EQ(scale_channels(112, 0.35), 40u);
  EXPECT_EQ(scale_channels(1, 0.1), 8u);
  const ArchSpec spec = mobilenetv3_large_spec(1, 10, 0.25);
  EXPECT_EQ(spec.layers.back().out, 10u);
  EXPECT_EQ(spec.layers[18].out, 320u);
}

TEST(ArchTest, UnknownFieldIsRejectedWithPath) {
  const std::string json = R"({"name":"x","in_channels":1,"input_resolution":32,
    "width_multiplier":1.0,"num_classes":2,"layers":[
    {"op":"conv2d","kernel":3,"stride":1,"se":false,"nl":"relu","exp":null,"out":2,"bn":true,
     "dilation":2}]})";
  const std::string msg = error_message([&] { parse_arch_json(json); });
  EXPECT_NE(msg.find("layers[0]"), std::string::npos) << msg;
  EXPECT_NE(msg.find("dilation"), std::string::npos) << msg;
}

TEST(ArchTest, MissingFieldAndZeroStrideRejected) {
  const std::string missing = R"({"name":"x","in_channels":1,"input_resolution":32,
    "width_multiplier":1.0,"num_classes":2,"layers":[
    {"op":"conv2d","kernel":3,"stride":1,"se":false,"nl":"relu","exp":null,"bn":true}]})";
  EXPECT_NE(error_message([&] { parse_arch_json(missing); }).find("out"), std::string::npos);
  const std::string zero = R"({"name":"x","in_channels":1,"input_resolution":32,
    "width_multiplier":1.0,"num_classes":2,"layers":[
    {"op":"conv2d","kernel":3,"stride":0,"se":false,"nl":"relu","exp":null,"out":2,"bn":true}]})";
  EXPECT_NE(error_message([&] { parse_arch_json(zero); }).find("stride"), std::string::npos);
  EXPECT_THROW(parse_arch_json("{not json"), Error);
}

TEST(ArchTest, ChannelMismatchNamesBothLayers) {
  ArchSpec spec = mobilenetv3_large_spec(3, 1000, 1.0);
  spec.layers[17].out = 512;  // pool row after the 960-wide conv
  const std::string msg = error_message([&] { infer_shapes(spec); });
  EXPECT_NE(msg.find("layer 17"), std::string::npos) << msg;
  EXPECT_NE(msg.find("layer 16"), std::string::npos) << msg;
  EXPECT_THROW(Model<float>(spec, 0), Error);
}

TEST(ArchTest, KernelLargerThanInputIsRejected) {
  const ArchSpec spec = parse_arch_file(data_path("arch/aconvnets.json"));
  EXPECT_THROW(infer_shapes(spec, 16, 16, 1), Error);
}

TEST(ArchTest, AConvNetsFileBuildsAModel) {
  const ArchSpec spec = parse_arch_file(data_path("arch/aconvnets.json"));
  const auto shapes = infer_shapes(spec);
  EXPECT_EQ(shapes.back().out_h, 1u);
  EXPECT_EQ(shapes.back().out_channels, 10u);
  Model<float> model(spec, 1);
  Tensor<float> x({2, 1, 88, 88}, 0.5f);
  EXPECT_EQ(model.predict(x).dims(), (Shape{2, 10}));
  const CostReport r = analyze(spec, {88, 88, 1});
  EXPECT_EQ(r.total_params, model.parameter_count());
}

TEST(ArchTest, BuiltinLookup) {
  EXPECT_EQ(builtin_arch("builtin:resnet50", 3, 1000, 1.0).name, "resnet50");
  EXPECT_EQ(builtin_arch("mobilenetv3-large", 3, 1000, 1.0).layers.size(), 20u);
  EXPECT_THROW(builtin_arch("builtin:vgg16", 3, 1000, 1.0), Error);
}

}  // namespace
}  // namespace lightnet
