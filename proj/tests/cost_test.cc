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

#include <cstdint>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "lightnet/arch.hpp"
#include "lightnet/cost.hpp"
#include "lightnet/error.hpp"

namespace lightnet {
namespace {

// Hand-transcribed MobileNetV3-Large rows: input size, in, exp, out, k, SE, stride.
struct Row {
  std::uint64_t hw, in, exp, out, k;
  bool se;
  std::uint64_t stride;
};

const std::vector<Row> kBnecks = {
    {112, 16, 16, 16, 3, false, 1},  {112, 16, 64, 24, 3, false, 2},
    {56, 24, 72, 24, 3, false, 1},   {56, 24, 72, 40, 5, true, 2},
    {28, 40, 120, 40, 5, true, 1},   {28, 40, 120, 40, 5, true, 1},
    {28, 40, 240, 80, 3, false, 2},  {14, 80, 200, 80, 3, false, 1},
    {14, 80, 184, 80, 3, false, 1},  {14, 80, 184, 80, 3, false, 1},
    {14, 80, 480, 112, 3, true, 1},  {14, 112, 672, 112, 3, true, 1},
    {14, 112, 672, 160, 5, true, 2}, {7, 160, 960, 160, 5, true, 1},
    {7, 160, 960, 160, 5, true, 1},
};

struct Totals {
  std::uint64_t madds = 0;
  std::uint64_t params = 0;
};

void conv(Totals& t, std::uint64_t out_hw, std::uint64_t cin, std::uint64_t cout,
          std::uint64_t k, std::uint64_t groups, bool bn) {
  const std::uint64_t per = k * k * cin / groups;
  t.madds += out_hw * out_hw * cout * per;
  t.params += cout * per + (bn ? 2 * cout : cout);
}

Totals oracle_mobilenetv3() {
  Totals t;
  conv(t, 112, 3, 16, 3, 1, true);
  for (const Row& r : kBnecks) {
    const std::uint64_t out_hw = r.hw / r.stride;
    if (r.exp != r.in) conv(t, r.hw, r.in, r.exp, 1, 1, true);
    conv(t, out_hw, r.exp, r.exp, r.k, r.exp, true);
    if (r.se) {
      const std::uint64_t h = (r.exp + 3) / 4;
      t.madds += 2 * r.exp * h;
      t.params += 2 * r.exp * h + h + r.exp;
    }
    conv(t, out_hw, r.exp, r.out, 1, 1, true);
  }
  conv(t, 7, 160, 960, 1, 1, true);
  conv(t, 1, 960, 1280, 1, 1, false);
  conv(t, 1, 1280, 1000, 1, 1, false);
  return t;
}

TEST(CostTest, FirstConvMatchesHandCount) {
  const CostReport r = analyze(mobilenetv3_large_spec(3, 1000), {224, 224, 3});
  ASSERT_FALSE(r.rows.empty());
  EXPECT_EQ(r.rows[0].madds, 112ull * 112 * 16 * 27);
  EXPECT_EQ(r.rows[0].params, 16ull * 27 + 32);
  EXPECT_EQ(r.rows[0].out_shape(), "16x112x112");
}

TEST(CostTest, MobileNetV3MatchesIndependentOracle) {
  const CostReport r = analyze(mobilenetv3_large_spec(3, 1000), {224, 224, 3});
  const Totals t = oracle_mobilenetv3();
  EXPECT_EQ(r.total_madds, t.madds);
  EXPECT_EQ(r.total_params, t.params);
  EXPECT_GE(r.total_madds, 150'000'000u);
  EXPECT_LE(r.total_madds, 250'000'000u);
}

TEST(CostTest, ResNet50InExpectedBand) {
  const CostReport r = analyze(resnet50_cost_spec(), {224, 224, 3});
  EXPECT_GE(r.total_madds, 3'700'000'000u);
  EXPECT_LE(r.total_madds, 4'500'000'000u);
  std::size_t weighted = 0;
  for (const CostRow& row : r.rows) {
    if (row.kind == CostKind::kConv || row.kind == CostKind::kDense) ++weighted;
  }
  // 49 convs, 4 projection shortcuts, 1 dense.
  EXPECT_EQ(weighted, 54u);
  // Standard ResNet-50 parameter count with BN affine pairs.
  EXPECT_EQ(r.total_params, 25'557'032u);
}

TEST(CostTest, FlopsAreTwiceMAddsRowByRow) {
  const ArchSpec spec = mobilenetv3_large_spec(3, 1000);
  const CostReport m = analyze(spec, {224, 224, 3}, CostConvention::kMAdds);
  const CostReport f = analyze(spec, {224, 224, 3}, CostConvention::kFlops);
  ASSERT_EQ(m.rows.size(), f.rows.size());
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    EXPECT_EQ(f.ops(f.rows[i]), 2 * m.ops(m.rows[i])) << m.rows[i].layer;
  }
  EXPECT_EQ(f.total_ops(), 2 * m.total_ops());
}

TEST(CostTest, DoublingResolutionQuadruplesConvCost) {
  const ArchSpec spec = mobilenetv3_large_spec(3, 1000);
  const CostReport a = analyze(spec, {224, 224, 3});
  const CostReport b = analyze(spec, {448, 448, 3});
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    if (a.rows[i].kind != CostKind::kConv || a.rows[i].out_h == 1) continue;
    EXPECT_EQ(b.rows[i].madds, 4 * a.rows[i].madds) << a.rows[i].layer;
  }
  EXPECT_EQ(a.total_params, b.total_params);
}

TEST(CostTest, CsvReport) {
  const CostReport r = analyze(mobilenetv3_large_spec(3, 1000), {224, 224, 3});
  const std::string csv = render_report(r, ReportFormat::kCsv);
  EXPECT_EQ(csv.rfind("layer,out_shape,params,madds\n", 0), 0u);
  EXPECT_NE(csv.find("total,"), std::string::npos);
  EXPECT_NE(csv.find("," + std::to_string(r.total_madds) + "\n"), std::string::npos);
  std::size_t lines = 0;
  for (char c : csv) lines += c == '\n';
  EXPECT_EQ(lines, r.rows.size() + 2);
  const std::string flops = render_report(
      analyze(mobilenetv3_large_spec(3, 1000), {224, 224, 3}, CostConvention::kFlops),
      ReportFormat::kCsv);
  EXPECT_EQ(flops.rfind("layer,out_shape,params,flops\n", 0), 0u);
}

TEST(CostTest, TableReportShowsTotal) {
  const CostReport r = analyze(mobilenetv3_large_spec(3, 1000), {224, 224, 3});
  const std::string table = render_report(r, ReportFormat::kTable);
  EXPECT_NE(table.find("madds"), std::string::npos);
  EXPECT_NE(table.find("0.217G"), std::string::npos);
}

TEST(CostTest, ParsesInputShapesAndConventions) {
  const InputShape s = parse_input_shape("128x96x1");
  EXPECT_EQ(s.h, 128u);
  EXPECT_EQ(s.w, 96u);
  EXPECT_EQ(s.c, 1u);
  EXPECT_THROW(parse_input_shape("128x96"), Error);
  EXPECT_THROW(parse_input_shape("0x96x1"), Error);
  EXPECT_THROW(parse_input_shape("axbxc"), Error);
  EXPECT_EQ(parse_convention("flops"), CostConvention::kFlops);
  EXPECT_THROW(parse_convention("macs2"), Error);
  EXPECT_THROW(parse_report_format("xml"), Error);
}

TEST(CostTest, InputChannelMismatchRejected) {
  EXPECT_THROW(analyze(mobilenetv3_large_spec(3, 1000), {224, 224, 1}), Error);
}

TEST(LastStageCostTest, DeltaMatchesHandArithmetic) {
  const std::int64_t r = 7 * 7;
  const std::int64_t original = r * 960 * 160 + r * 9 * 960 + r * 960 * 320 +
                                r * 320 * 1280 + 1280 * 1000;
  const std::int64_t efficient = r * 960 * 160 + 960 * 1280 + 1280 * 1000;
  const LastStageComparison cmp = compare_last_stages(1.0, 224);
  EXPECT_EQ(cmp.feature_resolution, 7u);
  EXPECT_EQ(static_cast<std::int64_t>(cmp.original.total_madds), original);
  EXPECT_EQ(static_cast<std::int64_t>(cmp.efficient.total_madds), efficient);
  EXPECT_EQ(cmp.delta_madds, original - efficient);
  EXPECT_EQ(cmp.delta_madds, 34'317'760);
  EXPECT_EQ(cmp.wide_conv_before_pool, 60'211'200u);
  EXPECT_EQ(cmp.wide_conv_after_pool, 1'228'800u);
  EXPECT_DOUBLE_EQ(cmp.relocated_conv_ratio, 49.0);
  EXPECT_EQ(cmp.original.rows.size(), 6u);
  EXPECT_EQ(cmp.efficient.rows.size(), 4u);
}

TEST(LastStageCostTest, RatioIsSpatialArea) {
  const LastStageComparison cmp = compare_last_stages(1.0, 448);
  EXPECT_EQ(cmp.feature_resolution, 14u);
  EXPECT_DOUBLE_EQ(cmp.relocated_conv_ratio, 196.0);
  EXPECT_GT(cmp.delta_madds, 0);
}

TEST(LastStageCostTest, ComparisonRendering) {
  const std::string text = render_comparison(compare_last_stages());
  EXPECT_NE(text.find("relocated conv ratio: 49"), std::string::npos);
  EXPECT_NE(text.find("34317760"), std::string::npos);
}

}  // namespace
}  // namespace lightnet
