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

// Analytic parameter and multiply-accumulate accounting over an ArchSpec.
//
// Counting convention: a convolution costs Hout*Wout*Cout*(Kh*Kw*Cin/groups)
// multiply-accumulates, a dense layer D*K, and a squeeze-and-excitation unit
// 2*C*hidden. Batch norm, activations, pooling, residual adds, SE gating and
// bias adds count as zero. FLOPs are reported as 2 x MAdds.

#ifndef LIGHTNET_COST_HPP_
#define LIGHTNET_COST_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lightnet/arch.hpp"

namespace lightnet {

enum class CostConvention { kMAdds, kFlops };
enum class ReportFormat { kTable, kCsv };

CostConvention parse_convention(std::string_view name);
ReportFormat parse_report_format(std::string_view name);
const char* convention_name(CostConvention c);

struct InputShape {
  std::size_t h = 224;
  std::size_t w = 224;
  std::size_t c = 3;
};

// Parses "HxWxC" (e.g. 224x224x3).
InputShape parse_input_shape(std::string_view text);

enum class CostKind { kConv, kSqueezeExcite, kDense, kPool };

struct CostRow {
  std::string layer;
  CostKind kind = CostKind::kConv;
  std::size_t out_c = 0, out_h = 0, out_w = 0;
  std::uint64_t params = 0;
  std::uint64_t madds = 0;

  std::string out_shape() const;
};

struct CostReport {
  std::string arch_name;
  InputShape input;
  CostConvention convention = CostConvention::kMAdds;
  std::vector<CostRow> rows;
  std::uint64_t total_params = 0;
  std::uint64_t total_madds = 0;

  // Row or total cost in the report's convention.
  std::uint64_t ops(const CostRow& row) const;
  std::uint64_t total_ops() const;
};

CostReport analyze(const ArchSpec& spec, const InputShape& input,
                   CostConvention convention = CostConvention::kMAdds);

struct LastStageComparison {
  CostReport original;
  CostReport efficient;
  std::int64_t delta_madds = 0;
  std::size_t feature_resolution = 0;
  // MAdds of the 1280-wide 1x1 conv (fed by 960 channels) placed before
  // pooling vs after pooling, and their exact ratio.
  std::uint64_t wide_conv_before_pool = 0;
  std::uint64_t wide_conv_after_pool = 0;
  double relocated_conv_ratio = 0.0;
};

LastStageComparison compare_last_stages(double width_multiplier = 1.0,
                                        std::size_t input_resolution = 224);

std::string render_report(const CostReport& report, ReportFormat format);
std::string render_comparison(const LastStageComparison& cmp);

}  // namespace lightnet

#endif  // LIGHTNET_COST_HPP_
