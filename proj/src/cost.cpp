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

#include "lightnet/cost.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "lightnet/blocks.hpp"
#include "lightnet/error.hpp"

namespace lightnet {

CostConvention parse_convention(std::string_view name) {
  if (name == "madds") return CostConvention::kMAdds;
  if (name == "flops") return CostConvention::kFlops;
  fail(ErrorCode::kInvalidArgument, "unknown cost convention '", name, "' (expected madds|flops)");
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "table") return ReportFormat::kTable;
  if (name == "csv") return ReportFormat::kCsv;
  fail(ErrorCode::kInvalidArgument, "unknown report format '", name, "' (expected table|csv)");
}

const char* convention_name(CostConvention c) {
  return c == CostConvention::kMAdds ? "madds" : "flops";
}

InputShape parse_input_shape(std::string_view text) {
  InputShape s;
  std::size_t* fields[] = {&s.h, &s.w, &s.c};
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    const std::size_t end = i < 2 ? text.find('x', pos) : text.size();
    if (end == std::string_view::npos) {
      fail(ErrorCode::kInvalidArgument, "input shape '", text, "' must look like HxWxC");
    }
    const std::string_view part = text.substr(pos, end - pos);
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), *fields[i]);
    if (ec != std::errc() || ptr != part.data() + part.size() || *fields[i] == 0) {
      fail(ErrorCode::kInvalidArgument, "input shape '", text,
           "' must look like HxWxC with positive integers");
    }
    pos = end + 1;
  }
  return s;
}

std::string CostRow::out_shape() const { return detail::concat(out_c, "x", out_h, "x", out_w); }

std::uint64_t CostReport::ops(const CostRow& row) const {
  return convention == CostConvention::kFlops ? 2 * row.madds : row.madds;
}

std::uint64_t CostReport::total_ops() const {
  return convention == CostConvention::kFlops ? 2 * total_madds : total_madds;
}

namespace {

using u64 = std::uint64_t;

CostRow conv_row(const std::string& name, u64 in_c, u64 out_c, u64 kernel, u64 groups, u64 out_h,
                 u64 out_w, bool bn) {
  CostRow r;
  r.layer = name;
  r.kind = CostKind::kConv;
  r.out_c = out_c;
  r.out_h = out_h;
  r.out_w = out_w;
  const u64 per_output = kernel * kernel * (in_c / groups);
  r.params = out_c * per_output + (bn ? 2 * out_c : out_c);
  r.madds = out_h * out_w * out_c * per_output;
  return r;
}

std::size_t extent(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t pad) {
  return (in + 2 * pad - kernel) / stride + 1;
}

}  // namespace

CostReport analyze(const ArchSpec& spec, const InputShape& input, CostConvention convention) {
  require(input.c == spec.in_channels, "input shape has ", input.c, " channels but architecture '",
          spec.name, "' expects ", spec.in_channels);
  const std::vector<LayerShape> shapes = infer_shapes(spec, input.h, input.w, input.c);

  CostReport report;
  report.arch_name = spec.name;
  report.input = input;
  report.convention = convention;

  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const LayerShape& s = shapes[i];
    const std::string base = "features." + std::to_string(i);
    switch (l.op) {
      case LayerOp::kConv2d:
        report.rows.push_back(conv_row(base + ".conv", s.in_channels, l.out, l.kernel, 1, s.out_h,
                                       s.out_w, l.bn));
        break;
      case LayerOp::kDwConv:
        report.rows.push_back(conv_row(base + ".dw", s.in_channels, l.out, l.kernel, s.in_channels,
                                       s.out_h, s.out_w, l.bn));
        break;
      case LayerOp::kBneck: {
        const std::size_t exp = *l.exp;
        if (exp != s.in_channels) {
          report.rows.push_back(
              conv_row(base + ".expand", s.in_channels, exp, 1, 1, s.in_h, s.in_w, true));
        }
        report.rows.push_back(
            conv_row(base + ".dw", exp, exp, l.kernel, exp, s.out_h, s.out_w, true));
        if (l.se) {
          const u64 hidden = SEConfig{exp, 4}.hidden();
          CostRow se;
          se.layer = base + ".se";
          se.kind = CostKind::kSqueezeExcite;
          se.out_c = exp;
          se.out_h = s.out_h;
          se.out_w = s.out_w;
          se.params = exp * hidden + hidden + hidden * exp + exp;
          se.madds = 2 * exp * hidden;
          report.rows.push_back(se);
        }
        report.rows.push_back(
            conv_row(base + ".project", exp, l.out, 1, 1, s.out_h, s.out_w, true));
        break;
      }
      case LayerOp::kPool:
      case LayerOp::kMaxPool: {
        CostRow r;
        r.layer = base + (l.op == LayerOp::kPool ? ".pool" : ".maxpool");
        r.kind = CostKind::kPool;
        r.out_c = s.out_channels;
        r.out_h = s.out_h;
        r.out_w = s.out_w;
        report.rows.push_back(r);
        break;
      }
      case LayerOp::kDense: {
        const u64 d = static_cast<u64>(s.in_channels) * s.in_h * s.in_w;
        CostRow r;
        r.layer = base + ".dense";
        r.kind = CostKind::kDense;
        r.out_c = l.out;
        r.out_h = r.out_w = 1;
        r.params = d * l.out + l.out;
        r.madds = d * l.out;
        report.rows.push_back(r);
        break;
      }
      case LayerOp::kResBlock: {
        const std::size_t mid = *l.exp;
        report.rows.push_back(
            conv_row(base + ".conv1", s.in_channels, mid, 1, 1, s.in_h, s.in_w, true));
        report.rows.push_back(conv_row(base + ".conv2", mid, mid, l.kernel, 1, s.out_h, s.out_w, true));
        report.rows.push_back(conv_row(base + ".conv3", mid, l.out, 1, 1, s.out_h, s.out_w, true));
        if (l.stride != 1 || s.in_channels != l.out) {
          report.rows.push_back(conv_row(base + ".downsample", s.in_channels, l.out, 1, 1,
                                         extent(s.in_h, 1, l.stride, 0),
                                         extent(s.in_w, 1, l.stride, 0), true));
        }
        break;
      }
    }
  }
  for (const CostRow& r : report.rows) {
    report.total_params += r.params;
    report.total_madds += r.madds;
  }
  return report;
}

LastStageComparison compare_last_stages(double width_multiplier, std::size_t input_resolution) {
  const ArchSpec full = mobilenetv3_large_spec(3, 1000, width_multiplier);
  const std::vector<LayerShape> shapes = infer_shapes(full, input_resolution, input_resolution, 3);
  // Row 15 is the last bneck; its output feeds the classifier head.
  const LayerShape& features = shapes.at(15);
  require(features.out_h == features.out_w, "compare_last_stages: non-square feature map");

  LastStageComparison cmp;
  cmp.feature_resolution = features.out_h;
  const ArchSpec original =
      original_last_stage_cost_graph(width_multiplier, features.out_h, full.num_classes);
  const ArchSpec efficient =
      efficient_last_stage_cost_graph(width_multiplier, features.out_h, full.num_classes);
  const InputShape in{features.out_h, features.out_w, features.out_channels};
  cmp.original = analyze(original, in);
  cmp.efficient = analyze(efficient, in);
  cmp.delta_madds = static_cast<std::int64_t>(cmp.original.total_madds) -
                    static_cast<std::int64_t>(cmp.efficient.total_madds);

  const u64 head = scale_channels(960, width_multiplier);
  const u64 wide = scale_channels(1280, width_multiplier);
  cmp.wide_conv_before_pool = static_cast<u64>(features.out_h) * features.out_w * wide * head;
  cmp.wide_conv_after_pool = wide * head;
  cmp.relocated_conv_ratio = static_cast<double>(cmp.wide_conv_before_pool) /
                             static_cast<double>(cmp.wide_conv_after_pool);
  return cmp;
}

namespace {

std::string giga(u64 v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3fG", static_cast<double>(v) / 1e9);
  return buf;
}

std::string mega(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3fM", v / 1e6);
  return buf;
}

}  // namespace

std::string render_report(const CostReport& report, ReportFormat format) {
  std::ostringstream os;
  const char* unit = convention_name(report.convention);
  if (format == ReportFormat::kCsv) {
    os << "layer,out_shape,params," << unit << "\n";
    for (const CostRow& r : report.rows) {
      os << r.layer << ',' << r.out_shape() << ',' << r.params << ',' << report.ops(r) << "\n";
    }
    if (!report.rows.empty()) {
      os << "total,," << report.total_params << ',' << report.total_ops() << "\n";
    }
    return os.str();
  }

  os << "architecture: " << report.arch_name << "  input: " << report.input.h << 'x'
     << report.input.w << 'x' << report.input.c << "\n";
  os << "convention: " << unit
     << (report.convention == CostConvention::kMAdds ? " (multiply-accumulates" : " (2 x multiply-accumulates")
     << "; batch norm, activations, pooling and bias adds count as 0)\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-28s %-14s %12s %14s\n", "layer", "out_shape", "params", unit);
  os << line;
  for (const CostRow& r : report.rows) {
    std::snprintf(line, sizeof line, "%-28s %-14s %12llu %14llu\n", r.layer.c_str(),
                  r.out_shape().c_str(), static_cast<unsigned long long>(r.params),
                  static_cast<unsigned long long>(report.ops(r)));
    os << line;
  }
  if (!report.rows.empty()) {
    std::snprintf(line, sizeof line, "%-28s %-14s %12llu %14llu\n", "total", "",
                  static_cast<unsigned long long>(report.total_params),
                  static_cast<unsigned long long>(report.total_ops()));
    os << line;
    os << "total " << unit << ": " << giga(report.total_ops()) << "  params: "
       << mega(static_cast<double>(report.total_params)) << "\n";
  }
  return os.str();
}

std::string render_comparison(const LastStageComparison& cmp) {
  std::ostringstream os;
  os << "last stage comparison (feature map " << cmp.feature_resolution << 'x'
     << cmp.feature_resolution << ")\n";
  os << "original madds: " << cmp.original.total_madds << "\n";
  os << "efficient madds: " << cmp.efficient.total_madds << "\n";
  os << "delta madds: " << cmp.delta_madds << " (" << mega(static_cast<double>(cmp.delta_madds))
     << ")\n";
  os << "wide conv madds before pool: " << cmp.wide_conv_before_pool << "\n";
  os << "wide conv madds after pool: " << cmp.wide_conv_after_pool << "\n";
  char ratio[32];
  std::snprintf(ratio, sizeof ratio, "%g", cmp.relocated_conv_ratio);
  os << "relocated conv ratio: " << ratio << "\n";
  return os.str();
}

}  // namespace lightnet
