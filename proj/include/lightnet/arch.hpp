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

// Declarative architecture descriptions. An ArchSpec is a plain value: an
// ordered list of LayerSpec rows plus input geometry. It is consumed by the
// model builder (model.hpp) and by the cost analyzer (cost.hpp).

#ifndef LIGHTNET_ARCH_HPP_
#define LIGHTNET_ARCH_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lightnet {

enum class LayerOp {
  kConv2d,    // dense convolution (+ optional BN) + nonlinearity
  kDwConv,    // depthwise convolution (+ optional BN) + nonlinearity; out == in
  kBneck,     // inverted residual block with optional SE
  kPool,      // global average pool
  kMaxPool,   // windowed max pool
  kDense,     // fully connected on the flattened input
  kResBlock,  // 1x1 -> kxk -> 1x1 residual bottleneck with projection shortcut
};

enum class Nonlinearity { kNone, kRelu, kHardSwish };

const char* layer_op_name(LayerOp op);
LayerOp parse_layer_op(std::string_view name);
const char* nonlinearity_name(Nonlinearity nl);
Nonlinearity parse_nonlinearity(std::string_view name);

struct LayerSpec {
  LayerOp op = LayerOp::kConv2d;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  bool se = false;
  Nonlinearity nl = Nonlinearity::kNone;
  std::optional<std::size_t> exp;  // bneck expansion / resblock bottleneck width
  std::size_t out = 0;
  bool bn = true;
  std::optional<std::size_t> pad;  // defaults to (kernel - 1) / 2

  std::size_t padding() const { return pad.value_or(kernel > 0 ? (kernel - 1) / 2 : 0); }
  bool operator==(const LayerSpec&) const = default;
};

struct ArchSpec {
  std::string name;
  std::size_t in_channels = 3;
  std::size_t input_resolution = 224;
  double width_multiplier = 1.0;
  std::size_t num_classes = 1000;
  std::vector<LayerSpec> layers;

  bool operator==(const ArchSpec&) const = default;
};

// Per-layer geometry produced by shape inference (batch dimension omitted).
struct LayerShape {
  std::size_t in_channels = 0;
  std::size_t in_h = 0;
  std::size_t in_w = 0;
  std::size_t out_channels = 0;
  std::size_t out_h = 0;
  std::size_t out_w = 0;
};

// Validates every row and the channel chaining between consecutive rows for
// an input of in_channels x h x w. Errors name the offending layer(s).
std::vector<LayerShape> infer_shapes(const ArchSpec& spec, std::size_t h, std::size_t w,
                                     std::size_t in_channels);
std::vector<LayerShape> infer_shapes(const ArchSpec& spec);

// Channel scaling rule: ceil(c * multiplier / 8) * 8, minimum 8.
std::size_t scale_channels(std::size_t channels, double multiplier);

// MobileNetV3-Large: 20 rows (stem conv, 15 bnecks, 1x1 conv, pool, two NBN 1x1 convs).
ArchSpec mobilenetv3_large_spec(std::size_t in_channels = 1, std::size_t num_classes = 10,
                                double width_multiplier = 1.0);

// ResNet-50 cost graph at 224x224x3 with 1000 classes.
ArchSpec resnet50_cost_spec();

// Looks up "mobilenetv3-large" / "resnet50" (with or without a "builtin:" prefix).
ArchSpec builtin_arch(std::string_view name, std::size_t in_channels, std::size_t num_classes,
                      double width_multiplier);

// JSON architecture documents. Unknown fields are rejected; errors name the
// JSON path (for example layers[3].stride).
ArchSpec parse_arch_json(std::string_view text);
ArchSpec parse_arch_file(const std::string& path);
std::string arch_to_json(const ArchSpec& spec);
void write_arch_file(const ArchSpec& spec, const std::string& path);

// One "operator | SE | nonlinearity | stride" line per row, using the
// labels of the standard MobileNetV3 layer table (e.g. "bneck, 5×5 dw").
std::vector<std::string> arch_table_rows(const ArchSpec& spec);

}  // namespace lightnet

#endif  // LIGHTNET_ARCH_HPP_
