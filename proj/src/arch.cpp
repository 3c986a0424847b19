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

#include "lightnet/arch.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lightnet/error.hpp"

namespace lightnet {

namespace {

using Json = nlohmann::ordered_json;

std::string layer_label(const ArchSpec& spec, std::size_t index) {
  return detail::concat("layer ", index, " (", layer_op_name(spec.layers[index].op), ")");
}

std::size_t conv_extent(std::size_t extent, std::size_t kernel, std::size_t stride,
                        std::size_t pad, const std::string& where) {
  require(extent + 2 * pad >= kernel, where, ": kernel ", kernel, " does not fit input extent ",
          extent, " with padding ", pad);
  return (extent + 2 * pad - kernel) / stride + 1;
}

}  // namespace

const char* layer_op_name(LayerOp op) {
  switch (op) {
    case LayerOp::kConv2d:
      return "conv2d";
    case LayerOp::kDwConv:
      return "dwconv";
    case LayerOp::kBneck:
      return "bneck";
    case LayerOp::kPool:
      return "pool";
    case LayerOp::kMaxPool:
      return "maxpool";
    case LayerOp::kDense:
      return "dense";
    case LayerOp::kResBlock:
      return "resblock";
  }
  return "?";
}

LayerOp parse_layer_op(std::string_view name) {
  if (name == "conv2d") return LayerOp::kConv2d;
  if (name == "dwconv") return LayerOp::kDwConv;
  if (name == "bneck") return LayerOp::kBneck;
  if (name == "pool") return LayerOp::kPool;
  if (name == "maxpool") return LayerOp::kMaxPool;
  if (name == "dense") return LayerOp::kDense;
  if (name == "resblock") return LayerOp::kResBlock;
  fail(ErrorCode::kInvalidArgument, "unknown op '", name, "'");
}

const char* nonlinearity_name(Nonlinearity nl) {
  switch (nl) {
    case Nonlinearity::kNone:
      return "none";
    case Nonlinearity::kRelu:
      return "relu";
    case Nonlinearity::kHardSwish:
      return "h_swish";
  }
  return "?";
}

Nonlinearity parse_nonlinearity(std::string_view name) {
  if (name == "none") return Nonlinearity::kNone;
  if (name == "relu") return Nonlinearity::kRelu;
  if (name == "h_swish") return Nonlinearity::kHardSwish;
  fail(ErrorCode::kInvalidArgument, "unknown nonlinearity '", name, "'");
}

std::vector<LayerShape> infer_shapes(const ArchSpec& spec, std::size_t h, std::size_t w,
                                     std::size_t in_channels) {
  require(in_channels > 0, "architecture '", spec.name, "': in_channels must be positive");
  require(h > 0 && w > 0, "architecture '", spec.name, "': input extent must be positive");
  std::vector<LayerShape> shapes;
  shapes.reserve(spec.layers.size());
  std::size_t c = in_channels;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const std::string where = layer_label(spec, i);
    const std::string producer =
        i == 0 ? std::string("the network input") : layer_label(spec, i - 1);
    LayerShape s{c, h, w, 0, 0, 0};

    require(l.stride > 0, where, ": stride must be positive");
    require(l.op == LayerOp::kBneck || !l.se, where, ": se is only valid on bneck rows");
    require(l.op == LayerOp::kBneck || l.op == LayerOp::kResBlock || !l.exp.has_value(), where,
            ": exp is only valid on bneck and resblock rows");

    auto require_same_channels = [&]() {
      require(l.out == c, "channel mismatch: ", where, " declares out=", l.out, " but ", producer,
              " produces ", c, " channels");
    };

    switch (l.op) {
      case LayerOp::kConv2d:
      case LayerOp::kDwConv: {
        require(l.kernel > 0, where, ": kernel must be positive");
        require(l.out > 0, where, ": out must be positive");
        if (l.op == LayerOp::kDwConv) require_same_channels();
        s.out_channels = l.out;
        s.out_h = conv_extent(h, l.kernel, l.stride, l.padding(), where);
        s.out_w = conv_extent(w, l.kernel, l.stride, l.padding(), where);
        break;
      }
      case LayerOp::kBneck: {
        require(l.kernel == 3 || l.kernel == 5, where, ": bneck kernel must be 3 or 5, got ",
                l.kernel);
        require(l.stride == 1 || l.stride == 2, where, ": bneck stride must be 1 or 2, got ",
                l.stride);
        require(l.exp.has_value() && *l.exp > 0, where, ": bneck requires a positive exp width");
        require(l.out > 0, where, ": out must be positive");
        require(l.nl != Nonlinearity::kNone, where, ": bneck nonlinearity must be relu or h_swish");
        require(l.bn, where, ": bneck always uses batch normalization");
        s.out_channels = l.out;
        s.out_h = conv_extent(h, l.kernel, l.stride, l.padding(), where);
        s.out_w = conv_extent(w, l.kernel, l.stride, l.padding(), where);
        break;
      }
      case LayerOp::kPool: {
        require(l.stride == 1, where, ": global pool stride must be 1");
        require(l.nl == Nonlinearity::kNone && !l.bn, where,
                ": pool rows take no nonlinearity or batch norm");
        require_same_channels();
        s.out_channels = c;
        s.out_h = s.out_w = 1;
        break;
      }
      case LayerOp::kMaxPool: {
        require(l.kernel > 0, where, ": kernel must be positive");
        require(l.padding() < l.kernel, where, ": padding must be smaller than the kernel");
        require(l.nl == Nonlinearity::kNone && !l.bn, where,
                ": maxpool rows take no nonlinearity or batch norm");
        require_same_channels();
        s.out_channels = c;
        s.out_h = conv_extent(h, l.kernel, l.stride, l.padding(), where);
        s.out_w = conv_extent(w, l.kernel, l.stride, l.padding(), where);
        break;
      }
      case LayerOp::kDense: {
        require(l.out > 0, where, ": out must be positive");
        require(l.stride == 1, where, ": dense stride must be 1");
        require(!l.bn, where, ": dense rows take no batch norm");
        s.out_channels = l.out;
        s.out_h = s.out_w = 1;
        break;
      }
      case LayerOp::kResBlock: {
        require(l.kernel > 0, where, ": kernel must be positive");
        require(l.exp.has_value() && *l.exp > 0, where,
                ": resblock requires a positive exp (bottleneck) width");
        require(l.out > 0, where, ": out must be positive");
        require(l.bn, where, ": resblock always uses batch normalization");
        s.out_channels = l.out;
        s.out_h = conv_extent(h, l.kernel, l.stride, l.padding(), where);
        s.out_w = conv_extent(w, l.kernel, l.stride, l.padding(), where);
        break;
      }
    }
    shapes.push_back(s);
    c = s.out_channels;
    h = s.out_h;
    w = s.out_w;
  }
  return shapes;
}

std::vector<LayerShape> infer_shapes(const ArchSpec& spec) {
  return infer_shapes(spec, spec.input_resolution, spec.input_resolution, spec.in_channels);
}

std::size_t scale_channels(std::size_t channels, double multiplier) {
  require(multiplier > 0.0 && std::isfinite(multiplier), "width multiplier must be positive, got ",
          multiplier);
  const double scaled = static_cast<double>(channels) * multiplier;
  // Small epsilon keeps exact products (e.g. 16 * 0.5) from rounding up.
  const auto units = static_cast<std::size_t>(std::ceil(scaled / 8.0 - 1e-9));
  return std::max<std::size_t>(8, units * 8);
}

namespace {

LayerSpec conv_row(std::size_t kernel, std::size_t stride, std::size_t out, Nonlinearity nl,
                   bool bn) {
  LayerSpec l;
  l.op = LayerOp::kConv2d;
  l.kernel = kernel;
  l.stride = stride;
  l.out = out;
  l.nl = nl;
  l.bn = bn;
  return l;
}

LayerSpec bneck_row(std::size_t kernel, std::size_t exp, std::size_t out, bool se, Nonlinearity nl,
                    std::size_t stride) {
  LayerSpec l;
  l.op = LayerOp::kBneck;
  l.kernel = kernel;
  l.stride = stride;
  l.se = se;
  l.nl = nl;
  l.exp = exp;
  l.out = out;
  l.bn = true;
  return l;
}

LayerSpec pool_row(std::size_t channels) {
  LayerSpec l;
  l.op = LayerOp::kPool;
  l.kernel = 0;
  l.stride = 1;
  l.out = channels;
  l.bn = false;
  return l;
}

}  // namespace

ArchSpec mobilenetv3_large_spec(std::size_t in_channels, std::size_t num_classes,
                                double width_multiplier) {
  require(in_channels == 1 || in_channels == 3, "mobilenetv3-large: in_channels must be 1 or 3, got ",
          in_channels);
  require(num_classes >= 2, "mobilenetv3-large: num_classes must be at least 2, got ", num_classes);
  require(width_multiplier > 0.0, "mobilenetv3-large: width multiplier must be positive, got ",
          width_multiplier);

  constexpr Nonlinearity RE = Nonlinearity::kRelu;
  constexpr Nonlinearity HS = Nonlinearity::kHardSwish;
  struct Row {
    std::size_t kernel, exp, out;
    bool se;
    Nonlinearity nl;
    std::size_t stride;
  };
  static constexpr Row kBnecks[] = {
      {3, 16, 16, false, RE, 1},    {3, 64, 24, false, RE, 2},    {3, 72, 24, false, RE, 1},
      {5, 72, 40, true, RE, 2},     {5, 120, 40, true, RE, 1},    {5, 120, 40, true, RE, 1},
      {3, 240, 80, false, HS, 2},   {3, 200, 80, false, HS, 1},   {3, 184, 80, false, HS, 1},
      {3, 184, 80, false, HS, 1},   {3, 480, 112, true, HS, 1},   {3, 672, 112, true, HS, 1},
      {5, 672, 160, true, HS, 2},   {5, 960, 160, true, HS, 1},   {5, 960, 160, true, HS, 1},
  };

  auto scale = [&](std::size_t c) { return scale_channels(c, width_multiplier); };

  ArchSpec spec;
  spec.name = "mobilenetv3-large";
  spec.in_channels = in_channels;
  spec.input_resolution = 224;
  spec.width_multiplier = width_multiplier;
  spec.num_classes = num_classes;
  spec.layers.push_back(conv_row(3, 2, scale(16), HS, true));
  for (const Row& r : kBnecks) {
    spec.layers.push_back(bneck_row(r.kernel, scale(r.exp), scale(r.out), r.se, r.nl, r.stride));
  }
  const std::size_t head = scale(960);
  spec.layers.push_back(conv_row(1, 1, head, HS, true));
  spec.layers.push_back(pool_row(head));
  spec.layers.push_back(conv_row(1, 1, scale(1280), HS, false));
  spec.layers.push_back(conv_row(1, 1, num_classes, Nonlinearity::kNone, false));
  return spec;
}

ArchSpec resnet50_cost_spec() {
  ArchSpec spec;
  spec.name = "resnet50";
  spec.in_channels = 3;
  spec.input_resolution = 224;
  spec.width_multiplier = 1.0;
  spec.num_classes = 1000;
  spec.layers.push_back(conv_row(7, 2, 64, Nonlinearity::kRelu, true));
  LayerSpec maxpool;
  maxpool.op = LayerOp::kMaxPool;
  maxpool.kernel = 3;
  maxpool.stride = 2;
  maxpool.out = 64;
  maxpool.bn = false;
  spec.layers.push_back(maxpool);

  struct Stage {
    std::size_t blocks, mid, out, stride;
  };
  static constexpr Stage kStages[] = {{3, 64, 256, 1}, {4, 128, 512, 2}, {6, 256, 1024, 2},
                                      {3, 512, 2048, 2}};
  for (const Stage& st : kStages) {
    for (std::size_t b = 0; b < st.blocks; ++b) {
      LayerSpec l;
      l.op = LayerOp::kResBlock;
      l.kernel = 3;
      l.stride = b == 0 ? st.stride : 1;
      l.exp = st.mid;
      l.out = st.out;
      l.nl = Nonlinearity::kRelu;
      l.bn = true;
      spec.layers.push_back(l);
    }
  }
  spec.layers.push_back(pool_row(2048));
  LayerSpec fc;
  fc.op = LayerOp::kDense;
  fc.kernel = 1;
  fc.stride = 1;
  fc.out = 1000;
  fc.bn = false;
  spec.layers.push_back(fc);
  return spec;
}

ArchSpec builtin_arch(std::string_view name, std::size_t in_channels, std::size_t num_classes,
                      double width_multiplier) {
  if (name.starts_with("builtin:")) name.remove_prefix(8);
  if (name == "mobilenetv3-large") {
    return mobilenetv3_large_spec(in_channels, num_classes, width_multiplier);
  }
  if (name == "resnet50") return resnet50_cost_spec();
  fail(ErrorCode::kInvalidArgument, "unknown builtin architecture '", name,
       "' (expected mobilenetv3-large or resnet50)");
}

// ---------------------------------------------------------------------------
// JSON

namespace {

const std::set<std::string> kTopFields = {"name",           "in_channels", "input_resolution",
                                          "num_classes",    "width_multiplier", "layers"};
const std::set<std::string> kLayerFields = {"op", "kernel", "stride", "se", "nl",
                                            "exp", "out",   "bn",     "pad"};

const Json& field(const Json& obj, const std::string& key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(ErrorCode::kInvalidArgument, path, ": missing field '", key, "'");
  return *it;
}

std::size_t as_count(const Json& v, const std::string& path) {
  if (!v.is_number_integer()) {
    fail(ErrorCode::kInvalidArgument, path, ": expected a non-negative integer, got ", v.dump());
  }
  const auto x = v.get<long long>();
  require(x >= 0, path, ": expected a non-negative integer, got ", x);
  return static_cast<std::size_t>(x);
}

bool as_bool(const Json& v, const std::string& path) {
  if (!v.is_boolean()) fail(ErrorCode::kInvalidArgument, path, ": expected true/false, got ", v.dump());
  return v.get<bool>();
}

std::string as_string(const Json& v, const std::string& path) {
  if (!v.is_string()) fail(ErrorCode::kInvalidArgument, path, ": expected a string, got ", v.dump());
  return v.get<std::string>();
}

void reject_unknown(const Json& obj, const std::set<std::string>& allowed, const std::string& path) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.contains(it.key())) {
      fail(ErrorCode::kInvalidArgument, path, ": unknown field '", it.key(), "'");
    }
  }
}

LayerSpec parse_layer(const Json& obj, const std::string& path) {
  if (!obj.is_object()) fail(ErrorCode::kInvalidArgument, path, ": expected an object");
  reject_unknown(obj, kLayerFields, path);
  LayerSpec l;
  try {
    l.op = parse_layer_op(as_string(field(obj, "op", path), path + ".op"));
    l.nl = parse_nonlinearity(as_string(field(obj, "nl", path), path + ".nl"));
  } catch (const Error& e) {
    fail(ErrorCode::kInvalidArgument, path, ": ", e.what());
  }
  l.kernel = as_count(field(obj, "kernel", path), path + ".kernel");
  l.stride = as_count(field(obj, "stride", path), path + ".stride");
  require(l.stride > 0, path, ".stride: must be positive");
  l.se = as_bool(field(obj, "se", path), path + ".se");
  const Json& exp = field(obj, "exp", path);
  if (!exp.is_null()) l.exp = as_count(exp, path + ".exp");
  l.out = as_count(field(obj, "out", path), path + ".out");
  l.bn = as_bool(field(obj, "bn", path), path + ".bn");
  if (auto it = obj.find("pad"); it != obj.end() && !it->is_null()) {
    l.pad = as_count(*it, path + ".pad");
  }
  return l;
}

}  // namespace

ArchSpec parse_arch_json(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kInvalidArgument, "architecture JSON syntax error: ", e.what());
  }
  if (!doc.is_object()) fail(ErrorCode::kInvalidArgument, "architecture: top level must be an object");
  reject_unknown(doc, kTopFields, "architecture");

  ArchSpec spec;
  spec.name = as_string(field(doc, "name", "architecture"), "name");
  spec.in_channels = as_count(field(doc, "in_channels", "architecture"), "in_channels");
  spec.input_resolution = as_count(field(doc, "input_resolution", "architecture"), "input_resolution");
  spec.num_classes = as_count(field(doc, "num_classes", "architecture"), "num_classes");
  const Json& wm = field(doc, "width_multiplier", "architecture");
  if (!wm.is_number()) fail(ErrorCode::kInvalidArgument, "width_multiplier: expected a number");
  spec.width_multiplier = wm.get<double>();
  require(spec.width_multiplier > 0.0, "width_multiplier: must be positive");
  require(spec.in_channels > 0, "in_channels: must be positive");
  require(spec.input_resolution > 0, "input_resolution: must be positive");
  require(spec.num_classes > 0, "num_classes: must be positive");

  const Json& layers = field(doc, "layers", "architecture");
  if (!layers.is_array()) fail(ErrorCode::kInvalidArgument, "layers: expected an array");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    spec.layers.push_back(parse_layer(layers[i], detail::concat("layers[", i, "]")));
  }
  infer_shapes(spec);
  return spec;
}

ArchSpec parse_arch_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kInvalidArgument, "cannot open architecture file '", path, "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_arch_json(buf.str());
  } catch (const Error& e) {
    fail(e.code(), path, ": ", e.what());
  }
}

std::string arch_to_json(const ArchSpec& spec) {
  Json doc;
  doc["name"] = spec.name;
  doc["in_channels"] = spec.in_channels;
  doc["input_resolution"] = spec.input_resolution;
  doc["num_classes"] = spec.num_classes;
  doc["width_multiplier"] = spec.width_multiplier;
  Json layers = Json::array();
  for (const LayerSpec& l : spec.layers) {
    Json row;
    row["op"] = layer_op_name(l.op);
    row["kernel"] = l.kernel;
    row["stride"] = l.stride;
    row["se"] = l.se;
    row["nl"] = nonlinearity_name(l.nl);
    row["exp"] = l.exp.has_value() ? Json(*l.exp) : Json(nullptr);
    row["out"] = l.out;
    row["bn"] = l.bn;
    if (l.pad.has_value()) row["pad"] = *l.pad;
    layers.push_back(std::move(row));
  }
  doc["layers"] = std::move(layers);
  return doc.dump(2) + "\n";
}

void write_arch_file(const ArchSpec& spec, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write architecture file '", path, "'");
  out << arch_to_json(spec);
  if (!out) fail(ErrorCode::kIo, "write failed for '", path, "'");
}

std::vector<std::string> arch_table_rows(const ArchSpec& spec) {
  const std::vector<LayerShape> shapes = infer_shapes(spec);
  std::vector<std::string> rows;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    std::string op;
    const std::string k = detail::concat(l.kernel, "×", l.kernel);
    switch (l.op) {
      case LayerOp::kConv2d:
        op = l.kernel == 1 ? "conv2d, 1×1" : "conv2d";
        if (!l.bn) op += ", NBN";
        break;
      case LayerOp::kDwConv:
        op = "dwconv, " + k;
        break;
      case LayerOp::kBneck:
        op = "bneck, " + k + " dw";
        break;
      case LayerOp::kPool:
        op = detail::concat("pool, ", shapes[i].in_h, "×", shapes[i].in_w);
        break;
      case LayerOp::kMaxPool:
        op = "maxpool, " + k;
        break;
      case LayerOp::kDense:
        op = "dense";
        break;
      case LayerOp::kResBlock:
        op = "resblock, " + k;
        break;
    }
    const char* nl = l.nl == Nonlinearity::kRelu        ? "ReLU"
                     : l.nl == Nonlinearity::kHardSwish ? "h-swish"
                                                        : "-";
    rows.push_back(detail::concat(op, " | ", l.se ? "✓" : "-", " | ", nl, " | ", l.stride));
  }
  return rows;
}

}  // namespace lightnet
