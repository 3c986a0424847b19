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

#include "lightnet/model.hpp"

#include <cstring>

#include "lightnet/error.hpp"
#include "lightnet/random.hpp"

namespace lightnet {

template <typename T>
Model<T>::Model(const ArchSpec& spec, std::uint64_t seed) : spec_(spec) {
  const std::vector<LayerShape> shapes = infer_shapes(spec_);
  require(!spec_.layers.empty(), "architecture '", spec_.name, "' has no layers");
  const LayerShape& last = shapes.back();
  require(last.out_channels * last.out_h * last.out_w == spec_.num_classes, "architecture '",
          spec_.name, "': final layer produces ", last.out_channels, "x", last.out_h, "x",
          last.out_w, " values per sample but num_classes is ", spec_.num_classes);

  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerSpec& l = spec_.layers[i];
    const LayerShape& s = shapes[i];
    const std::string name = "features." + std::to_string(i);
    const Activation act = to_activation(l.nl);
    std::unique_ptr<Module<T>> m;
    switch (l.op) {
      case LayerOp::kConv2d:
      case LayerOp::kDwConv: {
        ConvParams p = ConvParams::square(s.in_channels, l.out, l.kernel, l.stride,
                                          l.op == LayerOp::kDwConv ? s.in_channels : 1);
        p.padding = l.padding();
        m = std::make_unique<ConvUnit<T>>(name, p, l.bn, act);
        break;
      }
      case LayerOp::kBneck: {
        BneckSpec b{s.in_channels, *l.exp, l.out, l.kernel, l.stride, l.se, act};
        m = std::make_unique<Bneck<T>>(name, b);
        break;
      }
      case LayerOp::kPool:
        m = std::make_unique<GlobalAvgPool<T>>();
        break;
      case LayerOp::kMaxPool:
        m = std::make_unique<MaxPool<T>>(l.kernel, l.stride, l.padding());
        break;
      case LayerOp::kDense:
        m = std::make_unique<DenseUnit<T>>(name, s.in_channels * s.in_h * s.in_w, l.out, act);
        break;
      case LayerOp::kResBlock:
        m = std::make_unique<ResidualBottleneck<T>>(name, s.in_channels, *l.exp, l.out, l.kernel,
                                                    l.stride, act);
        break;
    }
    layers_.push_back(std::move(m));
  }

  Rng rng(seed);
  for (auto& m : layers_) m->initialize(rng);
}

template <typename T>
Var Model<T>::forward(Tape<T>& tape, Var input, Mode mode) {
  const Tensor<T>& x = tape.value(input);
  require(x.rank() == 4 && x.dim(1) == spec_.in_channels, "model '", spec_.name,
          "': input must be N x ", spec_.in_channels, " x H x W, got ", shape_to_string(x.dims()));
  Var h = input;
  for (auto& m : layers_) h = m->forward(tape, h, mode);
  const Tensor<T>& out = tape.value(h);
  const std::size_t n = out.dim(0);
  require(out.size() == n * spec_.num_classes, "model '", spec_.name, "': output ",
          shape_to_string(out.dims()), " does not flatten to ", spec_.num_classes,
          " logits per sample (input resolution too large for the head?)");
  return reshape(tape, h, Shape{n, spec_.num_classes});
}

template <typename T>
Tensor<T> Model<T>::predict(const Tensor<T>& batch) {
  Tape<T> tape;
  Var out = forward(tape, tape.leaf(batch), Mode::kEval);
  return tape.value(out);
}

template <typename T>
std::vector<Parameter<T>*> Model<T>::parameters() {
  std::vector<Parameter<T>*> out;
  StateVisitor<T> v;
  v.parameter = [&](Parameter<T>& p) { out.push_back(&p); };
  for (auto& m : layers_) m->visit(v);
  return out;
}

template <typename T>
std::vector<typename Model<T>::StateEntry> Model<T>::state() {
  std::vector<StateEntry> out;
  StateVisitor<T> v;
  v.parameter = [&](Parameter<T>& p) { out.push_back({p.name, &p.value}); };
  v.buffer = [&](const std::string& name, Tensor<T>& t) { out.push_back({name, &t}); };
  for (auto& m : layers_) m->visit(v);
  return out;
}

template <typename T>
std::size_t Model<T>::parameter_count() {
  std::size_t n = 0;
  for (Parameter<T>* p : parameters()) n += p->value.size();
  return n;
}

template <typename T>
std::uint64_t Model<T>::state_hash() {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const StateEntry& e : state()) {
    mix(e.name.data(), e.name.size());
    mix(e.tensor->data(), e.tensor->size() * sizeof(T));
  }
  return h;
}

template <typename T>
void Model<T>::zero_grad() {
  for (Parameter<T>* p : parameters()) p->zero_grad();
}

template class Model<float>;
template class Model<double>;

}  // namespace lightnet
