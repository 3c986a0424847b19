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

#ifndef LIGHTNET_MODEL_HPP_
#define LIGHTNET_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "lightnet/arch.hpp"
#include "lightnet/autograd.hpp"
#include "lightnet/blocks.hpp"

namespace lightnet {

// A materialized network: one Module per ArchSpec row, parameters
// initialized from a seed. The final row must produce num_classes values per
// sample (1x1 spatial or a dense row); forward() returns logits [N,K].
template <typename T>
class Model {
 public:
  Model(const ArchSpec& spec, std::uint64_t seed);

  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  Var forward(Tape<T>& tape, Var input, Mode mode);
  // Eval-mode logits for a batch, without gradient bookkeeping.
  Tensor<T> predict(const Tensor<T>& batch);

  const ArchSpec& spec() const { return spec_; }
  std::size_t num_classes() const { return spec_.num_classes; }
  std::size_t num_layers() const { return layers_.size(); }
  Module<T>& layer(std::size_t i) { return *layers_.at(i); }

  std::vector<Parameter<T>*> parameters();
  // Parameters and buffers, in checkpoint order.
  struct StateEntry {
    std::string name;
    Tensor<T>* tensor;
  };
  std::vector<StateEntry> state();

  std::size_t parameter_count();
  // FNV-1a over every parameter and buffer value (names included).
  std::uint64_t state_hash();
  void zero_grad();

 private:
  ArchSpec spec_;
  std::vector<std::unique_ptr<Module<T>>> layers_;
};

extern template class Model<float>;
extern template class Model<double>;

template <typename T>
Model<T> build_model(const ArchSpec& spec, std::uint64_t seed) {
  return Model<T>(spec, seed);
}

}  // namespace lightnet

#endif  // LIGHTNET_MODEL_HPP_
