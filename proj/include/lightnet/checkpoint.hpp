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

// Portable checkpoints.
//
// Layout (little-endian): "LWN1", u32 version (1), u32 tensor count, then per
// tensor: u16 name length, name bytes, u8 rank, u32 dims[rank], f32 values.
// Trailing bytes are rejected.

#ifndef LIGHTNET_CHECKPOINT_HPP_
#define LIGHTNET_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lightnet/arch.hpp"
#include "lightnet/model.hpp"
#include "lightnet/tensor.hpp"

namespace lightnet {

inline constexpr char kCheckpointMagic[4] = {'L', 'W', 'N', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor<float> tensor;
};

std::string encode_checkpoint(const std::vector<NamedTensor>& tensors);
// Throws Error(kFormat) with the byte offset of the first problem.
std::vector<NamedTensor> decode_checkpoint(const std::string& bytes);

template <typename T>
std::string encode_checkpoint(Model<T>& model);

template <typename T>
void save_checkpoint(Model<T>& model, const std::filesystem::path& path);

// Builds a model from `spec` and fills it from the checkpoint. Every tensor
// must match by name, order and shape; nothing is returned on failure.
template <typename T>
Model<T> load_checkpoint(const ArchSpec& spec, const std::filesystem::path& path);

template <typename T>
Model<T> model_from_checkpoint(const ArchSpec& spec, const std::vector<NamedTensor>& tensors);

std::string read_file(const std::filesystem::path& path);
// Writes atomically through a temporary sibling file.
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace lightnet

#endif  // LIGHTNET_CHECKPOINT_HPP_
