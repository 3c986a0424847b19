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

// Chip datasets: directory ingestion, per-class subsampling and preprocessing.
//
// Layout: root/<class_name>/<chip>.pgm with an optional root/manifest.csv
// (header file,class,depression). Classes are the subdirectories of root in
// lexicographic order; samples are ordered lexicographically by path.

#ifndef LIGHTNET_DATA_HPP_
#define LIGHTNET_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lightnet/tensor.hpp"

namespace lightnet {

inline constexpr std::size_t kMinImageExtent = 32;

struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> pixels;  // row-major, values in [0, 1]

  float at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }
};

struct Sample {
  Image image;
  int label = 0;
  std::string class_name;
  std::optional<double> depression_deg;
  std::string source_id;
};

struct DatasetManifest {
  std::vector<std::string> classes;
  std::vector<std::size_t> train_counts;
  std::vector<std::size_t> test_counts;

  std::size_t num_classes() const { return classes.size(); }
};

// Samples whose depression equals test_depression form the test split; all
// others (including samples without metadata) are training samples.
struct SplitRule {
  double test_depression = 15.0;

  bool is_test(const Sample& s) const;
};

struct ChipDataset {
  std::vector<Sample> samples;
  DatasetManifest manifest;

  std::vector<Sample> train(const SplitRule& rule = {}) const;
  std::vector<Sample> test(const SplitRule& rule = {}) const;
};

ChipDataset load_chip_dataset(const std::filesystem::path& root, const SplitRule& rule = {});

// Picks k samples per class uniformly without replacement. Each class draws
// from its own stream derived from (seed, label). Output keeps input order.
std::vector<Sample> subsample_per_class(const std::vector<Sample>& samples, std::size_t k,
                                        std::uint64_t seed);

enum class ChannelMode { kGray1, kReplicate3 };

ChannelMode parse_channel_mode(std::string_view name);
std::size_t channel_count(ChannelMode mode);

// Bilinear resize (pixel-center aligned) to target x target, followed by
// per-image standardization with a std floor of 1e-6. Returns [C, H, W].
Tensor<float> preprocess(const Image& image, std::size_t target_resolution, ChannelMode mode);

Image resize_bilinear(const Image& image, std::size_t out_h, std::size_t out_w);

struct Batch {
  Tensor<float> images;  // [N, C, H, W]
  std::vector<int> labels;
};

Batch make_batch(const std::vector<Sample>& samples, std::span<const std::size_t> indices,
                 std::size_t target_resolution, ChannelMode mode);
Batch make_batch(const std::vector<Sample>& samples, std::size_t target_resolution,
                 ChannelMode mode);

// Number of classes covered by the labels (max label + 1).
std::size_t label_count(const std::vector<Sample>& samples);

}  // namespace lightnet

#endif  // LIGHTNET_DATA_HPP_
