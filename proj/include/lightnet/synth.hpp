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

// Deterministic SAR-like chip generator.
//
// Every class is a fixed layout of 5-9 point scatterers. A sample renders the
// layout rotated by a random azimuth in [0, 360) degrees and shifted by at
// most 2 pixels per axis, as Gaussian blobs (sigma = resolution / 40)
// multiplied by unit-mean exponential speckle and clipped to [0, 1]. Pixels
// are quantized to 8 bits so in-memory samples match the files on disk.

#ifndef LIGHTNET_SYNTH_HPP_
#define LIGHTNET_SYNTH_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "lightnet/data.hpp"

namespace lightnet {

struct SynthConfig {
  std::size_t num_classes = 10;
  std::size_t per_class_train = 100;
  std::size_t per_class_test = 50;
  std::size_t resolution = 64;
  std::uint64_t seed = 0;

  void validate() const;
};

inline constexpr double kSynthTrainDepression = 17.0;
inline constexpr double kSynthTestDepression = 15.0;
inline constexpr double kSynthMaxJitter = 2.0;

struct Scatterer {
  double x = 0.0;  // offset from the chip center, pixels
  double y = 0.0;
  double amplitude = 1.0;
};

struct SynthDataset {
  std::vector<Sample> train;
  std::vector<Sample> test;
  DatasetManifest manifest;
};

std::vector<std::vector<Scatterer>> synth_class_layouts(const SynthConfig& config);

std::string synth_class_name(std::size_t label, std::size_t num_classes);

SynthDataset synth_sar_generate(const SynthConfig& config);

// Writes root/<class>/{train,test}_NNNN.pgm and root/manifest.csv.
void write_chip_dataset(const SynthDataset& dataset, const std::filesystem::path& root);

}  // namespace lightnet

#endif  // LIGHTNET_SYNTH_HPP_
