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

#include "lightnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "lightnet/error.hpp"
#include "lightnet/pgm.hpp"
#include "lightnet/random.hpp"

namespace fs = std::filesystem;

namespace lightnet {

void SynthConfig::validate() const {
  require(num_classes >= 2, "synthetic data needs at least 2 classes, got ", num_classes);
  require(per_class_train >= 1, "per_class_train must be >= 1");
  require(resolution >= kMinImageExtent, "resolution must be >= ", kMinImageExtent, ", got ",
          resolution);
  require(resolution <= 4096, "resolution must be <= 4096, got ", resolution);
}

std::vector<std::vector<Scatterer>> synth_class_layouts(const SynthConfig& config) {
  config.validate();
  const double radius = 0.3 * static_cast<double>(config.resolution);
  std::vector<std::vector<Scatterer>> layouts(config.num_classes);
  for (std::size_t c = 0; c < config.num_classes; ++c) {
    Rng rng(mix_seed(config.seed, 0x1a7047, c));
    const std::size_t count = 5 + static_cast<std::size_t>(rng.below(5));
    for (std::size_t i = 0; i < count; ++i) {
      // Uniform over the disc.
      const double r = radius * std::sqrt(rng.uniform());
      const double phi = 2.0 * std::numbers::pi * rng.uniform();
      layouts[c].push_back({r * std::cos(phi), r * std::sin(phi), rng.uniform(0.6, 1.0)});
    }
  }
  return layouts;
}

std::string synth_class_name(std::size_t label, std::size_t num_classes) {
  std::size_t digits = 2;
  for (std::size_t n = num_classes - 1; n >= 100; n /= 10) ++digits;
  std::string idx = std::to_string(label);
  return "class_" + std::string(digits > idx.size() ? digits - idx.size() : 0, '0') + idx;
}

namespace {

Image render(const std::vector<Scatterer>& layout, std::size_t res, Rng& rng) {
  const double azimuth = 2.0 * std::numbers::pi * rng.uniform();
  const double dx = rng.uniform(-kSynthMaxJitter, kSynthMaxJitter);
  const double dy = rng.uniform(-kSynthMaxJitter, kSynthMaxJitter);
  const double ca = std::cos(azimuth);
  const double sa = std::sin(azimuth);
  const double center = 0.5 * static_cast<double>(res - 1);
  const double sigma = static_cast<double>(res) / 40.0;
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
  const int reach = static_cast<int>(std::ceil(4.0 * sigma));

  std::vector<double> field(res * res, 0.0);
  for (const Scatterer& s : layout) {
    const double px = center + dx + ca * s.x - sa * s.y;
    const double py = center + dy + sa * s.x + ca * s.y;
    const int cx = static_cast<int>(std::lround(px));
    const int cy = static_cast<int>(std::lround(py));
    for (int y = std::max(0, cy - reach); y <= std::min(static_cast<int>(res) - 1, cy + reach); ++y) {
      for (int x = std::max(0, cx - reach); x <= std::min(static_cast<int>(res) - 1, cx + reach);
           ++x) {
        const double d2 = (x - px) * (x - px) + (y - py) * (y - py);
        field[static_cast<std::size_t>(y) * res + static_cast<std::size_t>(x)] +=
            s.amplitude * std::exp(-d2 * inv_two_var);
      }
    }
  }
  Image img;
  img.height = img.width = res;
  img.pixels.resize(res * res);
  for (std::size_t i = 0; i < field.size(); ++i) {
    const double v = std::clamp(field[i] * rng.exponential(), 0.0, 1.0);
    img.pixels[i] = static_cast<float>(std::lround(v * 255.0)) / 255.0f;
  }
  return img;
}

}  // namespace

SynthDataset synth_sar_generate(const SynthConfig& config) {
  const auto layouts = synth_class_layouts(config);
  SynthDataset ds;
  for (std::size_t c = 0; c < config.num_classes; ++c) {
    ds.manifest.classes.push_back(synth_class_name(c, config.num_classes));
  }
  ds.manifest.train_counts.assign(config.num_classes, config.per_class_train);
  ds.manifest.test_counts.assign(config.num_classes, config.per_class_test);

  struct Split {
    std::vector<Sample>* out;
    std::size_t count;
    const char* prefix;
    double depression;
    std::uint64_t stream;
  };
  const Split splits[] = {
      {&ds.train, config.per_class_train, "train", kSynthTrainDepression, 0x7a1},
      {&ds.test, config.per_class_test, "test", kSynthTestDepression, 0x7e5},
  };
  for (const Split& split : splits) {
    for (std::size_t c = 0; c < config.num_classes; ++c) {
      Rng rng(mix_seed(config.seed, split.stream, c));
      for (std::size_t i = 0; i < split.count; ++i) {
        Sample s;
        s.image = render(layouts[c], config.resolution, rng);
        s.label = static_cast<int>(c);
        s.class_name = ds.manifest.classes[c];
        s.depression_deg = split.depression;
        char name[32];
        std::snprintf(name, sizeof name, "%s_%04zu.pgm", split.prefix, i);
        s.source_id = s.class_name + "/" + name;
        split.out->push_back(std::move(s));
      }
    }
  }
  return ds;
}

void write_chip_dataset(const SynthDataset& dataset, const fs::path& root) {
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create '", root.string(), "': ", ec.message());
  for (const std::string& cls : dataset.manifest.classes) {
    fs::create_directories(root / cls, ec);
    if (ec) fail(ErrorCode::kIo, "cannot create '", (root / cls).string(), "': ", ec.message());
  }
  std::vector<const Sample*> all;
  for (const Sample& s : dataset.train) all.push_back(&s);
  for (const Sample& s : dataset.test) all.push_back(&s);
  std::sort(all.begin(), all.end(),
            [](const Sample* a, const Sample* b) { return a->source_id < b->source_id; });

  std::vector<std::uint8_t> bytes;
  for (const Sample* s : all) {
    bytes.resize(s->image.pixels.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) {
      bytes[i] = static_cast<std::uint8_t>(std::lround(s->image.pixels[i] * 255.0f));
    }
    write_pgm(root / s->source_id, s->image.width, s->image.height, bytes.data());
  }
  const fs::path manifest = root / "manifest.csv";
  std::ofstream out(manifest, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write '", manifest.string(), "'");
  out << "file,class,depression\n";
  for (const Sample* s : all) {
    out << s->source_id << ',' << s->class_name << ',';
    if (s->depression_deg) out << *s->depression_deg;
    out << '\n';
  }
  out.flush();
  if (!out) fail(ErrorCode::kIo, "write failed for '", manifest.string(), "'");
}

}  // namespace lightnet
