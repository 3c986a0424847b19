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

#include "lightnet/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "lightnet/error.hpp"
#include "lightnet/pgm.hpp"
#include "lightnet/random.hpp"

namespace fs = std::filesystem;

namespace lightnet {

bool SplitRule::is_test(const Sample& s) const {
  return s.depression_deg.has_value() && *s.depression_deg == test_depression;
}

std::vector<Sample> ChipDataset::train(const SplitRule& rule) const {
  std::vector<Sample> out;
  for (const Sample& s : samples) {
    if (!rule.is_test(s)) out.push_back(s);
  }
  return out;
}

std::vector<Sample> ChipDataset::test(const SplitRule& rule) const {
  std::vector<Sample> out;
  for (const Sample& s : samples) {
    if (rule.is_test(s)) out.push_back(s);
  }
  return out;
}

namespace {

struct ManifestEntry {
  std::string class_name;
  std::optional<double> depression;
};

std::vector<std::string> split_csv_line(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::map<std::string, ManifestEntry> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open '", path.string(), "'");
  std::map<std::string, ManifestEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      const auto header = split_csv_line(line);
      if (header != std::vector<std::string>{"file", "class", "depression"}) {
        fail(ErrorCode::kFormat, path.string(), ": header must be 'file,class,depression'");
      }
      continue;
    }
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 3) {
      fail(ErrorCode::kFormat, path.string(), ":", line_no, ": expected 3 fields, got ",
           fields.size());
    }
    ManifestEntry entry{fields[1], std::nullopt};
    if (!fields[2].empty()) {
      double v = 0;
      const char* b = fields[2].data();
      const char* e = b + fields[2].size();
      auto [ptr, ec] = std::from_chars(b, e, v);
      if (ec != std::errc() || ptr != e || !std::isfinite(v)) {
        fail(ErrorCode::kFormat, path.string(), ":", line_no, ": bad depression '", fields[2], "'");
      }
      entry.depression = v;
    }
    if (!entries.emplace(fields[0], entry).second) {
      fail(ErrorCode::kFormat, path.string(), ":", line_no, ": duplicate entry for '", fields[0],
           "'");
    }
  }
  if (line_no == 0) fail(ErrorCode::kFormat, path.string(), ": empty manifest");
  return entries;
}

Image to_image(const PgmImage& pgm) {
  Image img;
  img.height = pgm.height;
  img.width = pgm.width;
  img.pixels.resize(pgm.pixels.size());
  const float maxval = static_cast<float>(pgm.maxval);
  for (std::size_t i = 0; i < pgm.pixels.size(); ++i) {
    img.pixels[i] = static_cast<float>(pgm.pixels[i]) / maxval;
  }
  return img;
}

}  // namespace

ChipDataset load_chip_dataset(const fs::path& root, const SplitRule& rule) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    fail(ErrorCode::kInvalidArgument, "dataset root '", root.string(), "' is not a directory");
  }
  std::vector<std::string> classes;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) classes.push_back(entry.path().filename().string());
  }
  std::sort(classes.begin(), classes.end());
  if (classes.empty()) {
    fail(ErrorCode::kFormat, "dataset root '", root.string(), "' has no class directories");
  }

  std::map<std::string, ManifestEntry> manifest;
  const fs::path manifest_path = root / "manifest.csv";
  const bool has_manifest = fs::exists(manifest_path);
  if (has_manifest) manifest = read_manifest(manifest_path);

  ChipDataset ds;
  ds.manifest.classes = classes;
  ds.manifest.train_counts.assign(classes.size(), 0);
  ds.manifest.test_counts.assign(classes.size(), 0);
  std::set<std::string> seen;
  for (std::size_t label = 0; label < classes.size(); ++label) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(root / classes[label])) {
      if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
        files.push_back(entry.path());
      }
    }
    if (files.empty()) {
      fail(ErrorCode::kFormat, "class directory '", classes[label], "' contains no .pgm chips");
    }
    std::sort(files.begin(), files.end());
    for (const fs::path& file : files) {
      const std::string rel = classes[label] + "/" + file.filename().string();
      Sample s;
      s.image = to_image(read_pgm(file));
      if (s.image.height < kMinImageExtent || s.image.width < kMinImageExtent) {
        fail(ErrorCode::kFormat, file.string(), ": chip is ", s.image.width, "x", s.image.height,
             ", minimum is ", kMinImageExtent, "x", kMinImageExtent);
      }
      s.label = static_cast<int>(label);
      s.class_name = classes[label];
      s.source_id = rel;
      if (has_manifest) {
        auto it = manifest.find(rel);
        if (it != manifest.end()) {
          if (it->second.class_name != classes[label]) {
            fail(ErrorCode::kFormat, "manifest lists '", rel, "' with class '",
                 it->second.class_name, "'");
          }
          s.depression_deg = it->second.depression;
          seen.insert(rel);
        }
      }
      (rule.is_test(s) ? ds.manifest.test_counts : ds.manifest.train_counts)[label] += 1;
      ds.samples.push_back(std::move(s));
    }
  }
  for (const auto& [file, entry] : manifest) {
    if (!seen.contains(file)) {
      fail(ErrorCode::kFormat, "manifest entry '", file, "' does not match any chip");
    }
  }
  return ds;
}

std::size_t label_count(const std::vector<Sample>& samples) {
  int max_label = -1;
  for (const Sample& s : samples) {
    require(s.label >= 0, "sample '", s.source_id, "' has negative label");
    max_label = std::max(max_label, s.label);
  }
  return static_cast<std::size_t>(max_label + 1);
}

std::vector<Sample> subsample_per_class(const std::vector<Sample>& samples, std::size_t k,
                                        std::uint64_t seed) {
  require(k >= 1, "subsample_per_class: k must be >= 1");
  const std::size_t classes = label_count(samples);
  std::vector<std::vector<std::size_t>> by_class(classes);
  std::vector<std::string> names(classes);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    by_class[samples[i].label].push_back(i);
    names[samples[i].label] = samples[i].class_name;
  }
  std::vector<std::size_t> chosen;
  chosen.reserve(k * classes);
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<std::size_t>& idx = by_class[c];
    if (idx.size() < k) {
      fail(ErrorCode::kInvalidArgument, "class '", names[c].empty() ? std::to_string(c) : names[c],
           "' has ", idx.size(), " samples, fewer than k=", k);
    }
    Rng rng(mix_seed(seed, 0x5eb5a3b1e5ULL, c));
    // Partial Fisher-Yates: the first k slots are a uniform k-subset.
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
      std::swap(idx[i], idx[j]);
    }
    chosen.insert(chosen.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<Sample> out;
  out.reserve(chosen.size());
  for (std::size_t i : chosen) out.push_back(samples[i]);
  return out;
}

ChannelMode parse_channel_mode(std::string_view name) {
  if (name == "gray1") return ChannelMode::kGray1;
  if (name == "replicate3") return ChannelMode::kReplicate3;
  fail(ErrorCode::kInvalidArgument, "unknown channel mode '", name, "' (expected gray1|replicate3)");
}

std::size_t channel_count(ChannelMode mode) { return mode == ChannelMode::kGray1 ? 1 : 3; }

Image resize_bilinear(const Image& image, std::size_t out_h, std::size_t out_w) {
  require(image.height > 0 && image.width > 0 && image.pixels.size() == image.height * image.width,
          "resize_bilinear: malformed image");
  require(out_h > 0 && out_w > 0, "resize_bilinear: empty target");
  Image out;
  out.height = out_h;
  out.width = out_w;
  out.pixels.resize(out_h * out_w);
  const double sy = static_cast<double>(image.height) / static_cast<double>(out_h);
  const double sx = static_cast<double>(image.width) / static_cast<double>(out_w);
  const double max_y = static_cast<double>(image.height - 1);
  const double max_x = static_cast<double>(image.width - 1);
  for (std::size_t y = 0; y < out_h; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, max_y);
    const std::size_t y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, image.height - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < out_w; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, max_x);
      const std::size_t x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, image.width - 1);
      const double wx = fx - static_cast<double>(x0);
      const double top = image.at(y0, x0) * (1.0 - wx) + image.at(y0, x1) * wx;
      const double bottom = image.at(y1, x0) * (1.0 - wx) + image.at(y1, x1) * wx;
      out.pixels[y * out_w + x] = static_cast<float>(top * (1.0 - wy) + bottom * wy);
    }
  }
  return out;
}

Tensor<float> preprocess(const Image& image, std::size_t target_resolution, ChannelMode mode) {
  require(target_resolution >= kMinImageExtent, "preprocess: target resolution ",
          target_resolution, " is below ", kMinImageExtent);
  const Image resized = resize_bilinear(image, target_resolution, target_resolution);
  const std::size_t plane = resized.pixels.size();
  double mean = 0.0;
  for (float v : resized.pixels) mean += v;
  mean /= static_cast<double>(plane);
  double var = 0.0;
  for (float v : resized.pixels) var += (v - mean) * (v - mean);
  const double stdev = std::max(std::sqrt(var / static_cast<double>(plane)), 1e-6);

  const std::size_t channels = channel_count(mode);
  Tensor<float> out({channels, target_resolution, target_resolution});
  for (std::size_t i = 0; i < plane; ++i) {
    const float v = static_cast<float>((resized.pixels[i] - mean) / stdev);
    for (std::size_t c = 0; c < channels; ++c) out[c * plane + i] = v;
  }
  return out;
}

Batch make_batch(const std::vector<Sample>& samples, std::span<const std::size_t> indices,
                 std::size_t target_resolution, ChannelMode mode) {
  const std::size_t channels = channel_count(mode);
  const std::size_t per = channels * target_resolution * target_resolution;
  Batch batch;
  batch.images = Tensor<float>({indices.size(), channels, target_resolution, target_resolution});
  batch.labels.reserve(indices.size());
  for (std::size_t n = 0; n < indices.size(); ++n) {
    const Sample& s = samples.at(indices[n]);
    const Tensor<float> t = preprocess(s.image, target_resolution, mode);
    std::copy(t.values().begin(), t.values().end(), batch.images.data() + n * per);
    batch.labels.push_back(s.label);
  }
  return batch;
}

Batch make_batch(const std::vector<Sample>& samples, std::size_t target_resolution,
                 ChannelMode mode) {
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return make_batch(samples, idx, target_resolution, mode);
}

}  // namespace lightnet
