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

// Acceptance runner: one PASS/FAIL line per criterion.
//
//   acceptance            run every criterion
//   acceptance 1 5 6      run a subset

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lightnet/arch.hpp"
#include "lightnet/checkpoint.hpp"
#include "lightnet/cost.hpp"
#include "lightnet/data.hpp"
#include "lightnet/error.hpp"
#include "lightnet/gradcheck.hpp"
#include "lightnet/model.hpp"
#include "lightnet/ops.hpp"
#include "lightnet/synth.hpp"
#include "lightnet/train.hpp"
#include "naive_conv.h"
#include "test_util.h"

namespace lightnet {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string read_golden_table() {
  std::string text = testing::slurp(testing::golden_path("mobilenetv3_large_table.txt"));
  return text;
}

Outcome architecture_fidelity() {
  const ArchSpec spec = parse_arch_json(arch_to_json(mobilenetv3_large_spec(3, 1000)));
  std::string rows;
  for (const std::string& r : arch_table_rows(spec)) rows += r + "\n";
  const std::string golden = read_golden_table();
  const auto count = std::count(rows.begin(), rows.end(), '\n');
  return {rows == golden, std::to_string(count) + " rows vs golden table"};
}

Outcome hswish_vector() {
  const double in[] = {-4, -3, -1, 0, 1, 3, 5};
  const double want[] = {0, 0, -1.0 / 3.0, 0, 2.0 / 3.0, 3, 5};
  bool ok = true;
  for (int i = 0; i < 7; ++i) ok &= activate(Activation::kHardSwish, in[i]) == want[i];
  return {ok, "7 points compared exactly"};
}

Outcome gradient_suite() {
  const GradCheckReport report = run_gradient_suite(0);
  double worst_primitive = 0, worst_block = 0;
  std::size_t bnecks = 0;
  bool ok = true;
  for (const GradCheckResult& r : report.results) {
    const bool block = r.threshold > kPrimitiveTolerance;
    (block ? worst_block : worst_primitive) =
        std::max(block ? worst_block : worst_primitive, r.max_relative_error);
    ok &= r.max_relative_error < (block ? kBlockTolerance : kPrimitiveTolerance);
    bnecks += r.op.rfind("bneck.", 0) == 0;
  }
  ok &= bnecks == 15 && report.all_passed();
  return {ok, std::to_string(report.results.size()) + " checks, " + std::to_string(bnecks) +
                  " bneck rows, worst primitive " + fmt("%.2e", worst_primitive) +
                  ", worst block " + fmt("%.2e", worst_block)};
}

Outcome convolution_oracle() {
  const auto stats = testing::run_conv_oracle<double>(120, 2024);
  return {stats.configs >= 100 && stats.max_relative_error < 1e-6,
          std::to_string(stats.configs) + " configs, max rel err " +
              fmt("%.2e", stats.max_relative_error)};
}

Outcome cost_reproduction() {
  const auto m = analyze(mobilenetv3_large_spec(3, 1000), {224, 224, 3}).total_madds;
  const auto r = analyze(resnet50_cost_spec(), {224, 224, 3}).total_madds;
  const bool ok = m >= 150'000'000 && m <= 250'000'000 && r >= 3'700'000'000 &&
                  r <= 4'500'000'000;
  return {ok, "MobileNetV3-Large " + fmt("%.3fG", m / 1e9) + ", ResNet-50 " +
                  fmt("%.3fG", r / 1e9) + " madds"};
}

Outcome last_stage_claims() {
  const LastStageComparison cmp = compare_last_stages();
  const bool ok = cmp.relocated_conv_ratio == 49.0 && cmp.delta_madds >= 25'000'000 &&
                  cmp.delta_madds <= 45'000'000;
  return {ok, "ratio " + fmt("%g", cmp.relocated_conv_ratio) + ", delta " +
                  std::to_string(cmp.delta_madds) + " madds"};
}

SynthConfig synth(std::size_t train, std::size_t test, std::uint64_t seed) {
  SynthConfig c;
  c.num_classes = 10;
  c.per_class_train = train;
  c.per_class_test = test;
  c.resolution = 64;
  c.seed = seed;
  return c;
}

Outcome overfit_contract() {
  const SynthDataset data = synth_sar_generate(synth(10, 10, 0));
  TrainConfig cfg;
  cfg.epochs = 150;
  cfg.batch_size = 32;
  cfg.resolution = 64;
  cfg.seed = 0;
  Model<float> model(mobilenetv3_large_spec(1, 10, 0.25), cfg.seed);
  double best = 0;
  std::size_t first_epoch = 0;
  train(model, data.train, cfg, [&](const EpochStats& s) {
    if (s.train_accuracy >= 0.99 && first_epoch == 0) first_epoch = s.epoch;
    best = std::max(best, s.train_accuracy);
  });
  return {best >= 0.99, "best train accuracy " + fmt("%.2f%%", 100 * best) +
                            (first_epoch ? ", reached 99% at epoch " + std::to_string(first_epoch)
                                         : std::string())};
}

Outcome limited_data_trend() {
  const SynthDataset data = synth_sar_generate(synth(100, 50, 0));
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.batch_size = 32;
  cfg.resolution = 64;
  const SweepReport r =
      run_limited_data_sweep(data.train, data.test, data.manifest.classes,
                             mobilenetv3_large_spec(1, 10, 0.25), {20, 100}, {0, 1, 2}, cfg,
                             [](const SweepRun& run) {
                               std::fprintf(stderr, "  k=%zu seed=%llu average=%.2f%%\n", run.k,
                                            static_cast<unsigned long long>(run.seed),
                                            100 * run.metrics.average_accuracy);
                             });
  const double k20 = 100 * r.summary[0].average_accuracy;
  const double k100 = 100 * r.summary[1].average_accuracy;
  return {k100 >= k20 - 2.0, "mean test accuracy k=20 " + fmt("%.2f%%", k20) + ", k=100 " +
                                 fmt("%.2f%%", k100) + ", margin " +
                                 fmt("%+.2f points", k100 - k20)};
}

Outcome determinism() {
  testing::TempDir dir;
  const std::string data = dir / "chips";
  const std::string env = "LIGHTNET_NUM_THREADS=1";
  if (testing::run_cli("synth --classes 10 --train-per-class 10 --test-per-class 5 --out " + data,
                       "/dev/null", env)
          .exit_code != 0) {
    return {false, "synth failed"};
  }
  const std::string flags = " --data " + data + " --width 0.25 --resolution 64 --epochs 20 --seed 7";
  for (const char* name : {"a", "b"}) {
    const auto r = testing::run_cli("train" + flags + " --checkpoint " + (dir / name), "/dev/null", env);
    if (r.exit_code != 0) return {false, std::string("train run ") + name + " failed"};
  }
  const std::string a = testing::slurp(dir / "a");
  const std::string b = testing::slurp(dir / "b");
  const bool same_ckpt = !a.empty() && a == b;
  const bool same_hist =
      testing::slurp(dir / "a.history.csv") == testing::slurp(dir / "b.history.csv");
  return {same_ckpt && same_hist, std::string("checkpoints ") + (same_ckpt ? "identical" : "differ") +
                                      ", histories " + (same_hist ? "identical" : "differ")};
}

Outcome checkpoint_round_trip() {
  const SynthDataset data = synth_sar_generate(synth(6, 4, 3));
  const ArchSpec spec = mobilenetv3_large_spec(1, 10, 0.25);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.resolution = 64;
  Model<float> model(spec, 1);
  train(model, data.train, cfg);
  testing::TempDir dir;
  const fs::path path = dir.path() / "m.lwn";
  save_checkpoint(model, path);
  Model<float> loaded = load_checkpoint<float>(spec, path);
  const Batch batch = make_batch(data.test, 64, ChannelMode::kGray1);
  const bool same_logits = model.predict(batch.images) == loaded.predict(batch.images);
  const Metrics m1 = evaluate(model, data.test, 64, ChannelMode::kGray1);
  const Metrics m2 = evaluate(loaded, data.test, 64, ChannelMode::kGray1);
  const bool same_metrics = m1.confusion == m2.confusion;

  const std::string bytes = read_file(path);
  std::size_t rejected = 0, probes = 0;
  auto expect_rejected = [&](const std::string& corrupt) {
    ++probes;
    try {
      model_from_checkpoint<float>(spec, decode_checkpoint(corrupt));
    } catch (const Error&) {
      ++rejected;
    }
  };
  for (std::size_t n = 0; n < bytes.size(); n += 1 + bytes.size() / 200) {
    expect_rejected(bytes.substr(0, n));
  }
  expect_rejected(bytes.substr(0, bytes.size() - 1));
  expect_rejected(bytes + "x");
  std::string bad = bytes;
  bad[1] ^= 0x20;
  expect_rejected(bad);
  bad = bytes;
  bad[4] = 9;
  expect_rejected(bad);
  // First tensor's first dimension.
  bad = bytes;
  const std::size_t name_len = static_cast<unsigned char>(bytes[12]) |
                               static_cast<unsigned char>(bytes[13]) << 8;
  bad[14 + name_len + 1] ^= 0x01;
  expect_rejected(bad);

  // A failed load into a live model must leave it untouched.
  const std::uint64_t before = loaded.state_hash();
  testing::spit(dir.path() / "bad.lwn", bytes.substr(0, bytes.size() / 2));
  bool refused = false;
  try {
    loaded = load_checkpoint<float>(spec, dir.path() / "bad.lwn");
  } catch (const Error&) {
    refused = true;
  }
  const bool untouched = refused && loaded.state_hash() == before;
  return {same_logits && same_metrics && rejected == probes && untouched,
          std::string("evaluation ") + (same_logits && same_metrics ? "identical" : "differs") +
              ", " + std::to_string(rejected) + "/" + std::to_string(probes) +
              " corrupt files rejected" + (untouched ? "" : ", model modified by failed load")};
}

Outcome subsampler() {
  std::vector<Sample> pool;
  for (int c = 0; c < 10; ++c) {
    for (int i = 0; i < 200; ++i) {
      Sample s;
      s.label = c;
      s.class_name = "c" + std::to_string(c);
      s.source_id = s.class_name + "/" + std::to_string(i);
      pool.push_back(std::move(s));
    }
  }
  bool sizes = true;
  for (std::size_t k : {10u, 20u, 40u, 60u, 80u, 100u}) {
    const auto sub = subsample_per_class(pool, k, 1);
    std::vector<std::size_t> per(10, 0);
    for (const Sample& s : sub) ++per[s.label];
    sizes &= sub.size() == 10 * k && std::all_of(per.begin(), per.end(), [&](std::size_t n) {
               return n == k;
             });
  }
  constexpr int kDraws = 1000;
  constexpr std::size_t kK = 100;
  std::map<std::string, int> hits;
  for (int d = 0; d < kDraws; ++d) {
    for (const Sample& s : subsample_per_class(pool, kK, static_cast<std::uint64_t>(d))) {
      ++hits[s.source_id];
    }
  }
  const double expected = kDraws * static_cast<double>(kK) / 200.0;
  double worst = 0;
  for (const Sample& s : pool) {
    worst = std::max(worst, std::abs(hits[s.source_id] - expected) / expected);
  }
  return {sizes && hits.size() == pool.size() && worst <= 0.15,
          std::string("sizes ") + (sizes ? "exact" : "wrong") +
              ", worst per-sample deviation " + fmt("%.1f%%", 100 * worst) +
              " over 1000 draws"};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace lightnet

int main(int argc, char** argv) {
  using namespace lightnet;
  CLI::App app{"LightNet acceptance suite"};
  std::vector<int> only;
  app.add_option("criteria", only, "Criterion numbers to run (default: all)")
      ->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria = {
      {1, "architecture fidelity", architecture_fidelity},
      {2, "h-swish reference vector", hswish_vector},
      {3, "gradient suite", gradient_suite},
      {4, "convolution oracle", convolution_oracle},
      {5, "cost reproduction", cost_reproduction},
      {6, "last-stage claims", last_stage_claims},
      {7, "desk-scale training", [] {
         const Outcome a = overfit_contract();
         std::fprintf(stderr, "  overfit: %s\n", a.detail.c_str());
         const Outcome b = limited_data_trend();
         return Outcome{a.pass && b.pass, "overfit: " + a.detail + "; trend: " + b.detail};
       }},
      {8, "determinism", determinism},
      {9, "checkpoint round trip", checkpoint_round_trip},
      {10, "subsampler", subsampler},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && !selected.contains(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %d: %s %s (%s, %.1fs)\n", c.id, o.pass ? "PASS" : "FAIL", c.name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
