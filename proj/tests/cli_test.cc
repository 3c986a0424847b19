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

#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "test_util.h"

namespace lightnet {
namespace {

using testing::run_cli;
using testing::slurp;
using testing::TempDir;

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

const char* kSmallTrain =
    " --width 0.25 --resolution 32 --epochs 2 --batch-size 6 --seed 4";

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    data_ = dir_ / "chips";
    ASSERT_EQ(run_cli("synth --classes 3 --train-per-class 6 --test-per-class 3 --resolution 32 "
                      "--seed 2 --out " + data_).exit_code,
              0);
  }
  TempDir dir_;
  std::string data_;
};

TEST(CliBasicsTest, HelpAndUnknownFlags) {
  EXPECT_EQ(run_cli("--help").exit_code, 0);
  const std::string err = TempDir().path().string() + "_err.txt";
  EXPECT_EQ(run_cli("analyze --bogus", err).exit_code, 1);
  EXPECT_NE(slurp(err).find("Usage"), std::string::npos);
  std::filesystem::remove(err);
  EXPECT_EQ(run_cli("frobnicate").exit_code, 1);
  EXPECT_EQ(run_cli("analyze --convention furlongs").exit_code, 1);
  EXPECT_EQ(run_cli("analyze --input 224x224").exit_code, 1);
}

TEST(CliBasicsTest, AnalyzeReports) {
  const auto table = run_cli("analyze");
  ASSERT_EQ(table.exit_code, 0);
  EXPECT_NE(table.output.find("0.217G"), std::string::npos);
  const auto csv = run_cli("analyze --format csv --convention flops");
  ASSERT_EQ(csv.exit_code, 0);
  EXPECT_EQ(csv.output.rfind("layer,out_shape,params,flops\n", 0), 0u);
  EXPECT_NE(csv.output.find("433175872"), std::string::npos);
  const auto resnet = run_cli("analyze --arch builtin:resnet50 --format csv");
  ASSERT_EQ(resnet.exit_code, 0);
  EXPECT_NE(resnet.output.find("4089184256"), std::string::npos);
  const auto cmp = run_cli("analyze --compare-last-stage");
  ASSERT_EQ(cmp.exit_code, 0);
  EXPECT_NE(cmp.output.find("relocated conv ratio: 49"), std::string::npos);
}

TEST(CliBasicsTest, AnalyzeArchFile) {
  const auto r = run_cli("analyze --arch " + testing::data_path("arch/aconvnets.json") +
                         " --input 88x88x1 --format csv");
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_NE(r.output.find("10x1x1"), std::string::npos);
  EXPECT_EQ(run_cli("analyze --arch /nonexistent.json").exit_code, 1);
}

TEST(CliBasicsTest, GradcheckPasses) {
  const auto r = run_cli("gradcheck");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.output.find("all passed"), std::string::npos);
}

TEST(CliBasicsTest, InvalidInputsExitOne) {
  TempDir dir;
  EXPECT_EQ(run_cli("synth --classes 1 --out " + dir / "x").exit_code, 1);
  EXPECT_EQ(run_cli("synth --resolution 8 --out " + dir / "x").exit_code, 1);
  EXPECT_EQ(run_cli("train --data /nonexistent --checkpoint " + dir / "m.lwn").exit_code, 1);
  EXPECT_EQ(run_cli("train --checkpoint " + dir / "m.lwn").exit_code, 1);
  EXPECT_EQ(run_cli("eval --data " + dir.path().string() + " --checkpoint /nonexistent.lwn")
                .exit_code,
            1);
}

TEST(CliBasicsTest, ThreadEnvironmentIsValidated) {
  EXPECT_EQ(run_cli("analyze", "/dev/null", "LIGHTNET_NUM_THREADS=0").exit_code, 1);
  EXPECT_EQ(run_cli("analyze", "/dev/null", "LIGHTNET_NUM_THREADS=abc").exit_code, 1);
  EXPECT_EQ(run_cli("analyze", "/dev/null", "LIGHTNET_NUM_THREADS=2").exit_code, 0);
}

TEST_F(CliTest, SynthIsByteIdentical) {
  const std::string again = dir_ / "again";
  ASSERT_EQ(run_cli("synth --classes 3 --train-per-class 6 --test-per-class 3 --resolution 32 "
                    "--seed 2 --out " + again).exit_code,
            0);
  for (const auto& entry : std::filesystem::recursive_directory_iterator(data_)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(entry.path(), data_);
    EXPECT_EQ(slurp(entry.path()), slurp(std::filesystem::path(again) / rel)) << rel;
  }
  EXPECT_EQ(count_lines(slurp(std::filesystem::path(data_) / "manifest.csv")), 28u);
}

TEST_F(CliTest, TrainEvalRoundTrip) {
  const std::string ckpt = dir_ / "m.lwn";
  const std::string err = dir_ / "train.err";
  const auto trained = run_cli("train --data " + data_ + kSmallTrain + " --checkpoint " + ckpt, err);
  ASSERT_EQ(trained.exit_code, 0) << slurp(err);
  EXPECT_NE(slurp(err).find("epoch 2"), std::string::npos);
  const std::string history = slurp(ckpt + ".history.csv");
  EXPECT_EQ(count_lines(history), 3u);
  const auto evaluated =
      run_cli("eval --data " + data_ + " --width 0.25 --resolution 32 --checkpoint " + ckpt);
  ASSERT_EQ(evaluated.exit_code, 0);
  EXPECT_NE(evaluated.output.find("Average"), std::string::npos);
  // The table printed after training equals the eval table.
  EXPECT_NE(trained.output.find(evaluated.output), std::string::npos);
  // A checkpoint from a different width is a format error.
  EXPECT_EQ(run_cli("eval --data " + data_ + " --width 0.5 --resolution 32 --checkpoint " + ckpt)
                .exit_code,
            1);
}

TEST_F(CliTest, TrainingIsReproducible) {
  const std::string a = dir_ / "a.lwn", b = dir_ / "b.lwn";
  ASSERT_EQ(run_cli("train --data " + data_ + kSmallTrain + " --checkpoint " + a).exit_code, 0);
  ASSERT_EQ(run_cli("train --data " + data_ + kSmallTrain + " --checkpoint " + b).exit_code, 0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_EQ(slurp(a + ".history.csv"), slurp(b + ".history.csv"));
}

TEST_F(CliTest, PerClassTooLargeNamesClass) {
  const std::string err = dir_ / "err.txt";
  const auto r = run_cli("train --data " + data_ + kSmallTrain + " --per-class 7 --checkpoint " +
                             (dir_ / "m.lwn"),
                         err);
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(slurp(err).find("class_0"), std::string::npos) << slurp(err);
  EXPECT_EQ(run_cli("train --data " + data_ + " --batch-size 1 --checkpoint " + (dir_ / "m.lwn"))
                .exit_code,
            1);
}

TEST_F(CliTest, SweepWritesRunsAndMeans) {
  const std::string out = dir_ / "sweep.csv";
  const auto r = run_cli("sweep --data " + data_ +
                         " --width 0.25 --resolution 32 --epochs 2 --batch-size 3 --k-list 2,4 "
                         "--seeds 0,1 --out " + out);
  ASSERT_EQ(r.exit_code, 0);
  const std::string csv = slurp(out);
  EXPECT_EQ(csv.rfind("k,seed,class_00,class_01,class_02,average\n", 0), 0u);
  EXPECT_EQ(count_lines(csv), 1u + 4u + 2u);
  EXPECT_EQ(run_cli("sweep --data " + data_ + " --k-list 2,x").exit_code, 1);
}

TEST_F(CliTest, CorruptChipIsReported) {
  testing::spit(std::filesystem::path(data_) / "class_01" / "train_0002.pgm", "P5\n32 32\n255\n");
  const std::string err = dir_ / "err.txt";
  const auto r = run_cli("train --data " + data_ + kSmallTrain + " --checkpoint " +
                             (dir_ / "m.lwn"),
                         err);
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(slurp(err).find("train_0002.pgm"), std::string::npos) << slurp(err);
}

}  // namespace
}  // namespace lightnet
