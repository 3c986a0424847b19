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

// lightnet command-line tool. Exit codes: 0 success, 1 validation error,
// 2 runtime failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lightnet/lightnet.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

// Thrown to unwind to main() with an exit code after printing a message.
struct Exit {
  int code;
};

[[noreturn]] void die(int code, const std::string& message) {
  std::cerr << "error: " << message << "\n";
  throw Exit{code};
}

void check(lwn_status status) {
  if (status == LWN_OK) return;
  const int code = (status == LWN_ERR_INVALID_ARGUMENT || status == LWN_ERR_FORMAT)
                       ? kExitValidation
                       : kExitRuntime;
  die(code, std::string(lwn_last_error()));
}

struct StringDeleter {
  void operator()(char* s) const { lwn_string_free(s); }
};
using CString = std::unique_ptr<char, StringDeleter>;

struct ArchDeleter {
  void operator()(lwn_arch* a) const { lwn_arch_free(a); }
};
struct DatasetDeleter {
  void operator()(lwn_dataset* d) const { lwn_dataset_free(d); }
};
struct ModelDeleter {
  void operator()(lwn_model* m) const { lwn_model_free(m); }
};
using ArchPtr = std::unique_ptr<lwn_arch, ArchDeleter>;
using DatasetPtr = std::unique_ptr<lwn_dataset, DatasetDeleter>;
using ModelPtr = std::unique_ptr<lwn_model, ModelDeleter>;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) die(kExitRuntime, "cannot write '" + path + "'");
  out << text;
  out.flush();
  if (!out) die(kExitRuntime, "write failed for '" + path + "'");
}

ArchPtr load_arch(const std::string& source) {
  lwn_arch* arch = nullptr;
  if (source.rfind("builtin:", 0) == 0) {
    check(lwn_arch_builtin(source.c_str(), &arch));
  } else {
    if (!std::filesystem::is_regular_file(source)) {
      die(kExitValidation, "architecture file '" + source + "' does not exist");
    }
    check(lwn_arch_from_file(source.c_str(), &arch));
  }
  return ArchPtr(arch);
}

// Flags shared by train, eval and sweep.
struct ModelFlags {
  std::string data;
  std::string arch;
  double width = 1.0;
  std::size_t resolution = 64;
  std::string channels = "gray1";
  std::string precision = "f32";

  void add(CLI::App* cmd) {
    cmd->add_option("--data", data, "Dataset root (class directories of PGM chips)")
        ->required()
        ->check(CLI::ExistingDirectory);
    cmd->add_option("--arch", arch, "Architecture JSON file (default: MobileNetV3-Large)");
    cmd->add_option("--width", width, "Width multiplier for the default architecture")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--resolution", resolution, "Network input resolution")
        ->capture_default_str()
        ->check(CLI::Range(32, 4096));
    cmd->add_option("--channels", channels, "Channel mode")
        ->capture_default_str()
        ->check(CLI::IsMember({"gray1", "replicate3"}));
    cmd->add_option("--precision", precision, "Numeric precision")
        ->capture_default_str()
        ->check(CLI::IsMember({"f32", "f64"}));
  }

  lwn_channels channel_mode() const { return channels == "gray1" ? LWN_GRAY1 : LWN_REPLICATE3; }
  lwn_precision precision_mode() const { return precision == "f32" ? LWN_F32 : LWN_F64; }

  ArchPtr build_arch(const lwn_dataset* ds) const {
    ArchPtr a;
    if (!arch.empty()) {
      a = load_arch(arch);
    } else {
      lwn_arch* raw = nullptr;
      check(lwn_arch_mobilenetv3(channel_mode() == LWN_GRAY1 ? 1 : 3, lwn_dataset_num_classes(ds),
                                 width, &raw));
      a.reset(raw);
    }
    if (lwn_arch_num_classes(a.get()) != lwn_dataset_num_classes(ds)) {
      die(kExitValidation, "architecture has " + std::to_string(lwn_arch_num_classes(a.get())) +
                               " classes but the dataset has " +
                               std::to_string(lwn_dataset_num_classes(ds)));
    }
    return a;
  }
};

struct TrainFlags {
  std::size_t epochs = 150;
  std::size_t batch_size = 32;
  double lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 4e-5;
  std::string schedule = "cosine";
  std::uint64_t seed = 0;

  void add(CLI::App* cmd) {
    cmd->add_option("--epochs", epochs, "Training epochs")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--batch-size", batch_size, "Mini-batch size (>= 2)")
        ->capture_default_str()
        ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20));
    cmd->add_option("--lr", lr, "Base learning rate")->capture_default_str()->check(CLI::NonNegativeNumber);
    cmd->add_option("--momentum", momentum, "SGD momentum in [0, 1)")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 0.999999));
    cmd->add_option("--weight-decay", weight_decay, "Decoupled weight decay (conv/dense weights)")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--schedule", schedule, "Learning-rate schedule")
        ->capture_default_str()
        ->check(CLI::IsMember({"constant", "cosine"}));
    cmd->add_option("--seed", seed, "Seed for subsampling, initialization and shuffling")
        ->capture_default_str();
  }

  lwn_train_config config(const ModelFlags& m) const {
    lwn_train_config c;
    lwn_train_config_default(&c);
    c.epochs = epochs;
    c.batch_size = batch_size;
    c.learning_rate = lr;
    c.momentum = momentum;
    c.weight_decay = weight_decay;
    c.schedule = schedule == "constant" ? LWN_SCHEDULE_CONSTANT : LWN_SCHEDULE_COSINE;
    c.seed = seed;
    c.precision = m.precision_mode();
    c.resolution = m.resolution;
    c.channels = m.channel_mode();
    return c;
  }
};

DatasetPtr load_dataset(const std::string& dir) {
  lwn_dataset* ds = nullptr;
  check(lwn_dataset_load(dir.c_str(), &ds));
  return DatasetPtr(ds);
}

void print_epoch(void*, size_t epoch, double lr, double loss, double acc) {
  std::fprintf(stderr, "epoch %zu  lr %.6f  loss %.6f  train_acc %.2f%%\n", epoch, lr, loss,
               acc * 100.0);
}

void print_run(void*, size_t k, uint64_t seed, double average) {
  std::fprintf(stderr, "k=%zu seed=%llu average=%.2f%%\n", k, static_cast<unsigned long long>(seed),
               average * 100.0);
}

int run_analyze(const std::string& arch_source, const std::string& input,
                const std::string& convention, const std::string& format, bool compare) {
  ArchPtr arch = load_arch(arch_source);
  char* report = nullptr;
  check(lwn_analyze(arch.get(), input.c_str(), convention.c_str(), format.c_str(), &report, nullptr,
                    nullptr));
  CString owned(report);
  std::cout << report;
  if (compare) {
    const std::size_t res = std::stoul(input.substr(0, input.find('x')));
    char* text = nullptr;
    check(lwn_compare_last_stages(1.0, res, &text, nullptr, nullptr));
    CString owned_text(text);
    std::cout << "\n" << text;
  }
  return kExitOk;
}

void validate_thread_env() {
  const char* threads = std::getenv("LIGHTNET_NUM_THREADS");
  if (threads == nullptr) return;
  char* end = nullptr;
  const long n = std::strtol(threads, &end, 10);
  if (end == threads || *end != '\0' || n < 1) {
    die(kExitValidation, std::string("LIGHTNET_NUM_THREADS must be a positive integer, got '") +
                             threads + "'");
  }
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
  std::vector<T> out;
  for (const std::string& item : split_list(text)) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (item.empty() || pos != item.size() || item[0] == '-') {
      die(kExitValidation, std::string(flag) + ": '" + item + "' is not a non-negative integer");
    }
    out.push_back(static_cast<T>(v));
  }
  if (out.empty()) die(kExitValidation, std::string(flag) + " must not be empty");
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"lightnet: MobileNetV3 cost analysis, synthetic SAR data and training"};
  app.require_subcommand(1);

  // analyze
  std::string arch_source = "builtin:mobilenetv3-large";
  std::string input = "224x224x3";
  std::string convention = "madds";
  std::string format = "table";
  bool compare = false;
  CLI::App* analyze = app.add_subcommand("analyze", "Print parameter and MAdds report");
  analyze->add_option("--arch", arch_source, "Architecture JSON file or builtin:<name>")
      ->capture_default_str();
  analyze->add_option("--input", input, "Input shape HxWxC")->capture_default_str();
  analyze->add_option("--convention", convention, "Cost unit")
      ->capture_default_str()
      ->check(CLI::IsMember({"madds", "flops"}));
  analyze->add_option("--format", format, "Output format")
      ->capture_default_str()
      ->check(CLI::IsMember({"table", "csv"}));
  analyze->add_flag("--compare-last-stage", compare,
                    "Append the original vs efficient last-stage comparison");

  // synth
  std::size_t classes = 10, train_per_class = 100, test_per_class = 50, resolution = 64;
  std::uint64_t synth_seed = 0;
  std::string out_dir;
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic SAR-like chip dataset");
  synth->add_option("--classes", classes, "Number of classes (>= 2)")->capture_default_str();
  synth->add_option("--train-per-class", train_per_class, "Training chips per class")
      ->capture_default_str();
  synth->add_option("--test-per-class", test_per_class, "Test chips per class")->capture_default_str();
  synth->add_option("--resolution", resolution, "Chip size in pixels")->capture_default_str();
  synth->add_option("--seed", synth_seed, "Generator seed")->capture_default_str();
  synth->add_option("--out", out_dir, "Output directory")->required();

  // train
  ModelFlags train_model;
  TrainFlags train_flags;
  std::size_t per_class = 0;
  std::string checkpoint, history;
  CLI::App* train = app.add_subcommand("train", "Train a model and write a checkpoint");
  train_model.add(train);
  train_flags.add(train);
  train->add_option("--per-class", per_class, "Training samples per class (0 = all)")
      ->capture_default_str();
  train->add_option("--checkpoint", checkpoint, "Checkpoint output path")->required();
  train->add_option("--history", history, "Loss history CSV (default: <checkpoint>.history.csv)");

  // eval
  ModelFlags eval_model;
  std::string eval_checkpoint;
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  eval_model.add(eval);
  eval->add_option("--checkpoint", eval_checkpoint, "Checkpoint to evaluate")
      ->required()
      ->check(CLI::ExistingFile);

  // sweep
  ModelFlags sweep_model;
  TrainFlags sweep_flags;
  std::string k_list = "10,20,40,60,80,100";
  std::string seeds = "0";
  std::string sweep_out;
  CLI::App* sweep = app.add_subcommand("sweep", "Limited-data sweep over k samples per class");
  sweep_model.add(sweep);
  sweep_flags.add(sweep);
  sweep->add_option("--k-list", k_list, "Comma-separated samples per class")->capture_default_str();
  sweep->add_option("--seeds", seeds, "Comma-separated seeds")->capture_default_str();
  sweep->add_option("--out", sweep_out, "CSV output path (default: stdout)");

  // gradcheck
  std::uint64_t grad_seed = 0;
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient self-check");
  gradcheck->add_option("--seed", grad_seed, "Seed for the random test inputs")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    CLI::App* sub = nullptr;
    for (CLI::App* s : app.get_subcommands()) sub = s;
    std::cerr << (sub ? sub->help() : app.help());
    return kExitValidation;
  }
  validate_thread_env();

  if (*analyze) return run_analyze(arch_source, input, convention, format, compare);

  if (*synth) {
    lwn_dataset* raw = nullptr;
    check(lwn_synth_generate(classes, train_per_class, test_per_class, resolution, synth_seed, &raw));
    DatasetPtr ds(raw);
    check(lwn_dataset_write(ds.get(), out_dir.c_str()));
    std::cout << "wrote " << lwn_dataset_train_size(ds.get()) + lwn_dataset_test_size(ds.get())
              << " chips in " << classes << " classes to " << out_dir << "\n";
    return kExitOk;
  }

  if (*train) {
    DatasetPtr ds = load_dataset(train_model.data);
    if (per_class > 0) {
      lwn_dataset* sub = nullptr;
      check(lwn_dataset_subsample(ds.get(), per_class, train_flags.seed, &sub));
      ds.reset(sub);
    }
    ArchPtr arch = train_model.build_arch(ds.get());
    const lwn_train_config cfg = train_flags.config(train_model);
    lwn_model* raw = nullptr;
    check(lwn_model_create(arch.get(), train_flags.seed, cfg.precision, &raw));
    ModelPtr model(raw);
    char* hist = nullptr;
    check(lwn_model_train(model.get(), ds.get(), &cfg, print_epoch, nullptr, &hist));
    CString owned(hist);
    check(lwn_model_save(model.get(), checkpoint.c_str()));
    write_text(history.empty() ? checkpoint + ".history.csv" : history, hist);
    std::cout << "checkpoint: " << checkpoint << "\n";
    if (lwn_dataset_test_size(ds.get()) > 0) {
      char* table = nullptr;
      check(lwn_model_evaluate(model.get(), ds.get(), cfg.resolution, cfg.channels, &table, nullptr,
                               nullptr));
      CString owned_table(table);
      std::cout << table;
    }
    return kExitOk;
  }

  if (*eval) {
    DatasetPtr ds = load_dataset(eval_model.data);
    ArchPtr arch = eval_model.build_arch(ds.get());
    lwn_model* raw = nullptr;
    check(lwn_model_load(arch.get(), eval_checkpoint.c_str(), eval_model.precision_mode(), &raw));
    ModelPtr model(raw);
    char* table = nullptr;
    check(lwn_model_evaluate(model.get(), ds.get(), eval_model.resolution,
                             eval_model.channel_mode(), &table, nullptr, nullptr));
    CString owned(table);
    std::cout << table;
    return kExitOk;
  }

  if (*sweep) {
    const auto ks = parse_list<std::size_t>(k_list, "--k-list");
    const auto seed_list = parse_list<std::uint64_t>(seeds, "--seeds");
    DatasetPtr ds = load_dataset(sweep_model.data);
    ArchPtr arch = sweep_model.build_arch(ds.get());
    const lwn_train_config cfg = sweep_flags.config(sweep_model);
    char* csv = nullptr;
    check(lwn_sweep(ds.get(), arch.get(), ks.data(), ks.size(), seed_list.data(), seed_list.size(),
                    &cfg, print_run, nullptr, &csv));
    CString owned(csv);
    if (sweep_out.empty()) {
      std::cout << csv;
    } else {
      write_text(sweep_out, csv);
    }
    return kExitOk;
  }

  if (*gradcheck) {
    char* report = nullptr;
    int passed = 0;
    check(lwn_gradcheck(grad_seed, &report, &passed));
    CString owned(report);
    std::cout << report;
    return passed ? kExitOk : kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Exit& e) {
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
