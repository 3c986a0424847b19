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

#include "lightnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <set>
#include <sstream>

#include "lightnet/arch.hpp"
#include "lightnet/blocks.hpp"
#include "lightnet/error.hpp"
#include "lightnet/random.hpp"

namespace lightnet {

double gradient_relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

bool GradCheckReport::all_passed() const {
  return std::all_of(results.begin(), results.end(),
                     [](const GradCheckResult& r) { return r.passed(); });
}

std::size_t GradCheckReport::family_count() const {
  std::set<std::string> families;
  for (const auto& r : results) families.insert(r.family);
  return families.size();
}

std::vector<std::string> GradCheckReport::failures() const {
  std::vector<std::string> out;
  for (const auto& r : results) {
    if (!r.passed()) out.push_back(r.op);
  }
  return out;
}

std::string GradCheckReport::render() const {
  std::ostringstream os;
  char line[200];
  std::snprintf(line, sizeof line, "%-30s %-22s %14s %10s %8s %s\n", "op", "family",
                "max_rel_error", "threshold", "entries", "status");
  os << line;
  for (const auto& r : results) {
    std::snprintf(line, sizeof line, "%-30s %-22s %14.3e %10.0e %8zu %s\n", r.op.c_str(),
                  r.family.c_str(), r.max_relative_error, r.threshold, r.entries_checked,
                  r.passed() ? "ok" : "FAIL");
    os << line;
  }
  os << results.size() << " checks, " << family_count() << " op families, "
     << (all_passed() ? "all passed" : "FAILED") << "\n";
  return os.str();
}

namespace {

std::uint64_t name_hash(const std::string& name) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : name) h = (h ^ ch) * 1099511628211ULL;
  return h;
}

double project(const Tensor<double>& y, const Tensor<double>& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * r[i];
  return s;
}

std::vector<std::size_t> probe_indices(std::size_t size, std::size_t max_entries, Rng& rng) {
  std::vector<std::size_t> idx(size);
  for (std::size_t i = 0; i < size; ++i) idx[i] = i;
  if (size <= max_entries) return idx;
  for (std::size_t i = 0; i < max_entries; ++i) {
    std::swap(idx[i], idx[i + rng.below(size - i)]);
  }
  idx.resize(max_entries);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

GradCheckResult check_gradients(const GradCheckCase& c, std::uint64_t seed,
                                std::size_t max_entries) {
  Rng rng(mix_seed(seed, 0x9c4ec, name_hash(c.op)));
  std::vector<Tensor<double>> inputs = c.inputs;

  // Analytic pass.
  for (Parameter<double>* p : c.parameters) p->grad = Tensor<double>();
  Tensor<double> projection;
  std::vector<Tensor<double>> input_grads;
  {
    Tape<double> tape;
    std::vector<Var> leaves;
    for (const auto& t : inputs) leaves.push_back(tape.leaf(t, true));
    const Var y = c.fn(tape, leaves);
    projection = Tensor<double>(tape.value(y).dims());
    for (std::size_t i = 0; i < projection.size(); ++i) projection[i] = rng.uniform(-1.0, 1.0);
    tape.backward(y, projection);
    for (Var v : leaves) input_grads.push_back(tape.grad(v));
  }

  const auto objective = [&]() {
    Tape<double> tape;
    std::vector<Var> leaves;
    for (const auto& t : inputs) leaves.push_back(tape.leaf(t, false));
    return project(tape.value(c.fn(tape, leaves)), projection);
  };

  GradCheckResult result;
  result.op = c.op;
  result.family = c.family;
  result.threshold = c.threshold;
  const auto probe = [&](Tensor<double>& value, const Tensor<double>& grad) {
    for (std::size_t i : probe_indices(value.size(), max_entries, rng)) {
      const double saved = value[i];
      value[i] = saved + kGradCheckStep;
      const double plus = objective();
      value[i] = saved - kGradCheckStep;
      const double minus = objective();
      value[i] = saved;
      const double numeric = (plus - minus) / (2.0 * kGradCheckStep);
      const double analytic = grad.empty() ? 0.0 : grad[i];
      result.max_relative_error =
          std::max(result.max_relative_error, gradient_relative_error(analytic, numeric));
      ++result.entries_checked;
    }
  };
  for (std::size_t k = 0; k < inputs.size(); ++k) probe(inputs[k], input_grads[k]);
  for (Parameter<double>* p : c.parameters) {
    const Tensor<double> grad = p->grad;
    probe(p->value, grad);
  }
  return result;
}

namespace {

constexpr double kKinks[] = {-3.0, 0.0, 3.0, 6.0};

Tensor<double> random_tensor(Shape dims, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(std::move(dims));
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

// Values kept at least `margin` away from every activation kink.
Tensor<double> kink_free_tensor(Shape dims, Rng& rng, double lo, double hi, double margin = 0.05) {
  Tensor<double> t(std::move(dims));
  for (double& v : t.values()) {
    while (true) {
      v = rng.uniform(lo, hi);
      bool ok = true;
      for (double k : kKinks) ok = ok && std::abs(v - k) > margin;
      if (ok) break;
    }
  }
  return t;
}

// Distinct values, pairwise separated, so max pooling has no ties.
Tensor<double> distinct_tensor(Shape dims, Rng& rng) {
  Tensor<double> t(std::move(dims));
  std::vector<std::size_t> order(t.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(std::span<std::size_t>(order));
  for (std::size_t i = 0; i < order.size(); ++i) {
    t[i] = static_cast<double>(order[i]) / static_cast<double>(order.size()) - 0.5;
  }
  return t;
}

Parameter<double> make_param(const std::string& name, Shape dims, Rng& rng, double scale = 0.5) {
  return Parameter<double>(name, random_tensor(std::move(dims), rng, -scale, scale), true);
}

template <typename M>
std::vector<Parameter<double>*> module_parameters(M& module) {
  std::vector<Parameter<double>*> out;
  StateVisitor<double> v;
  v.parameter = [&](Parameter<double>& p) { out.push_back(&p); };
  v.buffer = [](const std::string&, Tensor<double>&) {};
  module.visit(v);
  return out;
}

// Shifts BN affine parameters away from their identity init so the check
// exercises non-trivial gamma/beta.
template <typename M>
void perturb_all(M& module, Rng& rng) {
  for (Parameter<double>* p : module_parameters(module)) {
    for (double& v : p->value.values()) v += rng.uniform(-0.2, 0.2);
  }
}

struct Suite {
  std::uint64_t seed;
  Rng rng;
  GradCheckReport report;
  std::vector<std::unique_ptr<Parameter<double>>> params;
  std::vector<std::unique_ptr<Module<double>>> modules;

  explicit Suite(std::uint64_t s) : seed(s), rng(mix_seed(s, 0x5817e)) {}

  Parameter<double>* param(const std::string& name, Shape dims, double scale = 0.5) {
    params.push_back(std::make_unique<Parameter<double>>(make_param(name, std::move(dims), rng, scale)));
    return params.back().get();
  }

  void run(GradCheckCase c) { report.results.push_back(check_gradients(c, seed)); }

  void conv(const std::string& op, const std::string& family, ConvParams p, std::size_t h,
            bool bias) {
    Parameter<double>* w = param(op + ".w", p.weight_shape());
    Parameter<double>* b = bias ? param(op + ".b", {p.out_channels}) : nullptr;
    GradCheckCase c{op, family, kPrimitiveTolerance, {random_tensor({2, p.in_channels, h, h + 1}, rng)},
                    {w}, nullptr};
    if (b) c.parameters.push_back(b);
    c.fn = [w, b, p](Tape<double>& t, const std::vector<Var>& in) {
      const Var wv = t.parameter(*w);
      if (b) {
        const Var bv = t.parameter(*b);
        return conv2d(t, in[0], wv, &bv, p);
      }
      return conv2d<double>(t, in[0], wv, nullptr, p);
    };
    run(std::move(c));
  }

  template <typename M>
  void module(const std::string& op, const std::string& family, double threshold,
              std::unique_ptr<M> m, Shape input_dims, Mode mode = Mode::kTrain) {
    m->initialize(rng);
    perturb_all(*m, rng);
    M* raw = m.get();
    modules.push_back(std::move(m));
    GradCheckCase c{op, family, threshold, {random_tensor(std::move(input_dims), rng)},
                    module_parameters(*raw), nullptr};
    c.fn = [raw, mode](Tape<double>& t, const std::vector<Var>& in) {
      return raw->forward(t, in[0], mode);
    };
    run(std::move(c));
  }
};

const char* short_name(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kHardSwish: return "hswish";
    default: return activation_name(a);
  }
}

}  // namespace

GradCheckReport run_gradient_suite(std::uint64_t seed) {
  Suite s(seed);

  // Convolutions.
  s.conv("conv2d.3x3", "conv2d", ConvParams::square(3, 4, 3), 6, false);
  s.conv("conv2d.3x3.bias", "conv2d", ConvParams::square(3, 4, 3), 5, true);
  s.conv("conv2d.3x3.s2", "conv2d_strided", ConvParams::square(3, 5, 3, 2), 7, false);
  s.conv("conv2d.5x5.s2", "conv2d_strided", ConvParams::square(2, 3, 5, 2), 8, true);
  s.conv("conv2d.grouped", "conv2d_grouped", ConvParams::square(4, 6, 3, 1, 2), 5, false);
  s.conv("conv2d.1x1", "conv2d_pointwise", ConvParams::square(5, 7, 1), 4, true);
  s.conv("dwconv.3x3", "depthwise_conv", ConvParams::depthwise(4, 3, 1), 6, false);
  s.conv("dwconv.5x5.s2", "depthwise_conv", ConvParams::depthwise(3, 5, 2), 9, false);
  {
    ConvParams p = ConvParams::square(2, 3, 3);
    p.padding = 0;
    s.conv("conv2d.3x3.valid", "conv2d", p, 6, true);
  }

  // Activations.
  for (Activation a : {Activation::kRelu, Activation::kRelu6, Activation::kSigmoid,
                       Activation::kSwish, Activation::kHardSigmoid, Activation::kHardSwish}) {
    GradCheckCase c{std::string("activation.") + short_name(a), "activation", kPrimitiveTolerance,
                    {kink_free_tensor({2, 3, 4, 4}, s.rng, -7.0, 8.0)}, {}, nullptr};
    c.fn = [a](Tape<double>& t, const std::vector<Var>& in) { return activation(t, in[0], a); };
    s.run(std::move(c));
  }

  // Batch norm in both modes.
  for (Mode mode : {Mode::kTrain, Mode::kEval}) {
    const std::size_t ch = 3;
    auto mean = std::make_shared<std::vector<double>>(ch);
    auto var = std::make_shared<std::vector<double>>(ch);
    for (std::size_t i = 0; i < ch; ++i) {
      (*mean)[i] = s.rng.uniform(-0.5, 0.5);
      (*var)[i] = s.rng.uniform(0.5, 1.5);
    }
    GradCheckCase c{mode == Mode::kTrain ? "batch_norm.train" : "batch_norm.eval", "batch_norm",
                    kPrimitiveTolerance,
                    {random_tensor({3, ch, 3, 4}, s.rng), random_tensor({ch}, s.rng, 0.5, 1.5),
                     random_tensor({ch}, s.rng)},
                    {},
                    nullptr};
    c.fn = [mean, var, mode](Tape<double>& t, const std::vector<Var>& in) {
      // Running statistics are restored so every evaluation sees the same state.
      std::vector<double> m = *mean, v = *var;
      return batch_norm(t, in[0], in[1], in[2], std::span<double>(m), std::span<double>(v), mode);
    };
    s.run(std::move(c));
  }

  {
    GradCheckCase c{"global_avg_pool", "pooling", kPrimitiveTolerance,
                    {random_tensor({2, 3, 5, 4}, s.rng)}, {}, nullptr};
    c.fn = [](Tape<double>& t, const std::vector<Var>& in) { return global_avg_pool(t, in[0]); };
    s.run(std::move(c));
  }
  {
    GradCheckCase c{"max_pool.3x3.s2", "max_pool", kPrimitiveTolerance,
                    {distinct_tensor({2, 2, 7, 7}, s.rng)}, {}, nullptr};
    c.fn = [](Tape<double>& t, const std::vector<Var>& in) { return max_pool(t, in[0], 3, 2, 1); };
    s.run(std::move(c));
  }
  {
    Parameter<double>* w = s.param("dense.w", {12, 5});
    Parameter<double>* b = s.param("dense.b", {5});
    GradCheckCase c{"dense", "dense", kPrimitiveTolerance, {random_tensor({3, 12}, s.rng)}, {w, b},
                    nullptr};
    c.fn = [w, b](Tape<double>& t, const std::vector<Var>& in) {
      const Var bv = t.parameter(*b);
      return dense(t, in[0], t.parameter(*w), &bv);
    };
    s.run(std::move(c));
  }
  {
    GradCheckCase c{"add", "elementwise", kPrimitiveTolerance,
                    {random_tensor({2, 3, 4, 4}, s.rng), random_tensor({2, 3, 4, 4}, s.rng)}, {},
                    nullptr};
    c.fn = [](Tape<double>& t, const std::vector<Var>& in) { return add(t, in[0], in[1]); };
    s.run(std::move(c));
  }
  {
    GradCheckCase c{"channel_scale", "elementwise", kPrimitiveTolerance,
                    {random_tensor({2, 3, 4, 5}, s.rng), random_tensor({2, 3, 1, 1}, s.rng, 0.0, 1.0)},
                    {},
                    nullptr};
    c.fn = [](Tape<double>& t, const std::vector<Var>& in) { return channel_scale(t, in[0], in[1]); };
    s.run(std::move(c));
  }
  {
    GradCheckCase c{"reshape", "reshape", kPrimitiveTolerance, {random_tensor({2, 3, 2, 2}, s.rng)},
                    {}, nullptr};
    c.fn = [](Tape<double>& t, const std::vector<Var>& in) { return reshape(t, in[0], {2, 12}); };
    s.run(std::move(c));
  }
  {
    auto labels = std::make_shared<std::vector<int>>(std::vector<int>{2, 0, 4, 1});
    GradCheckCase c{"softmax_cross_entropy", "loss", kPrimitiveTolerance,
                    {random_tensor({4, 5}, s.rng, -2.0, 2.0)}, {}, nullptr};
    c.fn = [labels](Tape<double>& t, const std::vector<Var>& in) {
      return softmax_cross_entropy(t, in[0], std::span<const int>(*labels));
    };
    s.run(std::move(c));
  }

  // Blocks.
  s.module("conv_unit.bn.hswish", "conv_unit", kBlockTolerance,
           std::make_unique<ConvUnit<double>>("cu", ConvParams::square(3, 4, 3, 2), true,
                                              Activation::kHardSwish),
           {3, 3, 6, 6});
  s.module("squeeze_excite", "squeeze_excite", kBlockTolerance,
           std::make_unique<SqueezeExcite<double>>("se", SEConfig{8, 4}), {2, 8, 3, 3});
  s.module("dense_unit", "dense", kBlockTolerance,
           std::make_unique<DenseUnit<double>>("du", 2 * 3 * 3, 4, Activation::kIdentity),
           {3, 2, 3, 3});
  s.module("residual_bottleneck", "residual_block", kBlockTolerance,
           std::make_unique<ResidualBottleneck<double>>("rb", 4, 3, 6, 3, 2, Activation::kRelu),
           {2, 4, 6, 6});
  s.module("efficient_last_stage", "last_stage", kBlockTolerance,
           std::make_unique<EfficientLastStage<double>>("ls", 4, 6, 8, 3), {3, 4, 3, 3});

  // Every bneck row of MobileNetV3-Large, channel counts divided by 8.
  const ArchSpec large = mobilenetv3_large_spec(3, 10, 1.0);
  const auto shapes = infer_shapes(large);
  std::size_t row = 0;
  for (std::size_t i = 0; i < large.layers.size(); ++i) {
    const LayerSpec& l = large.layers[i];
    if (l.op != LayerOp::kBneck) continue;
    ++row;
    BneckSpec b;
    b.in_channels = shapes[i].in_channels / 8;
    b.exp_channels = *l.exp / 8;
    b.out_channels = l.out / 8;
    b.kernel = l.kernel;
    b.stride = l.stride;
    b.use_se = l.se;
    b.nonlinearity = to_activation(l.nl);
    char name[64];
    std::snprintf(name, sizeof name, "bneck.%02zu.%zux%zu.%s%s%s", row, l.kernel, l.kernel,
                  short_name(b.nonlinearity), b.use_se ? ".se" : "", b.stride == 2 ? ".s2" : "");
    s.module(name, "bneck", kBlockTolerance, std::make_unique<Bneck<double>>(name, b),
             {2, b.in_channels, 6, 6});
  }
  return std::move(s.report);
}

}  // namespace lightnet
