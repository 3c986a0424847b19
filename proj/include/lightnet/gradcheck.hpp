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

// Central finite-difference verification of every differentiable op and
// block, in double precision.

#ifndef LIGHTNET_GRADCHECK_HPP_
#define LIGHTNET_GRADCHECK_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lightnet/autograd.hpp"
#include "lightnet/tensor.hpp"

namespace lightnet {

inline constexpr double kGradCheckStep = 1e-5;
inline constexpr double kPrimitiveTolerance = 1e-4;
inline constexpr double kBlockTolerance = 1e-3;

// |analytic - numeric| / max(|analytic|, |numeric|, floor).
double gradient_relative_error(double analytic, double numeric, double floor = 1e-6);

struct GradCheckResult {
  std::string op;
  std::string family;
  double max_relative_error = 0.0;
  double threshold = 0.0;
  std::size_t entries_checked = 0;

  bool passed() const { return max_relative_error < threshold; }
};

struct GradCheckReport {
  std::vector<GradCheckResult> results;

  bool all_passed() const;
  std::size_t family_count() const;
  std::vector<std::string> failures() const;
  std::string render() const;
};

// Builds the op's output from fresh leaves on `tape`.
using GradFunction =
    std::function<Var(Tape<double>& tape, const std::vector<Var>& inputs)>;

struct GradCheckCase {
  std::string op;
  std::string family;
  double threshold = kPrimitiveTolerance;
  std::vector<Tensor<double>> inputs;
  std::vector<Parameter<double>*> parameters;  // owned by the caller
  GradFunction fn;
};

// Compares reverse-mode gradients of <fn(inputs), R> (R a fixed random
// projection) with central differences. At most `max_entries` randomly
// chosen entries per tensor are probed.
GradCheckResult check_gradients(const GradCheckCase& c, std::uint64_t seed,
                                std::size_t max_entries = 48);

GradCheckReport run_gradient_suite(std::uint64_t seed = 0);

}  // namespace lightnet

#endif  // LIGHTNET_GRADCHECK_HPP_
