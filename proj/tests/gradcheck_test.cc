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

#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "lightnet/autograd.hpp"
#include "lightnet/gradcheck.hpp"

namespace lightnet {
namespace {

// y = x^2 with a deliberately selectable backward.
Var square(Tape<double>& tape, Var x, double slope) {
  const Tensor<double>& in = tape.value(x);
  Tensor<double> out(in.dims());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] * in[i];
  const Tensor<double> saved = in;
  return tape.record(
      std::move(out), {x},
      [x, saved, slope](Tape<double>& t, const Tensor<double>& g) {
        Tensor<double> dx(g.dims());
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] = slope * saved[i] * g[i];
        t.accumulate(x, dx);
      },
      "square");
}

GradCheckCase square_case(double slope) {
  GradCheckCase c;
  c.op = "square";
  c.family = "test";
  c.inputs = {Tensor<double>({2, 3}, std::vector<double>{0.3, -0.7, 1.1, 0.2, -0.4, 0.9})};
  c.fn = [slope](Tape<double>& tape, const std::vector<Var>& in) {
    return square(tape, in[0], slope);
  };
  return c;
}

TEST(GradCheckTest, RelativeErrorDefinition) {
  EXPECT_DOUBLE_EQ(gradient_relative_error(1.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(gradient_relative_error(2.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(gradient_relative_error(-1.0, 1.0), 2.0);
  // Both tiny: the floor keeps the ratio bounded.
  EXPECT_DOUBLE_EQ(gradient_relative_error(1e-9, 0.0), 1e-3);
}

TEST(GradCheckTest, CorrectBackwardPasses) {
  const GradCheckResult r = check_gradients(square_case(2.0), 1);
  EXPECT_TRUE(r.passed()) << r.max_relative_error;
  EXPECT_LT(r.max_relative_error, 1e-8);
  EXPECT_EQ(r.entries_checked, 6u);
}

TEST(GradCheckTest, WrongBackwardIsCaught) {
  const GradCheckResult r = check_gradients(square_case(2.01), 1);
  EXPECT_FALSE(r.passed());
  EXPECT_GT(r.max_relative_error, 1e-3);
}

TEST(GradCheckTest, ParametersAreChecked) {
  Parameter<double> p("p", Tensor<double>({3}, std::vector<double>{0.5, -1.5, 2.0}), false);
  GradCheckCase c;
  c.op = "param_square";
  c.family = "test";
  c.parameters = {&p};
  c.fn = [&p](Tape<double>& tape, const std::vector<Var>&) {
    return square(tape, tape.parameter(p), 3.0);
  };
  EXPECT_FALSE(check_gradients(c, 2).passed());
  c.fn = [&p](Tape<double>& tape, const std::vector<Var>&) {
    return square(tape, tape.parameter(p), 2.0);
  };
  EXPECT_TRUE(check_gradients(c, 2).passed());
}

TEST(GradCheckTest, FullSuitePasses) {
  const GradCheckReport report = run_gradient_suite(0);
  EXPECT_TRUE(report.all_passed());
  for (const std::string& f : report.failures()) ADD_FAILURE() << f;
  EXPECT_GE(report.family_count(), 10u);
  std::set<std::string> ops;
  for (const GradCheckResult& r : report.results) {
    EXPECT_TRUE(ops.insert(r.op).second) << r.op;
    EXPECT_GT(r.entries_checked, 0u) << r.op;
  }
  EXPECT_TRUE(ops.contains("dwconv.3x3"));
  std::size_t bnecks = 0;
  for (const std::string& op : ops) bnecks += op.rfind("bneck.", 0) == 0;
  EXPECT_EQ(bnecks, 15u);
  const std::string text = report.render();
  EXPECT_NE(text.find("all passed"), std::string::npos);
}

TEST(GradCheckTest, SuiteIsDeterministic) {
  EXPECT_EQ(run_gradient_suite(3).render(), run_gradient_suite(3).render());
}

}  // namespace
}  // namespace lightnet
