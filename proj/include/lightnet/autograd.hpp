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

// Reverse-mode differentiation over the primitive kernels in ops.hpp.
//
// A Tape records every value produced during one forward pass together with
// a closure that routes the output gradient back to the operands. Values on
// the tape are immutable once recorded. backward() walks the records in
// reverse creation order, which is a valid topological order because an op
// can only consume values that already exist.

#ifndef LIGHTNET_AUTOGRAD_HPP_
#define LIGHTNET_AUTOGRAD_HPP_

#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lightnet/ops.hpp"
#include "lightnet/tensor.hpp"

namespace lightnet {

// A learnable tensor with its gradient accumulator and optimizer slot.
template <typename T>
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor<T> value, bool decay)
      : name(std::move(name)), value(std::move(value)), decay(decay) {}

  std::string name;
  Tensor<T> value;
  Tensor<T> grad;      // empty until the first backward pass
  Tensor<T> velocity;  // empty until the first optimizer step
  bool decay = false;  // weight decay applies (conv/dense weights only)

  void zero_grad() {
    if (!grad.empty()) grad.fill(T{0});
  }
};

struct Var {
  static constexpr std::size_t kInvalid = std::numeric_limits<std::size_t>::max();
  std::size_t id = kInvalid;
  bool valid() const { return id != kInvalid; }
};

template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor<T>& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // A constant or input. requires_grad inputs receive gradients readable via grad().
  Var leaf(Tensor<T> value, bool requires_grad = false);
  // A parameter leaf; backward() accumulates into param.grad.
  Var parameter(Parameter<T>& param);

  // Records an op output. The closure receives the output gradient and
  // calls accumulate() on operands. Output finiteness is checked here.
  Var record(Tensor<T> value, std::initializer_list<Var> parents, BackwardFn backward,
             const char* op_name);

  const Tensor<T>& value(Var v) const;
  // Gradient of the last backward() root with respect to v; empty when no
  // gradient reached v.
  const Tensor<T>& grad(Var v) const;
  bool requires_grad(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  void accumulate(Var v, const Tensor<T>& grad);

  // Seeds d(root)/d(root) = seed (ones when omitted) and propagates.
  void backward(Var root, const Tensor<T>& seed);
  void backward(Var root);

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    Parameter<T>* param = nullptr;
    BackwardFn backward;
  };

  Node& node(Var v, const char* what);
  const Node& node(Var v, const char* what) const;

  std::deque<Node> nodes_;  // stable references across push_back
};

extern template class Tape<float>;
extern template class Tape<double>;

// ---------------------------------------------------------------------------
// Differentiable ops. Each reads operand values from the tape and records
// its output.

template <typename T>
Var conv2d(Tape<T>& tape, Var x, Var weight, const Var* bias, const ConvParams& params);

template <typename T>
Var activation(Tape<T>& tape, Var x, Activation kind);

// Batch normalization with parameter leaves gamma/beta; running statistics
// are updated in place during train mode.
template <typename T>
Var batch_norm(Tape<T>& tape, Var x, Var gamma, Var beta, std::span<T> running_mean,
               std::span<T> running_var, Mode mode, double epsilon = kBatchNormEpsilon,
               double momentum = kBatchNormMomentum);

template <typename T>
Var global_avg_pool(Tape<T>& tape, Var x);

template <typename T>
Var max_pool(Tape<T>& tape, Var x, std::size_t kernel, std::size_t stride, std::size_t padding);

template <typename T>
Var dense(Tape<T>& tape, Var x, Var weight, const Var* bias);

template <typename T>
Var add(Tape<T>& tape, Var a, Var b);

template <typename T>
Var channel_scale(Tape<T>& tape, Var x, Var gate);

template <typename T>
Var reshape(Tape<T>& tape, Var x, Shape dims);

// Scalar loss node: mean softmax cross-entropy over the batch.
template <typename T>
Var softmax_cross_entropy(Tape<T>& tape, Var logits, std::span<const int> labels);

}  // namespace lightnet

#endif  // LIGHTNET_AUTOGRAD_HPP_
