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

#include "lightnet/autograd.hpp"

#include <utility>

#include "lightnet/error.hpp"

namespace lightnet {

template <typename T>
typename Tape<T>::Node& Tape<T>::node(Var v, const char* what) {
  if (!v.valid() || v.id >= nodes_.size()) {
    fail(ErrorCode::kState, what, ": variable ", v.id, " was not recorded on this tape (",
         nodes_.size(), " records)");
  }
  return nodes_[v.id];
}

template <typename T>
const typename Tape<T>::Node& Tape<T>::node(Var v, const char* what) const {
  return const_cast<Tape*>(this)->node(v, what);
}

template <typename T>
Var Tape<T>::leaf(Tensor<T> value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::parameter(Parameter<T>& param) {
  require(!param.value.empty(), "parameter '", param.name, "' has no value");
  Node n;
  n.value = param.value;
  n.requires_grad = true;
  n.param = &param;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::record(Tensor<T> value, std::initializer_list<Var> parents, BackwardFn backward,
                    const char* op_name) {
  value.check_finite(op_name);
  bool needs = false;
  for (Var p : parents) needs = needs || node(p, op_name).requires_grad;
  Node n;
  n.value = std::move(value);
  n.requires_grad = needs;
  if (needs) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

template <typename T>
const Tensor<T>& Tape<T>::value(Var v) const {
  return node(v, "Tape::value").value;
}

template <typename T>
const Tensor<T>& Tape<T>::grad(Var v) const {
  return node(v, "Tape::grad").grad;
}

template <typename T>
bool Tape<T>::requires_grad(Var v) const {
  return node(v, "Tape::requires_grad").requires_grad;
}

template <typename T>
void Tape<T>::accumulate(Var v, const Tensor<T>& grad) {
  Node& n = node(v, "Tape::accumulate");
  if (!n.requires_grad) return;
  require(grad.dims() == n.value.dims(), "gradient shape ", shape_to_string(grad.dims()),
          " does not match value shape ", shape_to_string(n.value.dims()));
  if (n.grad.empty()) {
    n.grad = grad;
    return;
  }
  for (std::size_t i = 0; i < grad.size(); ++i) n.grad[i] += grad[i];
}

template <typename T>
void Tape<T>::backward(Var root, const Tensor<T>& seed) {
  if (nodes_.empty()) fail(ErrorCode::kState, "backward called before any forward pass");
  Node& r = node(root, "Tape::backward");
  require(seed.dims() == r.value.dims(), "backward seed shape ", shape_to_string(seed.dims()),
          " does not match root shape ", shape_to_string(r.value.dims()));
  for (Node& n : nodes_) n.grad = Tensor<T>();
  if (!r.requires_grad) return;
  r.grad = seed;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty()) continue;
    if (n.backward) n.backward(*this, n.grad);
    if (n.param != nullptr) {
      Parameter<T>& p = *n.param;
      if (p.grad.empty()) {
        p.grad = n.grad;
      } else {
        for (std::size_t j = 0; j < p.grad.size(); ++j) p.grad[j] += n.grad[j];
      }
    }
  }
}

template <typename T>
void Tape<T>::backward(Var root) {
  const Tensor<T>& v = value(root);
  backward(root, Tensor<T>(v.dims(), T{1}));
}

template class Tape<float>;
template class Tape<double>;

// ---------------------------------------------------------------------------

template <typename T>
Var conv2d(Tape<T>& tape, Var x, Var weight, const Var* bias, const ConvParams& params) {
  const Tensor<T>* b = bias != nullptr ? &tape.value(*bias) : nullptr;
  Tensor<T> y = conv2d_forward(tape.value(x), tape.value(weight), b, params);
  const Var bias_var = bias != nullptr ? *bias : Var{};
  auto backward = [x, weight, bias_var, params](Tape<T>& t, const Tensor<T>& g) {
    ConvGrads<T> grads =
        conv2d_backward(g, t.value(x), t.value(weight), bias_var.valid(), params);
    t.accumulate(x, grads.input);
    t.accumulate(weight, grads.weight);
    if (bias_var.valid()) t.accumulate(bias_var, grads.bias);
  };
  if (bias != nullptr) return tape.record(std::move(y), {x, weight, *bias}, backward, "conv2d");
  return tape.record(std::move(y), {x, weight}, backward, "conv2d");
}

template <typename T>
Var activation(Tape<T>& tape, Var x, Activation kind) {
  Tensor<T> y = activation_forward(tape.value(x), kind);
  return tape.record(
      std::move(y), {x},
      [x, kind](Tape<T>& t, const Tensor<T>& g) {
        t.accumulate(x, activation_backward(g, t.value(x), kind));
      },
      activation_name(kind));
}

template <typename T>
Var batch_norm(Tape<T>& tape, Var x, Var gamma, Var beta, std::span<T> running_mean,
               std::span<T> running_var, Mode mode, double epsilon, double momentum) {
  BatchNormCache<T> cache;
  Tensor<T> y = batch_norm_forward<T>(tape.value(x), tape.value(gamma).values(),
                                      tape.value(beta).values(), running_mean, running_var,
                                      epsilon, momentum, mode, &cache);
  return tape.record(
      std::move(y), {x, gamma, beta},
      [x, gamma, beta, cache = std::move(cache)](Tape<T>& t, const Tensor<T>& g) {
        BatchNormGrads<T> grads = batch_norm_backward(g, t.value(gamma).values(), cache);
        t.accumulate(x, grads.input);
        t.accumulate(gamma, grads.gamma);
        t.accumulate(beta, grads.beta);
      },
      "batch_norm");
}

template <typename T>
Var global_avg_pool(Tape<T>& tape, Var x) {
  Tensor<T> y = global_avg_pool_forward(tape.value(x));
  return tape.record(
      std::move(y), {x},
      [x](Tape<T>& t, const Tensor<T>& g) {
        t.accumulate(x, global_avg_pool_backward(g, t.value(x).dims()));
      },
      "global_avg_pool");
}

template <typename T>
Var max_pool(Tape<T>& tape, Var x, std::size_t kernel, std::size_t stride, std::size_t padding) {
  MaxPoolResult<T> r = max_pool_forward(tape.value(x), kernel, stride, padding);
  return tape.record(
      std::move(r.output), {x},
      [x, argmax = std::move(r.argmax)](Tape<T>& t, const Tensor<T>& g) {
        t.accumulate(x, max_pool_backward<T>(g, argmax, t.value(x).dims()));
      },
      "max_pool");
}

template <typename T>
Var dense(Tape<T>& tape, Var x, Var weight, const Var* bias) {
  const Tensor<T>* b = bias != nullptr ? &tape.value(*bias) : nullptr;
  Tensor<T> y = dense_forward(tape.value(x), tape.value(weight), b);
  const Var bias_var = bias != nullptr ? *bias : Var{};
  auto backward = [x, weight, bias_var](Tape<T>& t, const Tensor<T>& g) {
    DenseGrads<T> grads = dense_backward(g, t.value(x), t.value(weight), bias_var.valid());
    t.accumulate(x, grads.input);
    t.accumulate(weight, grads.weight);
    if (bias_var.valid()) t.accumulate(bias_var, grads.bias);
  };
  if (bias != nullptr) return tape.record(std::move(y), {x, weight, *bias}, backward, "dense");
  return tape.record(std::move(y), {x, weight}, backward, "dense");
}

template <typename T>
Var add(Tape<T>& tape, Var a, Var b) {
  Tensor<T> y = add_forward(tape.value(a), tape.value(b));
  return tape.record(
      std::move(y), {a, b},
      [a, b](Tape<T>& t, const Tensor<T>& g) {
        t.accumulate(a, g);
        t.accumulate(b, g);
      },
      "add");
}

template <typename T>
Var channel_scale(Tape<T>& tape, Var x, Var gate) {
  Tensor<T> y = channel_scale_forward(tape.value(x), tape.value(gate));
  return tape.record(
      std::move(y), {x, gate},
      [x, gate](Tape<T>& t, const Tensor<T>& g) {
        ChannelScaleGrads<T> grads = channel_scale_backward(g, t.value(x), t.value(gate));
        t.accumulate(x, grads.input);
        t.accumulate(gate, grads.gate);
      },
      "channel_scale");
}

template <typename T>
Var reshape(Tape<T>& tape, Var x, Shape dims) {
  Tensor<T> y = tape.value(x).reshaped(std::move(dims));
  return tape.record(
      std::move(y), {x},
      [x](Tape<T>& t, const Tensor<T>& g) { t.accumulate(x, g.reshaped(t.value(x).dims())); },
      "reshape");
}

template <typename T>
Var softmax_cross_entropy(Tape<T>& tape, Var logits, std::span<const int> labels) {
  LossResult<T> r = softmax_cross_entropy(tape.value(logits), labels);
  Tensor<T> loss(Shape{1}, static_cast<T>(r.loss));
  return tape.record(
      std::move(loss), {logits},
      [logits, grad = std::move(r.grad)](Tape<T>& t, const Tensor<T>& g) {
        Tensor<T> scaled = grad;
        const T s = g[0];
        for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] *= s;
        t.accumulate(logits, scaled);
      },
      "softmax_cross_entropy");
}

#define LIGHTNET_INSTANTIATE_AUTOGRAD(T)                                                       \
  template Var conv2d(Tape<T>&, Var, Var, const Var*, const ConvParams&);                      \
  template Var activation(Tape<T>&, Var, Activation);                                          \
  template Var batch_norm(Tape<T>&, Var, Var, Var, std::span<T>, std::span<T>, Mode, double,   \
                          double);                                                             \
  template Var global_avg_pool(Tape<T>&, Var);                                                 \
  template Var max_pool(Tape<T>&, Var, std::size_t, std::size_t, std::size_t);                 \
  template Var dense(Tape<T>&, Var, Var, const Var*);                                          \
  template Var add(Tape<T>&, Var, Var);                                                        \
  template Var channel_scale(Tape<T>&, Var, Var);                                              \
  template Var reshape(Tape<T>&, Var, Shape);                                                  \
  template Var softmax_cross_entropy(Tape<T>&, Var, std::span<const int>);

LIGHTNET_INSTANTIATE_AUTOGRAD(float)
LIGHTNET_INSTANTIATE_AUTOGRAD(double)

#undef LIGHTNET_INSTANTIATE_AUTOGRAD

}  // namespace lightnet
