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

#include "lightnet/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "lightnet/error.hpp"

namespace lightnet {

std::size_t shape_size(const Shape& dims) {
  std::size_t n = 1;
  for (std::size_t d : dims) n *= d;
  return n;
}

std::string shape_to_string(const Shape& dims) {
  std::string out;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(dims[i]);
  }
  return out;
}

template <typename T>
Tensor<T>::Tensor(Shape dims, T fill) : dims_(std::move(dims)) {
  for (std::size_t d : dims_) require(d > 0, "tensor dims must be positive, got ", shape_to_string(dims_));
  values_.assign(shape_size(dims_), fill);
}

template <typename T>
Tensor<T>::Tensor(Shape dims, std::vector<T> values)
    : dims_(std::move(dims)), values_(std::move(values)) {
  for (std::size_t d : dims_) require(d > 0, "tensor dims must be positive, got ", shape_to_string(dims_));
  require(shape_size(dims_) == values_.size(), "tensor of shape ", shape_to_string(dims_),
          " needs ", shape_size(dims_), " values, got ", values_.size());
}

template <typename T>
std::size_t Tensor<T>::dim(std::size_t axis) const {
  require(axis < dims_.size(), "axis ", axis, " out of range for rank ", dims_.size());
  return dims_[axis];
}

template <typename T>
Tensor<T> Tensor<T>::reshaped(Shape dims) const& {
  Tensor copy = *this;
  return std::move(copy).reshaped(std::move(dims));
}

template <typename T>
Tensor<T> Tensor<T>::reshaped(Shape dims) && {
  require(shape_size(dims) == values_.size(), "cannot reshape ", shape_to_string(dims_), " to ",
          shape_to_string(dims));
  dims_ = std::move(dims);
  return std::move(*this);
}

template <typename T>
void Tensor<T>::fill(T value) {
  std::fill(values_.begin(), values_.end(), value);
}

template <typename T>
bool Tensor<T>::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](T v) { return std::isfinite(v); });
}

template <typename T>
void Tensor<T>::check_finite(const char* what) const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      fail(ErrorCode::kNumeric, what, ": non-finite value ", values_[i], " at flat index ", i,
           " of tensor ", shape_to_string(dims_));
    }
  }
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace lightnet
