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

#ifndef LIGHTNET_TENSOR_HPP_
#define LIGHTNET_TENSOR_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace lightnet {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& dims);
std::string shape_to_string(const Shape& dims);

// Dense row-major array. Image batches are laid out N,C,H,W.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape dims, T fill = T{0});
  Tensor(Shape dims, std::vector<T> values);

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.dims_); }

  const Shape& dims() const { return dims_; }
  std::size_t rank() const { return dims_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }
  T* data() { return values_.data(); }
  const T* data() const { return values_.data(); }

  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }

  // 4-D accessor for N,C,H,W tensors.
  T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return values_[((n * dims_[1] + c) * dims_[2] + h) * dims_[3] + w];
  }
  const T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return values_[((n * dims_[1] + c) * dims_[2] + h) * dims_[3] + w];
  }

  // Same values, new dims; the element count must match.
  Tensor reshaped(Shape dims) const&;
  Tensor reshaped(Shape dims) &&;

  void fill(T value);
  bool all_finite() const;
  // Throws a numeric error naming `what` if any value is NaN or Inf.
  void check_finite(const char* what) const;

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(values_.begin(), values_.end());
    return Tensor<U>(dims_, std::move(out));
  }

  bool operator==(const Tensor& other) const = default;

 private:
  Shape dims_;
  std::vector<T> values_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace lightnet

#endif  // LIGHTNET_TENSOR_HPP_
