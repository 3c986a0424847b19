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

#include "lightnet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include "gemm.hpp"
#include "lightnet/error.hpp"

namespace lightnet {

namespace {

using std::ptrdiff_t;
using std::size_t;

void require_rank4(const Shape& dims, const char* op, const char* what) {
  require(dims.size() == 4, op, ": ", what, " must be rank 4 (N,C,H,W), got shape ",
          shape_to_string(dims));
}

// Range of output columns whose input column ow*stride + offset lies in [0, extent).
struct Span1D {
  ptrdiff_t lo;
  ptrdiff_t hi;  // exclusive
};

Span1D valid_outputs(ptrdiff_t offset, size_t stride, size_t extent, size_t out_extent) {
  const auto s = static_cast<ptrdiff_t>(stride);
  ptrdiff_t lo = 0;
  if (offset < 0) lo = (-offset + s - 1) / s;
  ptrdiff_t hi = 0;
  const ptrdiff_t last = static_cast<ptrdiff_t>(extent) - 1 - offset;
  if (last >= 0) hi = last / s + 1;
  hi = std::min<ptrdiff_t>(hi, static_cast<ptrdiff_t>(out_extent));
  if (hi < lo) hi = lo;
  return {lo, hi};
}

struct ConvGeometry {
  size_t n, c, h, w;       // input
  size_t ho, wo;           // output spatial
  size_t cin_g, cout_g;    // channels per group
  size_t kc;               // cin_g * kh * kw
  size_t plane;            // ho * wo
  size_t cols;             // n * plane
};

ConvGeometry geometry(const Shape& in, const ConvParams& p) {
  ConvGeometry g{};
  g.n = in[0];
  g.c = in[1];
  g.h = in[2];
  g.w = in[3];
  g.ho = p.output_extent(g.h, p.kernel_h);
  g.wo = p.output_extent(g.w, p.kernel_w);
  g.cin_g = p.in_channels / p.groups;
  g.cout_g = p.out_channels / p.groups;
  g.kc = g.cin_g * p.kernel_h * p.kernel_w;
  g.plane = g.ho * g.wo;
  g.cols = g.n * g.plane;
  return g;
}

// col[(ci*Kh + kh)*Kw + kw, n*plane + oh*Wo + ow] for one channel group.
template <typename T>
void im2col(const T* x, const ConvGeometry& g, const ConvParams& p, size_t group, T* col) {
  const auto pad = static_cast<ptrdiff_t>(p.padding);
  for (size_t ci = 0; ci < g.cin_g; ++ci) {
    const size_t channel = group * g.cin_g + ci;
    for (size_t kh = 0; kh < p.kernel_h; ++kh) {
      for (size_t kw = 0; kw < p.kernel_w; ++kw) {
        T* dst = col + ((ci * p.kernel_h + kh) * p.kernel_w + kw) * g.cols;
        const ptrdiff_t col_offset = static_cast<ptrdiff_t>(kw) - pad;
        const Span1D cols = valid_outputs(col_offset, p.stride, g.w, g.wo);
        for (size_t n = 0; n < g.n; ++n) {
          const T* plane = x + (n * g.c + channel) * g.h * g.w;
          for (size_t oh = 0; oh < g.ho; ++oh) {
            T* out = dst + n * g.plane + oh * g.wo;
            const ptrdiff_t ih = static_cast<ptrdiff_t>(oh * p.stride + kh) - pad;
            if (ih < 0 || ih >= static_cast<ptrdiff_t>(g.h)) {
              std::fill(out, out + g.wo, T{0});
              continue;
            }
            const T* row = plane + static_cast<size_t>(ih) * g.w;
            std::fill(out, out + cols.lo, T{0});
            for (ptrdiff_t ow = cols.lo; ow < cols.hi; ++ow) {
              out[ow] = row[ow * static_cast<ptrdiff_t>(p.stride) + col_offset];
            }
            std::fill(out + cols.hi, out + g.wo, T{0});
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, const ConvGeometry& g, const ConvParams& p, size_t group, T* x) {
  const auto pad = static_cast<ptrdiff_t>(p.padding);
  for (size_t ci = 0; ci < g.cin_g; ++ci) {
    const size_t channel = group * g.cin_g + ci;
    for (size_t kh = 0; kh < p.kernel_h; ++kh) {
      for (size_t kw = 0; kw < p.kernel_w; ++kw) {
        const T* src = col + ((ci * p.kernel_h + kh) * p.kernel_w + kw) * g.cols;
        const ptrdiff_t col_offset = static_cast<ptrdiff_t>(kw) - pad;
        const Span1D cols = valid_outputs(col_offset, p.stride, g.w, g.wo);
        for (size_t n = 0; n < g.n; ++n) {
          T* plane = x + (n * g.c + channel) * g.h * g.w;
          for (size_t oh = 0; oh < g.ho; ++oh) {
            const ptrdiff_t ih = static_cast<ptrdiff_t>(oh * p.stride + kh) - pad;
            if (ih < 0 || ih >= static_cast<ptrdiff_t>(g.h)) continue;
            const T* in = src + n * g.plane + oh * g.wo;
            T* row = plane + static_cast<size_t>(ih) * g.w;
            for (ptrdiff_t ow = cols.lo; ow < cols.hi; ++ow) {
              row[ow * static_cast<ptrdiff_t>(p.stride) + col_offset] += in[ow];
            }
          }
        }
      }
    }
  }
}

bool is_pointwise(const ConvParams& p) {
  return p.kernel_h == 1 && p.kernel_w == 1 && p.stride == 1 && p.padding == 0;
}

// Channel-major copy of one group's input: [cin_g, n*plane]. Equals im2col
// for a 1x1/stride-1/pad-0 kernel.
template <typename T>
void gather_channels(const T* x, size_t n_batch, size_t channels, size_t plane, size_t c0,
                     size_t count, T* dst) {
  for (size_t ci = 0; ci < count; ++ci) {
    for (size_t n = 0; n < n_batch; ++n) {
      const T* src = x + (n * channels + c0 + ci) * plane;
      std::copy(src, src + plane, dst + (ci * n_batch + n) * plane);
    }
  }
}

template <typename T>
void scatter_channels(const T* src, size_t n_batch, size_t channels, size_t plane, size_t c0,
                      size_t count, T* x) {
  for (size_t ci = 0; ci < count; ++ci) {
    for (size_t n = 0; n < n_batch; ++n) {
      const T* s = src + (ci * n_batch + n) * plane;
      T* d = x + (n * channels + c0 + ci) * plane;
      for (size_t i = 0; i < plane; ++i) d[i] += s[i];
    }
  }
}

template <typename T>
void depthwise_forward(const T* x, const T* weight, const ConvGeometry& g, const ConvParams& p,
                       T* out) {
  const auto pad = static_cast<ptrdiff_t>(p.padding);
  const auto stride = static_cast<ptrdiff_t>(p.stride);
  for (size_t n = 0; n < g.n; ++n) {
    for (size_t c = 0; c < g.c; ++c) {
      const T* in = x + (n * g.c + c) * g.h * g.w;
      T* o = out + (n * g.c + c) * g.plane;
      const T* wk = weight + c * p.kernel_h * p.kernel_w;
      for (size_t kh = 0; kh < p.kernel_h; ++kh) {
        for (size_t kw = 0; kw < p.kernel_w; ++kw) {
          const T wv = wk[kh * p.kernel_w + kw];
          const ptrdiff_t col_offset = static_cast<ptrdiff_t>(kw) - pad;
          const Span1D cols = valid_outputs(col_offset, p.stride, g.w, g.wo);
          for (size_t oh = 0; oh < g.ho; ++oh) {
            const ptrdiff_t ih = static_cast<ptrdiff_t>(oh * p.stride + kh) - pad;
            if (ih < 0 || ih >= static_cast<ptrdiff_t>(g.h)) continue;
            const T* row = in + static_cast<size_t>(ih) * g.w;
            T* o_row = o + oh * g.wo;
            if (stride == 1) {
              for (ptrdiff_t ow = cols.lo; ow < cols.hi; ++ow) {
                o_row[ow] += wv * row[ow + col_offset];
              }
            } else {
              for (ptrdiff_t ow = cols.lo; ow < cols.hi; ++ow) {
                o_row[ow] += wv * row[ow * stride + col_offset];
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
void depthwise_backward(const T* x, const T* weight, const T* grad_out, const ConvGeometry& g,
                        const ConvParams& p, T* grad_x, T* grad_w) {
  const auto pad = static_cast<ptrdiff_t>(p.padding);
  const auto stride = static_cast<ptrdiff_t>(p.stride);
  for (size_t n = 0; n < g.n; ++n) {
    for (size_t c = 0; c < g.c; ++c) {
      const T* in = x + (n * g.c + c) * g.h * g.w;
      T* gin = grad_x + (n * g.c + c) * g.h * g.w;
      const T* go = grad_out + (n * g.c + c) * g.plane;
      const T* wk = weight + c * p.kernel_h * p.kernel_w;
      T* gwk = grad_w + c * p.kernel_h * p.kernel_w;
      for (size_t kh = 0; kh < p.kernel_h; ++kh) {
        for (size_t kw = 0; kw < p.kernel_w; ++kw) {
          const T wv = wk[kh * p.kernel_w + kw];
          const ptrdiff_t col_offset = static_cast<ptrdiff_t>(kw) - pad;
          const Span1D cols = valid_outputs(col_offset, p.stride, g.w, g.wo);
          if (cols.hi <= cols.lo) continue;
          T acc = T{0};
          for (size_t oh = 0; oh < g.ho; ++oh) {
            const ptrdiff_t ih = static_cast<ptrdiff_t>(oh * p.stride + kh) - pad;
            if (ih < 0 || ih >= static_cast<ptrdiff_t>(g.h)) continue;
            const T* row = in + static_cast<size_t>(ih) * g.w;
            T* grow = gin + static_cast<size_t>(ih) * g.w;
            const T* go_row = go + oh * g.wo;
            if (stride == 1) {
              acc += detail::dot(go_row + cols.lo, row + cols.lo + col_offset,
                                 static_cast<size_t>(cols.hi - cols.lo));
              for (ptrdiff_t ow = cols.lo; ow < cols.hi; ++ow) {
                grow[ow + col_offset] += wv * go_row[ow];
              }
            } else {
              for (ptrdiff_t ow = cols.lo; ow < cols.hi; ++ow) {
                acc += go_row[ow] * row[ow * stride + col_offset];
                grow[ow * stride + col_offset] += wv * go_row[ow];
              }
            }
          }
          gwk[kh * p.kernel_w + kw] += acc;
        }
      }
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// ConvParams

ConvParams ConvParams::square(size_t in, size_t out, size_t kernel, size_t stride, size_t groups) {
  ConvParams p;
  p.kernel_h = p.kernel_w = kernel;
  p.stride = stride;
  p.padding = kernel > 0 ? (kernel - 1) / 2 : 0;
  p.groups = groups;
  p.in_channels = in;
  p.out_channels = out;
  return p;
}

ConvParams ConvParams::depthwise(size_t channels, size_t kernel, size_t stride) {
  return square(channels, channels, kernel, stride, channels);
}

void ConvParams::validate() const {
  require(kernel_h > 0 && kernel_w > 0, "conv2d: kernel must be positive, got ", kernel_h, "x",
          kernel_w);
  require(stride > 0, "conv2d: stride must be positive");
  require(groups > 0, "conv2d: groups must be positive");
  require(in_channels > 0 && out_channels > 0, "conv2d: channel counts must be positive");
  require(in_channels % groups == 0, "conv2d: in_channels ", in_channels,
          " not divisible by groups ", groups);
  require(out_channels % groups == 0, "conv2d: out_channels ", out_channels,
          " not divisible by groups ", groups);
}

size_t ConvParams::output_extent(size_t extent, size_t kernel) const {
  require(extent + 2 * padding >= kernel, "conv2d: kernel ", kernel, " larger than padded input ",
          extent, "+2*", padding);
  return (extent + 2 * padding - kernel) / stride + 1;
}

Shape ConvParams::weight_shape() const {
  return {out_channels, in_channels / groups, kernel_h, kernel_w};
}

Shape ConvParams::output_shape(const Shape& input) const {
  require_rank4(input, "conv2d", "input");
  return {input[0], out_channels, output_extent(input[2], kernel_h),
          output_extent(input[3], kernel_w)};
}

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>* bias,
                         const ConvParams& p) {
  p.validate();
  require_rank4(input.dims(), "conv2d", "input");
  require(input.dim(1) == p.in_channels, "conv2d: input channel dimension (dim 1) is ",
          input.dim(1), ", expected in_channels=", p.in_channels);
  require(weight.dims() == p.weight_shape(), "conv2d: weight shape ",
          shape_to_string(weight.dims()), " does not match expected ",
          shape_to_string(p.weight_shape()));
  if (bias != nullptr) {
    require(bias->dims() == Shape{p.out_channels}, "conv2d: bias shape ",
            shape_to_string(bias->dims()), ", expected ", p.out_channels);
  }
  input.check_finite("conv2d input");

  const ConvGeometry g = geometry(input.dims(), p);
  Tensor<T> out(Shape{g.n, p.out_channels, g.ho, g.wo});

  if (p.is_depthwise()) {
    depthwise_forward(input.data(), weight.data(), g, p, out.data());
  } else {
    std::vector<T> col(g.kc * g.cols);
    std::vector<T> out_cm(g.cout_g * g.cols);
    for (size_t grp = 0; grp < p.groups; ++grp) {
      if (is_pointwise(p)) {
        gather_channels(input.data(), g.n, g.c, g.plane, grp * g.cin_g, g.cin_g, col.data());
      } else {
        im2col(input.data(), g, p, grp, col.data());
      }
      std::fill(out_cm.begin(), out_cm.end(), T{0});
      detail::gemm_nn(g.cout_g, g.cols, g.kc, weight.data() + grp * g.cout_g * g.kc, col.data(),
                      out_cm.data());
      scatter_channels(out_cm.data(), g.n, p.out_channels, g.plane, grp * g.cout_g, g.cout_g,
                       out.data());
    }
  }

  if (bias != nullptr) {
    for (size_t n = 0; n < g.n; ++n) {
      for (size_t c = 0; c < p.out_channels; ++c) {
        T* o = out.data() + (n * p.out_channels + c) * g.plane;
        const T b = (*bias)[c];
        for (size_t i = 0; i < g.plane; ++i) o[i] += b;
      }
    }
  }
  return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                             const Tensor<T>& weight, bool has_bias, const ConvParams& p) {
  p.validate();
  require_rank4(input.dims(), "conv2d_backward", "input");
  require(weight.dims() == p.weight_shape(), "conv2d_backward: weight shape mismatch");
  const Shape expected = p.output_shape(input.dims());
  require(grad_out.dims() == expected, "conv2d_backward: grad_out shape ",
          shape_to_string(grad_out.dims()), ", expected ", shape_to_string(expected));

  const ConvGeometry g = geometry(input.dims(), p);
  ConvGrads<T> grads{Tensor<T>(input.dims()), Tensor<T>(weight.dims()), {}};

  if (has_bias) {
    grads.bias = Tensor<T>(Shape{p.out_channels});
    for (size_t n = 0; n < g.n; ++n) {
      for (size_t c = 0; c < p.out_channels; ++c) {
        const T* go = grad_out.data() + (n * p.out_channels + c) * g.plane;
        T acc = T{0};
        for (size_t i = 0; i < g.plane; ++i) acc += go[i];
        grads.bias[c] += acc;
      }
    }
  }

  if (p.is_depthwise()) {
    depthwise_backward(input.data(), weight.data(), grad_out.data(), g, p, grads.input.data(),
                       grads.weight.data());
    return grads;
  }

  std::vector<T> col(g.kc * g.cols);
  std::vector<T> grad_col(g.kc * g.cols);
  std::vector<T> go_cm(g.cout_g * g.cols);
  for (size_t grp = 0; grp < p.groups; ++grp) {
    const bool pointwise = is_pointwise(p);
    if (pointwise) {
      gather_channels(input.data(), g.n, g.c, g.plane, grp * g.cin_g, g.cin_g, col.data());
    } else {
      im2col(input.data(), g, p, grp, col.data());
    }
    gather_channels(grad_out.data(), g.n, p.out_channels, g.plane, grp * g.cout_g, g.cout_g,
                    go_cm.data());
    const T* w = weight.data() + grp * g.cout_g * g.kc;
    detail::gemm_nt(g.cout_g, g.kc, g.cols, go_cm.data(), col.data(),
                    grads.weight.data() + grp * g.cout_g * g.kc);
    std::fill(grad_col.begin(), grad_col.end(), T{0});
    detail::gemm_tn(g.kc, g.cols, g.cout_g, w, go_cm.data(), grad_col.data());
    if (pointwise) {
      scatter_channels(grad_col.data(), g.n, g.c, g.plane, grp * g.cin_g, g.cin_g,
                       grads.input.data());
    } else {
      col2im_add(grad_col.data(), g, p, grp, grads.input.data());
    }
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Activations

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "relu6") return Activation::kRelu6;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "swish") return Activation::kSwish;
  if (name == "hard_sigmoid") return Activation::kHardSigmoid;
  if (name == "h_swish") return Activation::kHardSwish;
  if (name == "identity" || name == "none") return Activation::kIdentity;
  fail(ErrorCode::kInvalidArgument, "unknown activation kind '", name, "'");
}

const char* activation_name(Activation kind) {
  switch (kind) {
    case Activation::kIdentity:
      return "identity";
    case Activation::kRelu:
      return "relu";
    case Activation::kRelu6:
      return "relu6";
    case Activation::kSigmoid:
      return "sigmoid";
    case Activation::kSwish:
      return "swish";
    case Activation::kHardSigmoid:
      return "hard_sigmoid";
    case Activation::kHardSwish:
      return "h_swish";
  }
  return "?";
}

namespace {

template <typename T>
T relu6(T x) {
  return std::min(std::max(x, T{0}), T{6});
}

template <typename T>
T sigmoid(T x) {
  if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
  const T e = std::exp(x);
  return e / (T{1} + e);
}

}  // namespace

template <typename T>
T activate(Activation kind, T x) {
  switch (kind) {
    case Activation::kIdentity:
      return x;
    case Activation::kRelu:
      return std::max(x, T{0});
    case Activation::kRelu6:
      return relu6(x);
    case Activation::kSigmoid:
      return sigmoid(x);
    case Activation::kSwish:
      return x * sigmoid(x);
    case Activation::kHardSigmoid:
      return relu6(x + T{3}) / T{6};
    case Activation::kHardSwish:
      return x * relu6(x + T{3}) / T{6};
  }
  fail(ErrorCode::kInvalidArgument, "unknown activation kind");
}

template <typename T>
T activate_derivative(Activation kind, T x) {
  switch (kind) {
    case Activation::kIdentity:
      return T{1};
    case Activation::kRelu:
      return x > T{0} ? T{1} : T{0};
    case Activation::kRelu6:
      return (x > T{0} && x < T{6}) ? T{1} : T{0};
    case Activation::kSigmoid: {
      const T s = sigmoid(x);
      return s * (T{1} - s);
    }
    case Activation::kSwish: {
      const T s = sigmoid(x);
      return s + x * s * (T{1} - s);
    }
    case Activation::kHardSigmoid:
      return (x > T{-3} && x < T{3}) ? T{1} / T{6} : T{0};
    case Activation::kHardSwish:
      if (x > T{3}) return T{1};
      if (x > T{-3} && x < T{3}) return (T{2} * x + T{3}) / T{6};
      return T{0};
  }
  fail(ErrorCode::kInvalidArgument, "unknown activation kind");
}

template <typename T>
Tensor<T> activation_forward(const Tensor<T>& x, Activation kind) {
  Tensor<T> y(x.dims());
  const T* in = x.data();
  T* out = y.data();
  const size_t n = x.size();
  switch (kind) {
    case Activation::kRelu:
      for (size_t i = 0; i < n; ++i) out[i] = std::max(in[i], T{0});
      break;
    case Activation::kHardSwish:
      for (size_t i = 0; i < n; ++i) out[i] = in[i] * relu6(in[i] + T{3}) / T{6};
      break;
    default:
      for (size_t i = 0; i < n; ++i) out[i] = activate(kind, in[i]);
  }
  return y;
}

template <typename T>
Tensor<T> activation_backward(const Tensor<T>& grad_out, const Tensor<T>& x, Activation kind) {
  require(grad_out.dims() == x.dims(), "activation_backward: grad shape ",
          shape_to_string(grad_out.dims()), " vs input ", shape_to_string(x.dims()));
  Tensor<T> gx(x.dims());
  for (size_t i = 0; i < x.size(); ++i) gx[i] = grad_out[i] * activate_derivative(kind, x[i]);
  return gx;
}

// ---------------------------------------------------------------------------
// Batch normalization

template <typename T>
BatchNormState<T>::BatchNormState(size_t channels)
    : gamma(Shape{channels}, T{1}),
      beta(Shape{channels}, T{0}),
      running_mean(Shape{channels}, T{0}),
      running_var(Shape{channels}, T{1}) {}

template <typename T>
void BatchNormState<T>::validate() const {
  const size_t c = gamma.size();
  require(beta.size() == c && running_mean.size() == c && running_var.size() == c,
          "batch_norm: state vectors must all have length ", c);
  require(epsilon > 0.0, "batch_norm: epsilon must be positive");
  require(momentum > 0.0 && momentum < 1.0, "batch_norm: momentum must lie in (0,1)");
  for (size_t i = 0; i < c; ++i) {
    require(running_var[i] >= T{0}, "batch_norm: running_var[", i, "] is negative");
  }
}

template <typename T>
Tensor<T> batch_norm_forward(const Tensor<T>& x, std::span<const T> gamma, std::span<const T> beta,
                             std::span<T> running_mean, std::span<T> running_var, double epsilon,
                             double momentum, Mode mode, BatchNormCache<T>* cache) {
  require_rank4(x.dims(), "batch_norm", "input");
  const size_t n = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
  require(gamma.size() == c && beta.size() == c && running_mean.size() == c &&
              running_var.size() == c,
          "batch_norm: input has ", c, " channels but state has ", gamma.size());
  const size_t count = n * plane;
  if (mode == Mode::kTrain) {
    require(count >= 2, "batch_norm: train mode needs N*H*W >= 2 per channel, got ", count);
  }

  Tensor<T> y(x.dims());
  Tensor<T> normalized;
  if (cache != nullptr) {
    normalized = Tensor<T>(x.dims());
    cache->inv_std.assign(c, T{0});
    cache->mode = mode;
  }

  for (size_t ch = 0; ch < c; ++ch) {
    double mean = 0.0;
    double var = 0.0;
    if (mode == Mode::kTrain) {
      for (size_t b = 0; b < n; ++b) {
        const T* src = x.data() + (b * c + ch) * plane;
        for (size_t i = 0; i < plane; ++i) mean += src[i];
      }
      mean /= static_cast<double>(count);
      for (size_t b = 0; b < n; ++b) {
        const T* src = x.data() + (b * c + ch) * plane;
        for (size_t i = 0; i < plane; ++i) {
          const double d = src[i] - mean;
          var += d * d;
        }
      }
      var /= static_cast<double>(count);
      const double unbiased = var * static_cast<double>(count) / static_cast<double>(count - 1);
      running_mean[ch] = static_cast<T>((1.0 - momentum) * running_mean[ch] + momentum * mean);
      running_var[ch] = static_cast<T>((1.0 - momentum) * running_var[ch] + momentum * unbiased);
    } else {
      mean = running_mean[ch];
      var = running_var[ch];
    }
    const T inv_std = static_cast<T>(1.0 / std::sqrt(var + epsilon));
    const T m = static_cast<T>(mean);
    const T scale = gamma[ch];
    const T shift = beta[ch];
    if (cache != nullptr) cache->inv_std[ch] = inv_std;
    for (size_t b = 0; b < n; ++b) {
      const size_t off = (b * c + ch) * plane;
      const T* src = x.data() + off;
      T* dst = y.data() + off;
      if (cache != nullptr) {
        T* xh = normalized.data() + off;
        for (size_t i = 0; i < plane; ++i) {
          xh[i] = (src[i] - m) * inv_std;
          dst[i] = scale * xh[i] + shift;
        }
      } else {
        for (size_t i = 0; i < plane; ++i) dst[i] = scale * ((src[i] - m) * inv_std) + shift;
      }
    }
  }
  if (cache != nullptr) cache->normalized = std::move(normalized);
  return y;
}

template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, BatchNormState<T>& state) {
  state.validate();
  return batch_norm_forward<T>(x, state.gamma.values(), state.beta.values(),
                               state.running_mean.values(), state.running_var.values(),
                               state.epsilon, state.momentum, state.mode, nullptr);
}

template <typename T>
BatchNormGrads<T> batch_norm_backward(const Tensor<T>& grad_out, std::span<const T> gamma,
                                      const BatchNormCache<T>& cache) {
  require(!cache.normalized.empty(), "batch_norm_backward: no saved forward state");
  require(grad_out.dims() == cache.normalized.dims(), "batch_norm_backward: grad shape mismatch");
  const size_t n = grad_out.dim(0), c = grad_out.dim(1), plane = grad_out.dim(2) * grad_out.dim(3);
  const size_t count = n * plane;
  BatchNormGrads<T> grads{Tensor<T>(grad_out.dims()), Tensor<T>(Shape{c}), Tensor<T>(Shape{c})};
  for (size_t ch = 0; ch < c; ++ch) {
    T sum_dy = T{0};
    T sum_dy_xhat = T{0};
    for (size_t b = 0; b < n; ++b) {
      const size_t off = (b * c + ch) * plane;
      const T* dy = grad_out.data() + off;
      const T* xh = cache.normalized.data() + off;
      for (size_t i = 0; i < plane; ++i) {
        sum_dy += dy[i];
        sum_dy_xhat += dy[i] * xh[i];
      }
    }
    grads.beta[ch] = sum_dy;
    grads.gamma[ch] = sum_dy_xhat;
    const T inv_std = cache.inv_std[ch];
    const T g = gamma[ch];
    for (size_t b = 0; b < n; ++b) {
      const size_t off = (b * c + ch) * plane;
      const T* dy = grad_out.data() + off;
      const T* xh = cache.normalized.data() + off;
      T* dx = grads.input.data() + off;
      if (cache.mode == Mode::kTrain) {
        const T k = g * inv_std / static_cast<T>(count);
        const T m = static_cast<T>(count);
        for (size_t i = 0; i < plane; ++i) dx[i] = k * (m * dy[i] - sum_dy - xh[i] * sum_dy_xhat);
      } else {
        const T k = g * inv_std;
        for (size_t i = 0; i < plane; ++i) dx[i] = k * dy[i];
      }
    }
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Pooling

template <typename T>
Tensor<T> global_avg_pool_forward(const Tensor<T>& x) {
  require_rank4(x.dims(), "global_avg_pool", "input");
  const size_t n = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
  Tensor<T> y(Shape{n, c, 1, 1});
  for (size_t i = 0; i < n * c; ++i) {
    const T* src = x.data() + i * plane;
    T acc = T{0};
    for (size_t j = 0; j < plane; ++j) acc += src[j];
    y[i] = acc / static_cast<T>(plane);
  }
  return y;
}

template <typename T>
Tensor<T> global_avg_pool_backward(const Tensor<T>& grad_out, const Shape& input_shape) {
  require_rank4(input_shape, "global_avg_pool_backward", "input");
  const size_t n = input_shape[0], c = input_shape[1], plane = input_shape[2] * input_shape[3];
  require(grad_out.dims() == Shape({n, c, 1, 1}), "global_avg_pool_backward: grad shape mismatch");
  Tensor<T> gx(input_shape);
  for (size_t i = 0; i < n * c; ++i) {
    const T v = grad_out[i] / static_cast<T>(plane);
    std::fill(gx.data() + i * plane, gx.data() + (i + 1) * plane, v);
  }
  return gx;
}

template <typename T>
MaxPoolResult<T> max_pool_forward(const Tensor<T>& x, size_t kernel, size_t stride,
                                  size_t padding) {
  require_rank4(x.dims(), "max_pool", "input");
  require(kernel > 0 && stride > 0, "max_pool: kernel and stride must be positive");
  require(padding < kernel, "max_pool: padding must be smaller than the kernel");
  const size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  require(h + 2 * padding >= kernel && w + 2 * padding >= kernel,
          "max_pool: kernel larger than padded input");
  const size_t ho = (h + 2 * padding - kernel) / stride + 1;
  const size_t wo = (w + 2 * padding - kernel) / stride + 1;
  MaxPoolResult<T> r{Tensor<T>(Shape{n, c, ho, wo}), std::vector<size_t>(n * c * ho * wo)};
  const auto pad = static_cast<ptrdiff_t>(padding);
  size_t out_index = 0;
  for (size_t plane = 0; plane < n * c; ++plane) {
    const size_t base = plane * h * w;
    for (size_t oh = 0; oh < ho; ++oh) {
      for (size_t ow = 0; ow < wo; ++ow, ++out_index) {
        T best = -std::numeric_limits<T>::infinity();
        size_t best_index = base;
        bool found = false;
        for (size_t kh = 0; kh < kernel; ++kh) {
          const ptrdiff_t ih = static_cast<ptrdiff_t>(oh * stride + kh) - pad;
          if (ih < 0 || ih >= static_cast<ptrdiff_t>(h)) continue;
          for (size_t kw = 0; kw < kernel; ++kw) {
            const ptrdiff_t iw = static_cast<ptrdiff_t>(ow * stride + kw) - pad;
            if (iw < 0 || iw >= static_cast<ptrdiff_t>(w)) continue;
            const size_t idx = base + static_cast<size_t>(ih) * w + static_cast<size_t>(iw);
            if (!found || x[idx] > best) {
              best = x[idx];
              best_index = idx;
              found = true;
            }
          }
        }
        r.output[out_index] = best;
        r.argmax[out_index] = best_index;
      }
    }
  }
  return r;
}

template <typename T>
Tensor<T> max_pool_backward(const Tensor<T>& grad_out, std::span<const size_t> argmax,
                            const Shape& input_shape) {
  require(grad_out.size() == argmax.size(), "max_pool_backward: argmax size mismatch");
  Tensor<T> gx(input_shape);
  for (size_t i = 0; i < argmax.size(); ++i) gx[argmax[i]] += grad_out[i];
  return gx;
}

// ---------------------------------------------------------------------------
// Dense

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>* bias) {
  require(x.rank() == 2, "dense: input must be rank 2 (N,D), got ", shape_to_string(x.dims()));
  require(weight.rank() == 2, "dense: weight must be rank 2 (D,K), got ",
          shape_to_string(weight.dims()));
  const size_t n = x.dim(0), d = x.dim(1), k = weight.dim(1);
  require(weight.dim(0) == d, "dense: input feature dimension (dim 1) is ", d,
          " but weight expects ", weight.dim(0));
  if (bias != nullptr) {
    require(bias->dims() == Shape{k}, "dense: bias shape ", shape_to_string(bias->dims()),
            ", expected ", k);
  }
  x.check_finite("dense input");
  Tensor<T> y(Shape{n, k});
  if (bias != nullptr) {
    for (size_t i = 0; i < n; ++i) std::copy(bias->data(), bias->data() + k, y.data() + i * k);
  }
  detail::gemm_nn(n, k, d, x.data(), weight.data(), y.data());
  return y;
}

template <typename T>
DenseGrads<T> dense_backward(const Tensor<T>& grad_out, const Tensor<T>& x, const Tensor<T>& weight,
                             bool has_bias) {
  const size_t n = x.dim(0), d = x.dim(1), k = weight.dim(1);
  require(grad_out.dims() == Shape({n, k}), "dense_backward: grad shape mismatch");
  DenseGrads<T> grads{Tensor<T>(x.dims()), Tensor<T>(weight.dims()), {}};
  detail::gemm_tn(d, k, n, x.data(), grad_out.data(), grads.weight.data());
  detail::gemm_nt(n, d, k, grad_out.data(), weight.data(), grads.input.data());
  if (has_bias) {
    grads.bias = Tensor<T>(Shape{k});
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < k; ++j) grads.bias[j] += grad_out[i * k + j];
    }
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Elementwise

template <typename T>
Tensor<T> add_forward(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.dims() == b.dims(), "add: shape mismatch ", shape_to_string(a.dims()), " vs ",
          shape_to_string(b.dims()));
  Tensor<T> y(a.dims());
  for (size_t i = 0; i < a.size(); ++i) y[i] = a[i] + b[i];
  return y;
}

template <typename T>
Tensor<T> channel_scale_forward(const Tensor<T>& x, const Tensor<T>& gate) {
  require_rank4(x.dims(), "channel_scale", "input");
  const size_t n = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
  require(gate.dims() == Shape({n, c, 1, 1}), "channel_scale: gate shape ",
          shape_to_string(gate.dims()), ", expected ", n, "x", c, "x1x1");
  Tensor<T> y(x.dims());
  for (size_t i = 0; i < n * c; ++i) {
    const T s = gate[i];
    const T* src = x.data() + i * plane;
    T* dst = y.data() + i * plane;
    for (size_t j = 0; j < plane; ++j) dst[j] = src[j] * s;
  }
  return y;
}

template <typename T>
ChannelScaleGrads<T> channel_scale_backward(const Tensor<T>& grad_out, const Tensor<T>& x,
                                            const Tensor<T>& gate) {
  require(grad_out.dims() == x.dims(), "channel_scale_backward: grad shape mismatch");
  const size_t n = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
  ChannelScaleGrads<T> grads{Tensor<T>(x.dims()), Tensor<T>(gate.dims())};
  for (size_t i = 0; i < n * c; ++i) {
    const T s = gate[i];
    const T* go = grad_out.data() + i * plane;
    const T* src = x.data() + i * plane;
    T* gx = grads.input.data() + i * plane;
    for (size_t j = 0; j < plane; ++j) gx[j] = go[j] * s;
    grads.gate[i] = detail::dot(go, src, plane);
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Loss

template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels) {
  require(logits.rank() == 2, "softmax_cross_entropy: logits must be rank 2 (N,K), got ",
          shape_to_string(logits.dims()));
  const size_t n = logits.dim(0), k = logits.dim(1);
  require(labels.size() == n, "softmax_cross_entropy: ", labels.size(), " labels for batch of ", n);
  logits.check_finite("softmax_cross_entropy logits");
  LossResult<T> result{0.0, Tensor<T>(logits.dims())};
  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const int label = labels[i];
    require(label >= 0 && static_cast<size_t>(label) < k, "softmax_cross_entropy: label ", label,
            " at position ", i, " outside [0,", k, ")");
    const T* row = logits.data() + i * k;
    const double mx = *std::max_element(row, row + k);
    double denom = 0.0;
    for (size_t j = 0; j < k; ++j) denom += std::exp(row[j] - mx);
    const double log_denom = std::log(denom);
    total += -(row[label] - mx - log_denom);
    T* g = result.grad.data() + i * k;
    for (size_t j = 0; j < k; ++j) {
      const double p = std::exp(row[j] - mx - log_denom);
      g[j] = static_cast<T>((p - (static_cast<size_t>(label) == j ? 1.0 : 0.0)) /
                            static_cast<double>(n));
    }
  }
  result.loss = total / static_cast<double>(n);
  return result;
}

// ---------------------------------------------------------------------------

#define LIGHTNET_INSTANTIATE_OPS(T)                                                              \
  template Tensor<T> conv2d_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>*,        \
                                    const ConvParams&);                                          \
  template ConvGrads<T> conv2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,    \
                                        bool, const ConvParams&);                                \
  template T activate(Activation, T);                                                            \
  template T activate_derivative(Activation, T);                                                 \
  template Tensor<T> activation_forward(const Tensor<T>&, Activation);                           \
  template Tensor<T> activation_backward(const Tensor<T>&, const Tensor<T>&, Activation);        \
  template struct BatchNormState<T>;                                                             \
  template Tensor<T> batch_norm_forward(const Tensor<T>&, std::span<const T>, std::span<const T>, \
                                        std::span<T>, std::span<T>, double, double, Mode,        \
                                        BatchNormCache<T>*);                                     \
  template Tensor<T> batch_norm(const Tensor<T>&, BatchNormState<T>&);                           \
  template BatchNormGrads<T> batch_norm_backward(const Tensor<T>&, std::span<const T>,           \
                                                 const BatchNormCache<T>&);                      \
  template Tensor<T> global_avg_pool_forward(const Tensor<T>&);                                  \
  template Tensor<T> global_avg_pool_backward(const Tensor<T>&, const Shape&);                   \
  template MaxPoolResult<T> max_pool_forward(const Tensor<T>&, size_t, size_t, size_t);          \
  template Tensor<T> max_pool_backward(const Tensor<T>&, std::span<const size_t>, const Shape&); \
  template Tensor<T> dense_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>*);        \
  template DenseGrads<T> dense_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,    \
                                        bool);                                                   \
  template Tensor<T> add_forward(const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> channel_scale_forward(const Tensor<T>&, const Tensor<T>&);                  \
  template ChannelScaleGrads<T> channel_scale_backward(const Tensor<T>&, const Tensor<T>&,       \
                                                       const Tensor<T>&);                        \
  template LossResult<T> softmax_cross_entropy(const Tensor<T>&, std::span<const int>);

LIGHTNET_INSTANTIATE_OPS(float)
LIGHTNET_INSTANTIATE_OPS(double)

#undef LIGHTNET_INSTANTIATE_OPS

}  // namespace lightnet
