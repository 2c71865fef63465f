// Copyright 2026 The resdiff Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Layer primitives with hand-written reverse-mode gradients. Layers hold
// only indices into a TensorTable, so one parameter table can be shared
// read-only across concurrent forward passes while each caller owns its
// gradient table.

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "resdiff/error.hpp"
#include "resdiff/nn/tensor.hpp"

namespace resdiff::nn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using MatrixMap = Eigen::Map<RowMatrix>;

inline double sigmoid(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

inline Tensor silu(const Tensor& x) {
  Tensor y(x.channels(), x.length());
  const auto in = x.values();
  auto out = y.values();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] * sigmoid(in[i]);
  return y;
}

/// d/dx [x * sigmoid(x)] applied to an upstream gradient.
inline Tensor silu_backward(const Tensor& x, const Tensor& dy) {
  x.require_same_shape(dy, "silu_backward");
  Tensor dx(x.channels(), x.length());
  const auto in = x.values();
  const auto g = dy.values();
  auto out = dx.values();
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double s = sigmoid(in[i]);
    out[i] = g[i] * s * (1.0 + in[i] * (1.0 - s));
  }
  return dx;
}

class Conv1d {
 public:
  Conv1d() = default;

  /// Registers "<name>.weight" (out x in*kernel) and "<name>.bias" (out x 1),
  /// initialized uniformly in +-1/sqrt(fan_in), or zero when `zero_init`.
  static Conv1d create(TensorTable& params, const std::string& name, int in, int out, int kernel, int stride,
                       int padding, std::mt19937_64& rng, bool zero_init = false) {
    Conv1d c;
    c.in_ = in;
    c.out_ = out;
    c.kernel_ = kernel;
    c.stride_ = stride;
    c.padding_ = padding;
    const double bound = 1.0 / std::sqrt(static_cast<double>(in * kernel));
    std::uniform_real_distribution<double> u(-bound, bound);
    Tensor w(static_cast<std::size_t>(out), static_cast<std::size_t>(in * kernel));
    Tensor b(static_cast<std::size_t>(out), 1);
    if (!zero_init) {
      for (double& v : w.values()) v = u(rng);
      for (double& v : b.values()) v = u(rng);
    }
    c.weight_ = params.add(name + ".weight", std::move(w));
    c.bias_ = params.add(name + ".bias", std::move(b));
    return c;
  }

  int in_channels() const noexcept { return in_; }
  int out_channels() const noexcept { return out_; }

  std::size_t output_length(std::size_t length) const {
    const long padded = static_cast<long>(length) + 2L * padding_ - kernel_;
    if (padded < 0) throw Error(Errc::ShapeMismatch, "conv input shorter than kernel");
    return static_cast<std::size_t>(padded / stride_ + 1);
  }

  Tensor forward(const TensorTable& params, const Tensor& x) const {
    check_input(x);
    const std::size_t lout = output_length(x.length());
    const RowMatrix col = im2col(x, lout);
    Tensor y(static_cast<std::size_t>(out_), lout);
    ConstMatrixMap w(params[weight_].data(), out_, in_ * kernel_);
    MatrixMap ym(y.data(), out_, static_cast<Eigen::Index>(lout));
    ym.noalias() = w * col;
    const Tensor& b = params[bias_];
    for (int o = 0; o < out_; ++o) ym.row(o).array() += b(static_cast<std::size_t>(o), 0);
    return y;
  }

  /// Accumulates weight/bias gradients; returns dL/dx when requested
  /// (otherwise an empty tensor).
  Tensor backward(const TensorTable& params, const Tensor& x, const Tensor& dy, TensorTable& grads,
                  bool need_input_grad = true) const {
    check_input(x);
    const std::size_t lout = output_length(x.length());
    if (dy.channels() != static_cast<std::size_t>(out_) || dy.length() != lout) {
      throw Error(Errc::ShapeMismatch, "conv backward: upstream gradient has shape " + dy.shape_string());
    }
    const RowMatrix col = im2col(x, lout);
    ConstMatrixMap dym(dy.data(), out_, static_cast<Eigen::Index>(lout));
    MatrixMap gw(grads[weight_].data(), out_, in_ * kernel_);
    gw.noalias() += dym * col.transpose();
    Tensor& gb = grads[bias_];
    for (int o = 0; o < out_; ++o) gb(static_cast<std::size_t>(o), 0) += dym.row(o).sum();
    if (!need_input_grad) return {};

    ConstMatrixMap w(params[weight_].data(), out_, in_ * kernel_);
    const RowMatrix dcol = w.transpose() * dym;
    Tensor dx(x.channels(), x.length());
    const long len = static_cast<long>(x.length());
    for (int ci = 0; ci < in_; ++ci) {
      double* dxr = dx.row(static_cast<std::size_t>(ci));
      for (int k = 0; k < kernel_; ++k) {
        const double* src = dcol.data() + static_cast<std::size_t>(ci * kernel_ + k) * lout;
        for (std::size_t t = 0; t < lout; ++t) {
          const long pos = static_cast<long>(t) * stride_ + k - padding_;
          if (pos >= 0 && pos < len) dxr[pos] += src[t];
        }
      }
    }
    return dx;
  }

 private:
  void check_input(const Tensor& x) const {
    if (x.channels() != static_cast<std::size_t>(in_)) {
      throw Error(Errc::ShapeMismatch, "conv expects " + std::to_string(in_) + " channels, got " + x.shape_string());
    }
  }

  RowMatrix im2col(const Tensor& x, std::size_t lout) const {
    RowMatrix col = RowMatrix::Zero(in_ * kernel_, static_cast<Eigen::Index>(lout));
    const long len = static_cast<long>(x.length());
    for (int ci = 0; ci < in_; ++ci) {
      const double* xr = x.row(static_cast<std::size_t>(ci));
      for (int k = 0; k < kernel_; ++k) {
        double* dst = col.data() + static_cast<std::size_t>(ci * kernel_ + k) * lout;
        for (std::size_t t = 0; t < lout; ++t) {
          const long pos = static_cast<long>(t) * stride_ + k - padding_;
          if (pos >= 0 && pos < len) dst[t] = xr[pos];
        }
      }
    }
    return col;
  }

  std::size_t weight_ = 0;
  std::size_t bias_ = 0;
  int in_ = 0;
  int out_ = 0;
  int kernel_ = 1;
  int stride_ = 1;
  int padding_ = 0;
};

/// Group normalization over (channels-in-group x time) with per-channel
/// affine parameters.
class GroupNorm {
 public:
  struct Cache {
    Tensor normalized;
    std::vector<double> inv_std;
  };

  GroupNorm() = default;

  static GroupNorm create(TensorTable& params, const std::string& name, int channels, int groups) {
    if (groups <= 0 || channels % groups != 0) {
      throw Error(Errc::ShapeMismatch, name + ": " + std::to_string(channels) + " channels not divisible into " +
                                           std::to_string(groups) + " groups");
    }
    GroupNorm g;
    g.channels_ = channels;
    g.groups_ = groups;
    g.gamma_ = params.add(name + ".weight", Tensor(static_cast<std::size_t>(channels), 1, 1.0));
    g.beta_ = params.add(name + ".bias", Tensor(static_cast<std::size_t>(channels), 1, 0.0));
    return g;
  }

  Tensor forward(const TensorTable& params, const Tensor& x, Cache& cache) const {
    if (x.channels() != static_cast<std::size_t>(channels_)) {
      throw Error(Errc::ShapeMismatch, "group norm expects " + std::to_string(channels_) + " channels");
    }
    const std::size_t per = static_cast<std::size_t>(channels_ / groups_);
    const std::size_t len = x.length();
    const double count = static_cast<double>(per * len);
    cache.normalized = Tensor(x.channels(), len);
    cache.inv_std.assign(static_cast<std::size_t>(groups_), 0.0);
    Tensor y(x.channels(), len);
    const Tensor& gamma = params[gamma_];
    const Tensor& beta = params[beta_];
    for (std::size_t g = 0; g < static_cast<std::size_t>(groups_); ++g) {
      double mean = 0.0;
      for (std::size_t c = g * per; c < (g + 1) * per; ++c)
        for (std::size_t t = 0; t < len; ++t) mean += x(c, t);
      mean /= count;
      double var = 0.0;
      for (std::size_t c = g * per; c < (g + 1) * per; ++c)
        for (std::size_t t = 0; t < len; ++t) var += (x(c, t) - mean) * (x(c, t) - mean);
      var /= count;
      const double inv = 1.0 / std::sqrt(var + kEps);
      cache.inv_std[g] = inv;
      for (std::size_t c = g * per; c < (g + 1) * per; ++c) {
        for (std::size_t t = 0; t < len; ++t) {
          const double xh = (x(c, t) - mean) * inv;
          cache.normalized(c, t) = xh;
          y(c, t) = gamma(c, 0) * xh + beta(c, 0);
        }
      }
    }
    return y;
  }

  Tensor backward(const TensorTable& params, const Cache& cache, const Tensor& dy, TensorTable& grads) const {
    cache.normalized.require_same_shape(dy, "group norm backward");
    const std::size_t per = static_cast<std::size_t>(channels_ / groups_);
    const std::size_t len = dy.length();
    const double count = static_cast<double>(per * len);
    const Tensor& gamma = params[gamma_];
    Tensor& ggamma = grads[gamma_];
    Tensor& gbeta = grads[beta_];
    Tensor dx(dy.channels(), len);
    for (std::size_t g = 0; g < static_cast<std::size_t>(groups_); ++g) {
      double mean_d = 0.0;
      double mean_dx = 0.0;
      for (std::size_t c = g * per; c < (g + 1) * per; ++c) {
        double sg = 0.0, sb = 0.0;
        for (std::size_t t = 0; t < len; ++t) {
          const double xh = cache.normalized(c, t);
          const double d = dy(c, t);
          sg += d * xh;
          sb += d;
          const double dxh = d * gamma(c, 0);
          mean_d += dxh;
          mean_dx += dxh * xh;
        }
        ggamma(c, 0) += sg;
        gbeta(c, 0) += sb;
      }
      mean_d /= count;
      mean_dx /= count;
      const double inv = cache.inv_std[g];
      for (std::size_t c = g * per; c < (g + 1) * per; ++c) {
        for (std::size_t t = 0; t < len; ++t) {
          const double dxh = dy(c, t) * gamma(c, 0);
          dx(c, t) = inv * (dxh - mean_d - cache.normalized(c, t) * mean_dx);
        }
      }
    }
    return dx;
  }

 private:
  static constexpr double kEps = 1e-5;
  std::size_t gamma_ = 0;
  std::size_t beta_ = 0;
  int channels_ = 0;
  int groups_ = 1;
};

/// Dense layer on column vectors stored as (n x 1) tensors.
class Linear {
 public:
  Linear() = default;

  static Linear create(TensorTable& params, const std::string& name, int in, int out, std::mt19937_64& rng) {
    Linear l;
    l.in_ = in;
    l.out_ = out;
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    Tensor w(static_cast<std::size_t>(out), static_cast<std::size_t>(in));
    Tensor b(static_cast<std::size_t>(out), 1);
    for (double& v : w.values()) v = u(rng);
    for (double& v : b.values()) v = u(rng);
    l.weight_ = params.add(name + ".weight", std::move(w));
    l.bias_ = params.add(name + ".bias", std::move(b));
    return l;
  }

  Tensor forward(const TensorTable& params, const Tensor& x) const {
    if (x.channels() != static_cast<std::size_t>(in_) || x.length() != 1) {
      throw Error(Errc::ShapeMismatch, "linear expects (" + std::to_string(in_) + "x1), got " + x.shape_string());
    }
    Tensor y(static_cast<std::size_t>(out_), 1);
    const Tensor& w = params[weight_];
    const Tensor& b = params[bias_];
    for (std::size_t o = 0; o < static_cast<std::size_t>(out_); ++o) {
      double acc = b(o, 0);
      const double* wr = w.row(o);
      for (std::size_t i = 0; i < static_cast<std::size_t>(in_); ++i) acc += wr[i] * x(i, 0);
      y(o, 0) = acc;
    }
    return y;
  }

  Tensor backward(const TensorTable& params, const Tensor& x, const Tensor& dy, TensorTable& grads,
                  bool need_input_grad = true) const {
    const Tensor& w = params[weight_];
    Tensor& gw = grads[weight_];
    Tensor& gb = grads[bias_];
    Tensor dx(static_cast<std::size_t>(in_), 1);
    for (std::size_t o = 0; o < static_cast<std::size_t>(out_); ++o) {
      const double g = dy(o, 0);
      gb(o, 0) += g;
      double* gwr = gw.row(o);
      const double* wr = w.row(o);
      for (std::size_t i = 0; i < static_cast<std::size_t>(in_); ++i) {
        gwr[i] += g * x(i, 0);
        if (need_input_grad) dx(i, 0) += g * wr[i];
      }
    }
    return need_input_grad ? dx : Tensor{};
  }

 private:
  std::size_t weight_ = 0;
  std::size_t bias_ = 0;
  int in_ = 0;
  int out_ = 0;
};

/// Nearest-neighbour upsampling by 2 along time.
inline Tensor upsample2(const Tensor& x) {
  Tensor y(x.channels(), 2 * x.length());
  for (std::size_t c = 0; c < x.channels(); ++c) {
    for (std::size_t t = 0; t < x.length(); ++t) {
      y(c, 2 * t) = x(c, t);
      y(c, 2 * t + 1) = x(c, t);
    }
  }
  return y;
}

inline Tensor upsample2_backward(const Tensor& dy) {
  Tensor dx(dy.channels(), dy.length() / 2);
  for (std::size_t c = 0; c < dx.channels(); ++c)
    for (std::size_t t = 0; t < dx.length(); ++t) dx(c, t) = dy(c, 2 * t) + dy(c, 2 * t + 1);
  return dx;
}

/// Channel-wise concatenation [a; b].
inline Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.length() != b.length()) throw Error(Errc::ShapeMismatch, "concat: length mismatch");
  Tensor y(a.channels() + b.channels(), a.length());
  std::copy(a.values().begin(), a.values().end(), y.values().begin());
  std::copy(b.values().begin(), b.values().end(), y.values().begin() + static_cast<long>(a.size()));
  return y;
}

/// Splits the gradient of a concatenation back into its two parts.
inline std::pair<Tensor, Tensor> split_channels(const Tensor& dy, std::size_t first_channels) {
  Tensor a(first_channels, dy.length());
  Tensor b(dy.channels() - first_channels, dy.length());
  std::copy(dy.values().begin(), dy.values().begin() + static_cast<long>(a.size()), a.values().begin());
  std::copy(dy.values().begin() + static_cast<long>(a.size()), dy.values().end(), b.values().begin());
  return {std::move(a), std::move(b)};
}

/// Sinusoidal embedding [sin(t*f_i), cos(t*f_i)] with f_i = base^(-i/(dim/2)).
inline Tensor sinusoidal_embedding(double t, int dim, double base = 10000.0) {
  if (dim <= 0 || dim % 2 != 0) throw Error(Errc::ShapeMismatch, "time embedding dimension must be even");
  const int half = dim / 2;
  Tensor e(static_cast<std::size_t>(dim), 1);
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(base) * static_cast<double>(i) / static_cast<double>(half));
    e(static_cast<std::size_t>(i), 0) = std::sin(t * freq);
    e(static_cast<std::size_t>(i + half), 0) = std::cos(t * freq);
  }
  return e;
}

}  // namespace resdiff::nn
