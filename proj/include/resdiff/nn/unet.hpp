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

// Two-level 1D U-Net denoiser.
//
//   in_conv -> enc1 -> down1 -> enc2 -> down2 -> mid (bottleneck)
//           -> up2 -> [.. | enc2] -> dec2 -> up1 -> [.. | enc1] -> dec1 -> out
//
// Input rows are [noisy residual (7) | spline pose (7) | observation mask (1)].

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <utility>

#include "resdiff/error.hpp"
#include "resdiff/nn/layers.hpp"
#include "resdiff/nn/tensor.hpp"

namespace resdiff::nn {

struct UNetConfig {
  int input_channels = 15;
  int output_channels = 7;
  int base_channels = 64;
  int kernel = 5;
  int groups = 8;
  int time_dim = 128;
  double time_base = 10000.0;
  // A zero output layer makes an untrained model predict a zero residual,
  // i.e. reproduce the spline baseline.
  bool zero_init_output = true;

  int bottleneck_channels() const noexcept { return 4 * base_channels; }

  static UNetConfig tiny() {
    UNetConfig c;
    c.base_channels = 8;
    c.time_dim = 16;
    return c;
  }

  void validate() const {
    if (input_channels <= 0 || output_channels <= 0 || base_channels <= 0 || kernel <= 0 || kernel % 2 == 0 ||
        groups <= 0 || base_channels % groups != 0 || time_dim <= 0 || time_dim % 2 != 0 || time_base <= 1.0) {
      throw Error(Errc::InvalidParams, "invalid U-Net configuration");
    }
  }

  friend bool operator==(const UNetConfig&, const UNetConfig&) = default;
};

/// Residual block with a per-block projection of the shared time embedding.
class ResBlock {
 public:
  struct Cache {
    Tensor x;
    GroupNorm::Cache g1;
    Tensor a1;
    Tensor s1;
    GroupNorm::Cache g2;
    Tensor a2;
    Tensor s2;
  };

  ResBlock() = default;

  static ResBlock create(TensorTable& params, const std::string& name, int in, int out, const UNetConfig& cfg,
                         std::mt19937_64& rng) {
    ResBlock b;
    b.norm1_ = GroupNorm::create(params, name + ".norm1", in, cfg.groups);
    b.conv1_ = Conv1d::create(params, name + ".conv1", in, out, cfg.kernel, 1, cfg.kernel / 2, rng);
    b.time_ = Linear::create(params, name + ".time", cfg.time_dim, out, rng);
    b.norm2_ = GroupNorm::create(params, name + ".norm2", out, cfg.groups);
    b.conv2_ = Conv1d::create(params, name + ".conv2", out, out, cfg.kernel, 1, cfg.kernel / 2, rng);
    b.has_skip_ = in != out;
    if (b.has_skip_) b.skip_ = Conv1d::create(params, name + ".skip", in, out, 1, 1, 0, rng);
    return b;
  }

  Tensor forward(const TensorTable& p, const Tensor& x, const Tensor& temb, Cache& c) const {
    c.x = x;
    c.a1 = norm1_.forward(p, x, c.g1);
    c.s1 = silu(c.a1);
    Tensor h = conv1_.forward(p, c.s1);
    const Tensor tp = time_.forward(p, temb);
    for (std::size_t o = 0; o < h.channels(); ++o) {
      double* r = h.row(o);
      for (std::size_t t = 0; t < h.length(); ++t) r[t] += tp(o, 0);
    }
    c.a2 = norm2_.forward(p, h, c.g2);
    c.s2 = silu(c.a2);
    Tensor y = conv2_.forward(p, c.s2);
    if (has_skip_) {
      y += skip_.forward(p, x);
    } else {
      y += x;
    }
    return y;
  }

  /// Returns dL/dx and accumulates dL/dtemb into `dtemb`.
  Tensor backward(const TensorTable& p, const Cache& c, const Tensor& temb, const Tensor& dy, TensorTable& g,
                  Tensor& dtemb) const {
    const Tensor ds2 = conv2_.backward(p, c.s2, dy, g);
    const Tensor dh = norm2_.backward(p, c.g2, silu_backward(c.a2, ds2), g);
    Tensor dtp(dh.channels(), 1);
    for (std::size_t o = 0; o < dh.channels(); ++o) {
      const double* r = dh.row(o);
      double s = 0.0;
      for (std::size_t t = 0; t < dh.length(); ++t) s += r[t];
      dtp(o, 0) = s;
    }
    dtemb += time_.backward(p, temb, dtp, g);
    const Tensor ds1 = conv1_.backward(p, c.s1, dh, g);
    Tensor dx = norm1_.backward(p, c.g1, silu_backward(c.a1, ds1), g);
    if (has_skip_) {
      dx += skip_.backward(p, c.x, dy, g);
    } else {
      dx += dy;
    }
    return dx;
  }

 private:
  GroupNorm norm1_;
  Conv1d conv1_;
  Linear time_;
  GroupNorm norm2_;
  Conv1d conv2_;
  Conv1d skip_;
  bool has_skip_ = false;
};

/// Activations retained by UNet::forward for the backward pass.
struct ForwardCache {
  bool valid = false;
  std::size_t length = 0;
  std::size_t padded_length = 0;
  Tensor input;
  Tensor temb_input;
  Tensor temb_h;
  Tensor temb_e2;
  Tensor temb;  // SiLU of the time MLP output, shared by every block
  Tensor h0;
  ResBlock::Cache enc1;
  Tensor e1;
  Tensor d1;
  ResBlock::Cache enc2;
  Tensor e2;
  Tensor d2;
  ResBlock::Cache mid;
  Tensor u2_in;
  ResBlock::Cache dec2;
  Tensor u1_in;
  ResBlock::Cache dec1;
  GroupNorm::Cache out_norm;
  Tensor out_a;
  Tensor out_s;
};

struct ForwardResult {
  Tensor prediction;  // output_channels x N
  Tensor bottleneck;  // bottleneck_channels x ceil(N/4)
  ForwardCache cache;
};

/// Mirror index into [0, n) without repeating the edge sample.
inline std::size_t reflect_index(long i, std::size_t n) {
  if (n == 1) return 0;
  const long period = 2 * (static_cast<long>(n) - 1);
  long m = i % period;
  if (m < 0) m += period;
  return static_cast<std::size_t>(m < static_cast<long>(n) ? m : period - m);
}

/// Pads along time on the right, by reflection, to a multiple of `multiple`.
inline Tensor reflect_pad_right(const Tensor& x, std::size_t multiple) {
  const std::size_t n = x.length();
  const std::size_t padded = (n + multiple - 1) / multiple * multiple;
  if (padded == n) return x;
  Tensor y(x.channels(), padded);
  for (std::size_t c = 0; c < x.channels(); ++c)
    for (std::size_t t = 0; t < padded; ++t) y(c, t) = x(c, reflect_index(static_cast<long>(t), n));
  return y;
}

inline Tensor crop_length(const Tensor& x, std::size_t n) {
  if (n == x.length()) return x;
  Tensor y(x.channels(), n);
  for (std::size_t c = 0; c < x.channels(); ++c)
    for (std::size_t t = 0; t < n; ++t) y(c, t) = x(c, t);
  return y;
}

class UNet {
 public:
  UNet() = default;

  /// Freshly initialized network; parameter values depend only on (config, seed).
  explicit UNet(const UNetConfig& cfg, std::uint64_t seed = 0) : cfg_(cfg) {
    cfg_.validate();
    std::mt19937_64 rng(seed);
    build(rng);
  }

  /// Network with externally supplied weights (e.g. from a checkpoint).
  UNet(const UNetConfig& cfg, TensorTable params) : UNet(cfg, 0) {
    if (!params_.same_layout(params)) {
      throw Error(Errc::ShapeMismatch, "parameter table does not match the U-Net layout for this configuration");
    }
    params_ = std::move(params);
  }

  const UNetConfig& config() const noexcept { return cfg_; }
  const TensorTable& params() const noexcept { return params_; }
  TensorTable& params() noexcept { return params_; }
  std::size_t parameter_count() const noexcept { return params_.scalar_count(); }

  /// Assembles the three conditioning inputs into one input tensor.
  ForwardResult forward(const Tensor& noisy_residual, const Tensor& spline_cond, const Tensor& obs_mask,
                        int t) const {
    const std::size_t n = noisy_residual.length();
    if (spline_cond.length() != n || obs_mask.length() != n || obs_mask.channels() != 1 ||
        noisy_residual.channels() + spline_cond.channels() + 1 != static_cast<std::size_t>(cfg_.input_channels)) {
      throw Error(Errc::ShapeMismatch, "U-Net inputs " + noisy_residual.shape_string() + ", " +
                                           spline_cond.shape_string() + ", " + obs_mask.shape_string());
    }
    return forward(concat_channels(concat_channels(noisy_residual, spline_cond), obs_mask), t);
  }

  ForwardResult forward(const Tensor& input, int t) const {
    if (input.channels() != static_cast<std::size_t>(cfg_.input_channels) || input.length() < 2) {
      throw Error(Errc::ShapeMismatch, "U-Net input has shape " + input.shape_string());
    }
    const TensorTable& p = params_;
    ForwardResult r;
    ForwardCache& c = r.cache;
    c.length = input.length();
    c.input = reflect_pad_right(input, 4);
    c.padded_length = c.input.length();

    c.temb_input = sinusoidal_embedding(static_cast<double>(t), cfg_.time_dim, cfg_.time_base);
    c.temb_h = time1_.forward(p, c.temb_input);
    c.temb_e2 = time2_.forward(p, silu(c.temb_h));
    c.temb = silu(c.temb_e2);

    c.h0 = in_conv_.forward(p, c.input);
    c.e1 = enc1_.forward(p, c.h0, c.temb, c.enc1);
    c.d1 = down1_.forward(p, c.e1);
    c.e2 = enc2_.forward(p, c.d1, c.temb, c.enc2);
    c.d2 = down2_.forward(p, c.e2);
    r.bottleneck = mid_.forward(p, c.d2, c.temb, c.mid);

    c.u2_in = upsample2(r.bottleneck);
    const Tensor u2 = up2_.forward(p, c.u2_in);
    const Tensor x2 = dec2_.forward(p, concat_channels(u2, c.e2), c.temb, c.dec2);
    c.u1_in = upsample2(x2);
    const Tensor u1 = up1_.forward(p, c.u1_in);
    const Tensor x1 = dec1_.forward(p, concat_channels(u1, c.e1), c.temb, c.dec1);

    c.out_a = out_norm_.forward(p, x1, c.out_norm);
    c.out_s = silu(c.out_a);
    r.prediction = crop_length(out_conv_.forward(p, c.out_s), c.length);
    c.valid = true;
    return r;
  }

  /// Parameter gradients of a loss given dL/dprediction.
  TensorTable backward(const ForwardCache& c, const Tensor& dpred) const {
    if (!c.valid) throw Error(Errc::MissingForwardCache, "backward called without a cached forward pass");
    if (dpred.channels() != static_cast<std::size_t>(cfg_.output_channels) || dpred.length() != c.length) {
      throw Error(Errc::ShapeMismatch, "prediction gradient has shape " + dpred.shape_string());
    }
    const TensorTable& p = params_;
    TensorTable g = params_.zeros_like();
    Tensor dtemb(static_cast<std::size_t>(cfg_.time_dim), 1);
    const std::size_t c1 = static_cast<std::size_t>(cfg_.base_channels);
    const std::size_t c2 = 2 * c1;

    Tensor dout(dpred.channels(), c.padded_length);
    for (std::size_t ch = 0; ch < dpred.channels(); ++ch)
      for (std::size_t t = 0; t < c.length; ++t) dout(ch, t) = dpred(ch, t);

    const Tensor ds = out_conv_.backward(p, c.out_s, dout, g);
    const Tensor dx1 = out_norm_.backward(p, c.out_norm, silu_backward(c.out_a, ds), g);

    auto [du1, de1] = split_channels(dec1_.backward(p, c.dec1, c.temb, dx1, g, dtemb), c1);
    const Tensor dx2 = upsample2_backward(up1_.backward(p, c.u1_in, du1, g));

    auto [du2, de2] = split_channels(dec2_.backward(p, c.dec2, c.temb, dx2, g, dtemb), c2);
    const Tensor dmid = upsample2_backward(up2_.backward(p, c.u2_in, du2, g));

    const Tensor dd2 = mid_.backward(p, c.mid, c.temb, dmid, g, dtemb);
    de2 += down2_.backward(p, c.e2, dd2, g);
    const Tensor dd1 = enc2_.backward(p, c.enc2, c.temb, de2, g, dtemb);
    de1 += down1_.backward(p, c.e1, dd1, g);
    const Tensor dh0 = enc1_.backward(p, c.enc1, c.temb, de1, g, dtemb);
    in_conv_.backward(p, c.input, dh0, g, false);

    const Tensor de2_t = silu_backward(c.temb_e2, dtemb);
    const Tensor dh_t = time2_.backward(p, silu(c.temb_h), de2_t, g);
    time1_.backward(p, c.temb_input, silu_backward(c.temb_h, dh_t), g, false);
    return g;
  }

 private:
  void build(std::mt19937_64& rng) {
    const int c1 = cfg_.base_channels, c2 = 2 * c1, c3 = 4 * c1, k = cfg_.kernel, pad = k / 2;
    TensorTable& p = params_;
    time1_ = Linear::create(p, "time.fc1", cfg_.time_dim, cfg_.time_dim, rng);
    time2_ = Linear::create(p, "time.fc2", cfg_.time_dim, cfg_.time_dim, rng);
    in_conv_ = Conv1d::create(p, "in_conv", cfg_.input_channels, c1, k, 1, pad, rng);
    enc1_ = ResBlock::create(p, "enc1", c1, c1, cfg_, rng);
    down1_ = Conv1d::create(p, "down1", c1, c2, k, 2, pad, rng);
    enc2_ = ResBlock::create(p, "enc2", c2, c2, cfg_, rng);
    down2_ = Conv1d::create(p, "down2", c2, c3, k, 2, pad, rng);
    mid_ = ResBlock::create(p, "mid", c3, c3, cfg_, rng);
    up2_ = Conv1d::create(p, "up2", c3, c2, k, 1, pad, rng);
    dec2_ = ResBlock::create(p, "dec2", 2 * c2, c2, cfg_, rng);
    up1_ = Conv1d::create(p, "up1", c2, c1, k, 1, pad, rng);
    dec1_ = ResBlock::create(p, "dec1", 2 * c1, c1, cfg_, rng);
    out_norm_ = GroupNorm::create(p, "out_norm", c1, cfg_.groups);
    out_conv_ = Conv1d::create(p, "out_conv", c1, cfg_.output_channels, k, 1, pad, rng, cfg_.zero_init_output);
  }

  UNetConfig cfg_;
  TensorTable params_;
  Linear time1_;
  Linear time2_;
  Conv1d in_conv_;
  ResBlock enc1_;
  Conv1d down1_;
  ResBlock enc2_;
  Conv1d down2_;
  ResBlock mid_;
  Conv1d up2_;
  ResBlock dec2_;
  Conv1d up1_;
  ResBlock dec1_;
  GroupNorm out_norm_;
  Conv1d out_conv_;
};

}  // namespace resdiff::nn
