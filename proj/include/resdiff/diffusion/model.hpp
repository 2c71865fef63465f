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


// The denoiser wrapped with everything needed to turn observations into
// network inputs and network outputs back into physical residuals.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "resdiff/diffusion/residual.hpp"
#include "resdiff/diffusion/schedule.hpp"
#include "resdiff/error.hpp"
#include "resdiff/geometry.hpp"
#include "resdiff/nn/checkpoint.hpp"
#include "resdiff/nn/unet.hpp"

namespace resdiff::diffusion {

struct ModelConfig {
  nn::UNetConfig unet;
  int steps = 256;
  ScheduleKind schedule = ScheduleKind::Cosine;
  // Physical size of one network unit: meters for translation residuals,
  // ambient quaternion units for rotation residuals.
  double translation_scale = 0.01;
  double rotation_scale = 0.05;
  // Baseline translations enter as their offset from the piecewise-linear
  // path through the observed positions, divided by this (meters).
  double condition_scale = 0.0005;

  void validate() const {
    unet.validate();
    if (unet.input_channels != 2 * static_cast<int>(kPoseChannels) + 1 ||
        unet.output_channels != static_cast<int>(kPoseChannels)) {
      throw Error(Errc::InvalidParams, "denoiser must map 15 input channels to 7 outputs");
    }
    if (steps < 2) throw Error(Errc::InvalidSteps, "diffusion needs at least 2 steps");
    if (!(translation_scale > 0.0) || !(rotation_scale > 0.0) || !(condition_scale > 0.0)) {
      throw Error(Errc::InvalidParams, "model scales must be positive");
    }
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// One denoiser evaluation: masked x0 estimate in network units plus the
/// forward cache needed for training.
struct Prediction {
  ResidualTrajectory x0;
  nn::ForwardResult forward;
};

/// Conditioning shared by every denoising step of one trajectory.
struct Conditioning {
  nn::Tensor spline;  // 7 x N
  nn::Tensor mask_row;  // 1 x N
  std::vector<bool> mask;
};

class DiffusionModel {
 public:
  explicit DiffusionModel(const ModelConfig& cfg, std::uint64_t seed = 0)
      : cfg_(checked(cfg)), net_(cfg.unet, seed), schedule_(make_schedule(cfg.steps, cfg.schedule)) {}

  DiffusionModel(const ModelConfig& cfg, nn::TensorTable params)
      : cfg_(checked(cfg)), net_(cfg.unet, std::move(params)), schedule_(make_schedule(cfg.steps, cfg.schedule)) {}

  const ModelConfig& config() const noexcept { return cfg_; }
  const NoiseSchedule& schedule() const noexcept { return schedule_; }
  const nn::UNet& net() const noexcept { return net_; }
  nn::UNet& net() noexcept { return net_; }

  Conditioning condition(const Trajectory& baseline, const std::vector<bool>& mask) const {
    if (mask.size() != baseline.size()) throw Error(Errc::ShapeMismatch, "mask length differs from baseline");
    const std::size_t n = baseline.size();
    const std::vector<Vec3> chord = observed_chords(baseline, mask);
    Conditioning c{nn::Tensor(kPoseChannels, n), nn::Tensor(1, n), mask};
    const double inv = 1.0 / cfg_.condition_scale;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 t = (baseline[i].translation - chord[i]) * inv;
      const Quat4 q = baseline[i].rotation.raw();
      for (std::size_t k = 0; k < 3; ++k) c.spline(k, i) = t[static_cast<int>(k)];
      for (std::size_t k = 0; k < 4; ++k) c.spline(3 + k, i) = q[static_cast<int>(k)];
      c.mask_row(0, i) = mask[i] ? 1.0 : 0.0;
    }
    return c;
  }

  /// Piecewise-linear interpolation of the baseline between observed frames,
  /// held constant before the first and after the last one.
  static std::vector<Vec3> observed_chords(const Trajectory& baseline, const std::vector<bool>& mask) {
    const std::size_t n = baseline.size();
    std::vector<std::size_t> known;
    for (std::size_t i = 0; i < n; ++i)
      if (mask[i]) known.push_back(i);
    std::vector<Vec3> out(n);
    if (known.empty()) return out;
    for (std::size_t i = 0; i < n; ++i) {
      const auto hi = std::lower_bound(known.begin(), known.end(), i);
      if (hi == known.begin()) {
        out[i] = baseline[known.front()].translation;
      } else if (hi == known.end()) {
        out[i] = baseline[known.back()].translation;
      } else {
        const std::size_t b = *hi, a = *(hi - 1);
        const double w = b == i ? 1.0 : static_cast<double>(i - a) / static_cast<double>(b - a);
        out[i] = (1.0 - w) * baseline[a].translation + w * baseline[b].translation;
      }
    }
    return out;
  }

  /// Denoiser output with observed columns forced to zero.
  Prediction predict(const ResidualTrajectory& xt, const Conditioning& cond, int t) const {
    schedule_.check_step(t);
    Prediction p;
    p.forward = net_.forward(xt.tensor(), cond.spline, cond.mask_row, t);
    p.x0 = ResidualTrajectory(p.forward.prediction);
    p.x0.zero_rows(cond.mask);
    return p;
  }

  /// Physical residual -> network units.
  ResidualTrajectory to_network(const ResidualTrajectory& r) const { return scaled(r, 1.0 / cfg_.translation_scale, 1.0 / cfg_.rotation_scale); }
  /// Network units -> physical residual.
  ResidualTrajectory to_physical(const ResidualTrajectory& r) const { return scaled(r, cfg_.translation_scale, cfg_.rotation_scale); }

  double channel_scale(std::size_t c) const noexcept { return c < 3 ? cfg_.translation_scale : cfg_.rotation_scale; }

  /// Network weights followed by "meta/..." scalars describing the config.
  nn::TensorTable to_table() const {
    nn::TensorTable t = net_.params();
    const auto put = [&](const std::string& name, double v) { t.add("meta/" + name, nn::Tensor(1, 1, v)); };
    put("unet.input_channels", cfg_.unet.input_channels);
    put("unet.output_channels", cfg_.unet.output_channels);
    put("unet.base_channels", cfg_.unet.base_channels);
    put("unet.kernel", cfg_.unet.kernel);
    put("unet.groups", cfg_.unet.groups);
    put("unet.time_dim", cfg_.unet.time_dim);
    put("unet.time_base", cfg_.unet.time_base);
    put("unet.zero_init_output", cfg_.unet.zero_init_output ? 1.0 : 0.0);
    put("steps", cfg_.steps);
    put("schedule", cfg_.schedule == ScheduleKind::Cosine ? 1.0 : 0.0);
    put("translation_scale", cfg_.translation_scale);
    put("rotation_scale", cfg_.rotation_scale);
    put("condition_scale", cfg_.condition_scale);
    put("bottleneck_channels", cfg_.unet.bottleneck_channels());
    return t;
  }

  static DiffusionModel from_table(const nn::TensorTable& t) {
    const auto get = [&](const std::string& name) {
      const std::string key = "meta/" + name;
      if (!t.contains(key)) throw Error(Errc::CorruptCheckpoint, "checkpoint lacks " + key);
      const nn::Tensor& v = t.at(key);
      if (v.size() != 1 || !std::isfinite(v.values()[0])) throw Error(Errc::CorruptCheckpoint, key + " is not a finite scalar");
      return v.values()[0];
    };
    const auto get_int = [&](const std::string& name) { return static_cast<int>(std::lround(get(name))); };
    ModelConfig cfg;
    cfg.unet.input_channels = get_int("unet.input_channels");
    cfg.unet.output_channels = get_int("unet.output_channels");
    cfg.unet.base_channels = get_int("unet.base_channels");
    cfg.unet.kernel = get_int("unet.kernel");
    cfg.unet.groups = get_int("unet.groups");
    cfg.unet.time_dim = get_int("unet.time_dim");
    cfg.unet.time_base = get("unet.time_base");
    cfg.unet.zero_init_output = get("unet.zero_init_output") != 0.0;
    cfg.steps = get_int("steps");
    cfg.schedule = get("schedule") != 0.0 ? ScheduleKind::Cosine : ScheduleKind::Linear;
    cfg.translation_scale = get("translation_scale");
    cfg.rotation_scale = get("rotation_scale");
    cfg.condition_scale = get("condition_scale");
    try {
      cfg.validate();
    } catch (const Error& e) {
      throw Error(Errc::CorruptCheckpoint, std::string("checkpoint config invalid: ") + e.what());
    }
    nn::TensorTable weights;
    for (std::size_t i = 0; i < t.size(); ++i)
      if (t.name(i).rfind("meta/", 0) != 0) weights.add(t.name(i), t[i]);
    try {
      return DiffusionModel(cfg, std::move(weights));
    } catch (const Error& e) {
      throw Error(Errc::CorruptCheckpoint, std::string("checkpoint weights: ") + e.what());
    }
  }

  void save(const std::filesystem::path& path) const { nn::save_tensor_table(path, to_table()); }
  static DiffusionModel load(const std::filesystem::path& path) { return from_table(nn::load_tensor_table(path)); }

 private:
  static const ModelConfig& checked(const ModelConfig& cfg) {
    cfg.validate();
    return cfg;
  }

  static ResidualTrajectory scaled(const ResidualTrajectory& r, double st, double sr) {
    ResidualTrajectory out = r;
    nn::Tensor& v = out.tensor();
    for (std::size_t c = 0; c < kPoseChannels; ++c) {
      const double s = c < 3 ? st : sr;
      double* row = v.row(c);
      for (std::size_t i = 0; i < v.length(); ++i) row[i] *= s;
    }
    return out;
  }

  ModelConfig cfg_;
  nn::UNet net_;
  NoiseSchedule schedule_;
};

}  // namespace resdiff::diffusion
