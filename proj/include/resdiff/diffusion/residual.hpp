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

// Residuals over the spline baseline and the masked DDPM forward/reverse
// steps acting on them.

#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "resdiff/error.hpp"
#include "resdiff/geometry.hpp"
#include "resdiff/nn/tensor.hpp"
#include "resdiff/diffusion/schedule.hpp"

namespace resdiff::diffusion {

inline constexpr std::size_t kPoseChannels = 7;

/// Per-frame residual (3 translation + 4 ambient quaternion components),
/// stored channel-major as a 7 x N tensor.
class ResidualTrajectory {
 public:
  ResidualTrajectory() = default;
  explicit ResidualTrajectory(std::size_t frames) : values_(kPoseChannels, frames) {}
  explicit ResidualTrajectory(nn::Tensor values) : values_(std::move(values)) {
    if (values_.channels() != kPoseChannels) {
      throw Error(Errc::ShapeMismatch, "residual tensor must have 7 channels, got " + values_.shape_string());
    }
  }

  std::size_t size() const noexcept { return values_.length(); }

  Vec3 translation(std::size_t i) const { return {values_(0, i), values_(1, i), values_(2, i)}; }
  Quat4 rotation(std::size_t i) const { return {values_(3, i), values_(4, i), values_(5, i), values_(6, i)}; }
  void set(std::size_t i, const Vec3& t, const Quat4& q) {
    for (int c = 0; c < 3; ++c) values_(static_cast<std::size_t>(c), i) = t[c];
    for (int c = 0; c < 4; ++c) values_(static_cast<std::size_t>(3 + c), i) = q[c];
  }

  const nn::Tensor& tensor() const noexcept { return values_; }
  nn::Tensor& tensor() noexcept { return values_; }

  /// Zeroes every column flagged in `mask`.
  void zero_rows(const std::vector<bool>& mask) {
    check_mask(mask);
    for (std::size_t i = 0; i < size(); ++i)
      if (mask[i])
        for (std::size_t c = 0; c < kPoseChannels; ++c) values_(c, i) = 0.0;
  }

  bool rows_are_zero(const std::vector<bool>& mask) const {
    check_mask(mask);
    for (std::size_t i = 0; i < size(); ++i)
      if (mask[i])
        for (std::size_t c = 0; c < kPoseChannels; ++c)
          if (values_(c, i) != 0.0) return false;
    return true;
  }

  void check_mask(const std::vector<bool>& mask) const {
    if (mask.size() != size()) {
      throw Error(Errc::ShapeMismatch, "mask has " + std::to_string(mask.size()) + " frames, residual " +
                                           std::to_string(size()));
    }
  }

  friend bool operator==(const ResidualTrajectory&, const ResidualTrajectory&) = default;

 private:
  nn::Tensor values_;
};

/// Standard normal draws with masked rows zeroed.
inline ResidualTrajectory gaussian_residual(std::size_t frames, const std::vector<bool>& mask, std::mt19937_64& rng) {
  ResidualTrajectory r(frames);
  std::normal_distribution<double> n(0.0, 1.0);
  for (double& v : r.tensor().values()) v = n(rng);
  r.zero_rows(mask);
  return r;
}

/// Ground-truth residual: translation difference, and the ambient
/// difference of the ground-truth quaternion (moved into the spline's
/// hemisphere) minus the spline quaternion. Zero at observed frames.
inline ResidualTrajectory compute_residual(const Trajectory& gt, const Trajectory& baseline,
                                           const std::vector<bool>& mask) {
  if (gt.size() != baseline.size()) throw Error(Errc::LengthMismatch, "ground truth and baseline lengths differ");
  ResidualTrajectory r(gt.size());
  r.check_mask(mask);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (mask[i]) continue;
    const auto& s = baseline[i];
    r.set(i, gt[i].translation - s.translation, align_to(s.rotation, gt[i].rotation).raw() - s.rotation.raw());
  }
  return r;
}

/// Baseline plus residual without renormalizing rotations. Observed frames
/// copy the baseline pose.
struct RawPoses {
  std::vector<Vec3> translation;
  std::vector<Quat4> rotation;
};

inline RawPoses compose_raw(const Trajectory& baseline, const ResidualTrajectory& res, const std::vector<bool>& mask) {
  if (baseline.size() != res.size()) throw Error(Errc::LengthMismatch, "baseline and residual lengths differ");
  res.check_mask(mask);
  RawPoses out;
  out.translation.resize(res.size());
  out.rotation.resize(res.size());
  for (std::size_t i = 0; i < res.size(); ++i) {
    const auto& s = baseline[i];
    if (mask[i]) {
      out.translation[i] = s.translation;
      out.rotation[i] = s.rotation.raw();
    } else {
      out.translation[i] = s.translation + res.translation(i);
      out.rotation[i] = s.rotation.raw() + res.rotation(i);
    }
  }
  return out;
}

/// Baseline plus residual with every rotation renormalized. Observed frames
/// reproduce the baseline pose exactly.
inline Trajectory compose(const Trajectory& baseline, const ResidualTrajectory& res, const std::vector<bool>& mask) {
  const RawPoses raw = compose_raw(baseline, res, mask);
  std::vector<Pose> poses(res.size());
  for (std::size_t i = 0; i < res.size(); ++i) {
    poses[i].translation = raw.translation[i];
    poses[i].rotation = mask[i] ? baseline[i].rotation : UnitQuaternion::normalize(raw.rotation[i]);
  }
  return Trajectory(std::move(poses), baseline.frame_rate_hint());
}

/// x_t = sqrt(abar_t) x_0 + sqrt(1 - abar_t) noise on unobserved frames;
/// observed frames stay exactly zero.
inline ResidualTrajectory forward_diffuse(const ResidualTrajectory& x0, int t, const ResidualTrajectory& noise,
                                          const std::vector<bool>& mask, const NoiseSchedule& schedule) {
  if (!x0.tensor().same_shape(noise.tensor())) throw Error(Errc::ShapeMismatch, "noise shape differs from residual");
  x0.check_mask(mask);
  const double ab = schedule.alpha_bar(t);
  const double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
  ResidualTrajectory out(x0.size());
  for (std::size_t c = 0; c < kPoseChannels; ++c)
    for (std::size_t i = 0; i < x0.size(); ++i)
      out.tensor()(c, i) = mask[i] ? 0.0 : a * x0.tensor()(c, i) + b * noise.tensor()(c, i);
  return out;
}

/// One ancestral step x_t -> x_{t-1} from an x_0 prediction, using the
/// Gaussian posterior q(x_{t-1} | x_t, x_0) with its fixed variance. At
/// t = 1 the prediction itself is returned. Observed frames are re-pinned.
inline ResidualTrajectory reverse_step(const ResidualTrajectory& xt, int t, const ResidualTrajectory& x0_pred,
                                       const NoiseSchedule& schedule, const std::vector<bool>& mask,
                                       std::mt19937_64& rng) {
  if (!xt.tensor().same_shape(x0_pred.tensor())) throw Error(Errc::ShapeMismatch, "prediction shape differs");
  xt.check_mask(mask);
  ResidualTrajectory out(xt.size());
  if (t == 1) {
    schedule.check_step(t);
    out = x0_pred;
    out.zero_rows(mask);
    return out;
  }
  const double ab = schedule.alpha_bar(t), ab_prev = schedule.alpha_bar(t - 1);
  const double beta = schedule.beta(t), alpha = schedule.alpha(t);
  const double c0 = std::sqrt(ab_prev) * beta / (1.0 - ab);
  const double ct = std::sqrt(alpha) * (1.0 - ab_prev) / (1.0 - ab);
  const double sigma = std::sqrt(schedule.posterior_variance(t));
  std::normal_distribution<double> n(0.0, 1.0);
  for (std::size_t c = 0; c < kPoseChannels; ++c) {
    for (std::size_t i = 0; i < xt.size(); ++i) {
      const double z = n(rng);  // drawn for every entry so the stream does not depend on the mask
      out.tensor()(c, i) = mask[i] ? 0.0 : c0 * x0_pred.tensor()(c, i) + ct * xt.tensor()(c, i) + sigma * z;
    }
  }
  return out;
}

}  // namespace resdiff::diffusion
