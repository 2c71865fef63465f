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

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "resdiff/error.hpp"

namespace resdiff::diffusion {

enum class ScheduleKind { Linear, Cosine };

inline std::string to_string(ScheduleKind k) { return k == ScheduleKind::Linear ? "linear" : "cosine"; }

inline ScheduleKind parse_schedule_kind(const std::string& s) {
  if (s == "linear") return ScheduleKind::Linear;
  if (s == "cosine") return ScheduleKind::Cosine;
  throw Error(Errc::InvalidParams, "unknown schedule kind '" + s + "' (expected linear or cosine)");
}

inline constexpr double kLinearBetaStart = 1e-4;
inline constexpr double kLinearBetaEnd = 2e-2;
inline constexpr double kCosineOffset = 0.008;
inline constexpr double kMaxBeta = 0.999;

/// Per-step tables indexed by t = 1..T (stored at t-1). alpha_bar(0) = 1.
class NoiseSchedule {
 public:
  NoiseSchedule() = default;
  NoiseSchedule(ScheduleKind kind, std::vector<double> betas) : kind_(kind), beta_(std::move(betas)) {
    if (beta_.empty()) throw Error(Errc::InvalidSteps, "schedule needs at least one step");
    alpha_.resize(beta_.size());
    alpha_bar_.resize(beta_.size());
    double prod = 1.0;
    for (std::size_t i = 0; i < beta_.size(); ++i) {
      if (!(beta_[i] > 0.0 && beta_[i] < 1.0)) throw Error(Errc::InvalidSteps, "beta outside (0, 1)");
      alpha_[i] = 1.0 - beta_[i];
      prod *= alpha_[i];
      alpha_bar_[i] = prod;
    }
  }

  int steps() const noexcept { return static_cast<int>(beta_.size()); }
  ScheduleKind kind() const noexcept { return kind_; }

  double beta(int t) const { return beta_[index(t)]; }
  double alpha(int t) const { return alpha_[index(t)]; }
  double alpha_bar(int t) const {
    if (t == 0) return 1.0;
    return alpha_bar_[index(t)];
  }

  /// beta_t (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t); zero at t = 1.
  double posterior_variance(int t) const {
    return beta(t) * (1.0 - alpha_bar(t - 1)) / (1.0 - alpha_bar(t));
  }

  void check_step(int t) const { (void)index(t); }

  const std::vector<double>& betas() const noexcept { return beta_; }
  const std::vector<double>& alpha_bars() const noexcept { return alpha_bar_; }

 private:
  std::size_t index(int t) const {
    if (t < 1 || t > steps()) {
      throw Error(Errc::OutOfRange, "diffusion step " + std::to_string(t) + " outside [1, " +
                                        std::to_string(steps()) + "]");
    }
    return static_cast<std::size_t>(t - 1);
  }

  ScheduleKind kind_ = ScheduleKind::Cosine;
  std::vector<double> beta_;
  std::vector<double> alpha_;
  std::vector<double> alpha_bar_;
};

inline NoiseSchedule make_schedule(int steps, ScheduleKind kind) {
  if (steps < 2) throw Error(Errc::InvalidSteps, "T_diff must be >= 2, got " + std::to_string(steps));
  std::vector<double> betas(static_cast<std::size_t>(steps));
  if (kind == ScheduleKind::Linear) {
    for (int i = 0; i < steps; ++i) {
      betas[static_cast<std::size_t>(i)] =
          kLinearBetaStart + (kLinearBetaEnd - kLinearBetaStart) * static_cast<double>(i) / static_cast<double>(steps - 1);
    }
  } else {
    const auto f = [&](int t) {
      const double x = (static_cast<double>(t) / steps + kCosineOffset) / (1.0 + kCosineOffset);
      const double c = std::cos(x * std::numbers::pi / 2.0);
      return c * c;
    };
    const double f0 = f(0);
    for (int t = 1; t <= steps; ++t) {
      const double ab = f(t) / f0;
      const double ab_prev = f(t - 1) / f0;
      betas[static_cast<std::size_t>(t - 1)] = std::min(1.0 - ab / ab_prev, kMaxBeta);
    }
  }
  return NoiseSchedule(kind, std::move(betas));
}

}  // namespace resdiff::diffusion
