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
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "resdiff/diffusion/sampler.hpp"
#include "resdiff/error.hpp"

namespace resdiff::diffusion {

/// Bottleneck column j sits at frame 4j (two stride-2 stages).
inline constexpr double kBottleneckStride = 4.0;

/// One record per requested frame: tx, ty, tz, qw, qx, qy, qz followed by
/// the bottleneck features linearly interpolated to that frame.
inline std::vector<std::vector<double>> export_spatial_features(const SamplerOutput& out, std::span<const int> frames) {
  const std::size_t n = out.trajectory.size();
  const std::size_t cb = out.bottleneck.channels();
  const std::size_t len = out.bottleneck.length();
  if (len == 0) throw Error(Errc::ShapeMismatch, "sampler output has no bottleneck features");
  std::vector<std::vector<double>> records;
  records.reserve(frames.size());
  for (int f : frames) {
    if (f < 0 || static_cast<std::size_t>(f) >= n) {
      throw Error(Errc::IndexOutOfRange, "frame " + std::to_string(f) + " outside [0, " + std::to_string(n) + ")");
    }
    const Pose& p = out.trajectory[static_cast<std::size_t>(f)];
    std::vector<double> r{p.translation.x, p.translation.y, p.translation.z,
                          p.rotation.w(), p.rotation.x(), p.rotation.y(), p.rotation.z()};
    r.reserve(7 + cb);
    const double pos = std::min(static_cast<double>(f) / kBottleneckStride, static_cast<double>(len - 1));
    const std::size_t j0 = static_cast<std::size_t>(std::floor(pos));
    const std::size_t j1 = std::min(j0 + 1, len - 1);
    const double w = pos - static_cast<double>(j0);
    for (std::size_t c = 0; c < cb; ++c) {
      const double a = out.bottleneck(c, j0);
      r.push_back(w == 0.0 ? a : a + w * (out.bottleneck(c, j1) - a));
    }
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace resdiff::diffusion
