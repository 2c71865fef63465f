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

#include <cstdint>
#include <random>
#include <vector>

#include "resdiff/diffusion/model.hpp"
#include "resdiff/diffusion/residual.hpp"
#include "resdiff/geometry.hpp"
#include "resdiff/nn/tensor.hpp"
#include "resdiff/spline.hpp"

namespace resdiff::diffusion {

struct SamplerOutput {
  Trajectory trajectory;
  nn::Tensor bottleneck;  // C_b x ceil(N/4), from the t = 1 evaluation
  ResidualTrajectory residual;  // physical units
};

/// Ancestral sampling from pure noise down to t = 1, conditioned on the
/// Catmull-Rom baseline through `obs`. The result passes through every
/// observation exactly.
inline SamplerOutput sample_trajectory(const DiffusionModel& model, const SparseObservations& obs, std::uint64_t seed) {
  const Trajectory baseline = build_baseline(obs, BaselineMode::CatmullRom);
  const std::vector<bool> mask = obs.mask();
  const Conditioning cond = model.condition(baseline, mask);
  std::mt19937_64 rng(seed);
  ResidualTrajectory x = gaussian_residual(baseline.size(), mask, rng);
  nn::Tensor bottleneck;
  for (int t = model.schedule().steps(); t >= 1; --t) {
    Prediction p = model.predict(x, cond, t);
    if (t == 1) bottleneck = std::move(p.forward.bottleneck);
    x = reverse_step(x, t, p.x0, model.schedule(), mask, rng);
  }
  ResidualTrajectory residual = model.to_physical(x);
  Trajectory traj = compose(baseline, residual, mask);
  return {std::move(traj), std::move(bottleneck), std::move(residual)};
}

}  // namespace resdiff::diffusion
