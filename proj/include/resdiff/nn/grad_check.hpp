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
#include <string>

#include "resdiff/nn/tensor.hpp"

namespace resdiff::nn {

struct GradCheckOptions {
  double step = 1e-5;
  // Denominator floor so parameters with vanishing gradient do not blow up
  // the relative error.
  double abs_floor = 1e-5;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
};

inline double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Compares `grad(params)` with central differences of `loss(params)` on
/// every scalar of `params`.
template <class LossFn, class GradFn>
GradCheckResult grad_check(TensorTable params, LossFn&& loss, GradFn&& grad, GradCheckOptions opt = {}) {
  const TensorTable analytic = grad(static_cast<const TensorTable&>(params));
  GradCheckResult r;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto vals = params[i].values();
    const auto a = analytic[i].values();
    for (std::size_t j = 0; j < vals.size(); ++j) {
      const double orig = vals[j];
      vals[j] = orig + opt.step;
      const double lp = loss(static_cast<const TensorTable&>(params));
      vals[j] = orig - opt.step;
      const double lm = loss(static_cast<const TensorTable&>(params));
      vals[j] = orig;
      const double numeric = (lp - lm) / (2.0 * opt.step);
      const double e = relative_error(a[j], numeric, opt.abs_floor);
      ++r.checked;
      if (e > r.max_relative_error) {
        r.max_relative_error = e;
        r.worst_tensor = params.name(i);
        r.worst_index = j;
      }
    }
  }
  return r;
}

}  // namespace resdiff::nn
