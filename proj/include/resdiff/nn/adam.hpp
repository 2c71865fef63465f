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

#include <cmath>
#include <cstddef>

#include "resdiff/error.hpp"
#include "resdiff/nn/tensor.hpp"

namespace resdiff::nn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias-corrected moments. Moment tables mirror the parameter layout.
class Adam {
 public:
  Adam() = default;
  explicit Adam(const TensorTable& layout, AdamConfig cfg = {})
      : cfg_(cfg), m_(layout.zeros_like()), v_(layout.zeros_like()) {}

  void step(TensorTable& params, const TensorTable& grads, double lr) {
    if (!params.same_layout(grads) || !params.same_layout(m_)) {
      throw Error(Errc::ShapeMismatch, "Adam: parameter, gradient and state layouts differ");
    }
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto p = params[i].values();
      const auto g = grads[i].values();
      auto m = m_[i].values();
      auto v = v_[i].values();
      for (std::size_t j = 0; j < p.size(); ++j) {
        m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
        v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
        const double mhat = m[j] / bc1;
        const double vhat = v[j] / bc2;
        p[j] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
    }
  }

  long steps() const noexcept { return step_; }
  const TensorTable& first_moment() const noexcept { return m_; }
  const TensorTable& second_moment() const noexcept { return v_; }

 private:
  AdamConfig cfg_;
  TensorTable m_;
  TensorTable v_;
  long step_ = 0;
};

}  // namespace resdiff::nn
