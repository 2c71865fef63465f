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
#include <map>
#include <new>
#include <span>
#include <string>
#include <vector>

#include "resdiff/error.hpp"

namespace resdiff::nn {

/// Cache-line aligned storage. Vectorized GEMM kernels pick their code path
/// from the data address, so a fixed alignment keeps results bitwise
/// reproducible across runs.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

using AlignedVector = std::vector<double, AlignedAllocator<double>>;

/// Row-major (channels x length) buffer of doubles.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t channels, std::size_t length, double fill = 0.0)
      : channels_(channels), length_(length), values_(channels * length, fill) {}
  Tensor(std::size_t channels, std::size_t length, std::vector<double> values)
      : channels_(channels), length_(length), values_(values.begin(), values.end()) {
    if (values_.size() != channels_ * length_) {
      throw Error(Errc::ShapeMismatch, "value count " + std::to_string(values_.size()) + " != " +
                                           std::to_string(channels_) + "x" + std::to_string(length_));
    }
  }

  std::size_t channels() const noexcept { return channels_; }
  std::size_t length() const noexcept { return length_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t c, std::size_t t) noexcept { return values_[c * length_ + t]; }
  double operator()(std::size_t c, std::size_t t) const noexcept { return values_[c * length_ + t]; }

  double* row(std::size_t c) noexcept { return values_.data() + c * length_; }
  const double* row(std::size_t c) const noexcept { return values_.data() + c * length_; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }

  bool same_shape(const Tensor& o) const noexcept { return channels_ == o.channels_ && length_ == o.length_; }
  void fill(double v) { std::fill(values_.begin(), values_.end(), v); }

  bool all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  Tensor& operator+=(const Tensor& o) {
    require_same_shape(o, "+=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }

  void require_same_shape(const Tensor& o, const char* what) const {
    if (!same_shape(o)) {
      throw Error(Errc::ShapeMismatch, std::string(what) + ": " + shape_string() + " vs " + o.shape_string());
    }
  }

  std::string shape_string() const { return "(" + std::to_string(channels_) + "x" + std::to_string(length_) + ")"; }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t channels_ = 0;
  std::size_t length_ = 0;
  AlignedVector values_;
};

/// Named tensors in a fixed registration order. Model weights, gradients
/// and optimizer moments all use this layout.
class TensorTable {
 public:
  std::size_t add(std::string name, Tensor t) {
    if (index_.count(name) != 0) throw Error(Errc::ShapeMismatch, "duplicate tensor name " + name);
    index_.emplace(name, tensors_.size());
    names_.push_back(std::move(name));
    tensors_.push_back(std::move(t));
    return tensors_.size() - 1;
  }

  std::size_t size() const noexcept { return tensors_.size(); }
  Tensor& operator[](std::size_t i) noexcept { return tensors_[i]; }
  const Tensor& operator[](std::size_t i) const noexcept { return tensors_[i]; }
  const std::string& name(std::size_t i) const noexcept { return names_[i]; }
  const std::vector<std::string>& names() const noexcept { return names_; }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  std::size_t index_of(const std::string& name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) throw Error(Errc::ShapeMismatch, "no tensor named " + name);
    return it->second;
  }
  const Tensor& at(const std::string& name) const { return tensors_[index_of(name)]; }

  std::size_t scalar_count() const noexcept {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.size();
    return n;
  }

  /// Same names and shapes, all zeros.
  TensorTable zeros_like() const {
    TensorTable out;
    for (std::size_t i = 0; i < tensors_.size(); ++i) out.add(names_[i], Tensor(tensors_[i].channels(), tensors_[i].length()));
    return out;
  }

  void set_zero() {
    for (auto& t : tensors_) t.fill(0.0);
  }

  bool same_layout(const TensorTable& o) const {
    if (o.size() != size()) return false;
    for (std::size_t i = 0; i < size(); ++i) {
      if (names_[i] != o.names_[i] || !tensors_[i].same_shape(o.tensors_[i])) return false;
    }
    return true;
  }

  TensorTable& operator+=(const TensorTable& o) {
    if (!same_layout(o)) throw Error(Errc::ShapeMismatch, "tensor tables differ in layout");
    for (std::size_t i = 0; i < size(); ++i) tensors_[i] += o.tensors_[i];
    return *this;
  }

  void scale(double s) {
    for (auto& t : tensors_)
      for (double& v : t.values()) v *= s;
  }

  friend bool operator==(const TensorTable& a, const TensorTable& b) {
    return a.names_ == b.names_ && a.tensors_ == b.tensors_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace resdiff::nn
