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
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "resdiff/error.hpp"

namespace resdiff {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3& operator+=(const Vec3& o) noexcept { x += o.x; y += o.y; z += o.z; return *this; }
  constexpr Vec3& operator-=(const Vec3& o) noexcept { x -= o.x; y -= o.y; z -= o.z; return *this; }
  constexpr Vec3& operator*=(double s) noexcept { x *= s; y *= s; z *= s; return *this; }

  friend constexpr Vec3 operator+(Vec3 a, const Vec3& b) noexcept { return a += b; }
  friend constexpr Vec3 operator-(Vec3 a, const Vec3& b) noexcept { return a -= b; }
  friend constexpr Vec3 operator-(const Vec3& a) noexcept { return {-a.x, -a.y, -a.z}; }
  friend constexpr Vec3 operator*(Vec3 a, double s) noexcept { return a *= s; }
  friend constexpr Vec3 operator*(double s, Vec3 a) noexcept { return a *= s; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;

  constexpr double operator[](int i) const noexcept { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double& operator[](int i) noexcept { return i == 0 ? x : (i == 1 ? y : z); }

  bool finite() const noexcept { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

constexpr double dot(const Vec3& a, const Vec3& b) noexcept { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) noexcept {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& v) noexcept { return std::sqrt(dot(v, v)); }
inline double distance(const Vec3& a, const Vec3& b) noexcept { return norm(a - b); }

/// Unconstrained quaternion in (w, x, y, z) order. Residuals and
/// gradients live here; rotations use UnitQuaternion.
struct Quat4 {
  double w = 0.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Quat4& operator+=(const Quat4& o) noexcept { w += o.w; x += o.x; y += o.y; z += o.z; return *this; }
  constexpr Quat4& operator-=(const Quat4& o) noexcept { w -= o.w; x -= o.x; y -= o.y; z -= o.z; return *this; }
  constexpr Quat4& operator*=(double s) noexcept { w *= s; x *= s; y *= s; z *= s; return *this; }

  friend constexpr Quat4 operator+(Quat4 a, const Quat4& b) noexcept { return a += b; }
  friend constexpr Quat4 operator-(Quat4 a, const Quat4& b) noexcept { return a -= b; }
  friend constexpr Quat4 operator-(const Quat4& a) noexcept { return {-a.w, -a.x, -a.y, -a.z}; }
  friend constexpr Quat4 operator*(Quat4 a, double s) noexcept { return a *= s; }
  friend constexpr Quat4 operator*(double s, Quat4 a) noexcept { return a *= s; }
  friend constexpr bool operator==(const Quat4&, const Quat4&) = default;

  constexpr double operator[](int i) const noexcept {
    return i == 0 ? w : (i == 1 ? x : (i == 2 ? y : z));
  }
  constexpr double& operator[](int i) noexcept {
    return i == 0 ? w : (i == 1 ? x : (i == 2 ? y : z));
  }

  bool finite() const noexcept {
    return std::isfinite(w) && std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

constexpr double dot(const Quat4& a, const Quat4& b) noexcept {
  return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
}
inline double norm(const Quat4& q) noexcept { return std::sqrt(dot(q, q)); }

/// Hamilton product.
constexpr Quat4 hamilton(const Quat4& a, const Quat4& b) noexcept {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

inline constexpr double kMinQuaternionNorm = 1e-12;
inline constexpr double kSlerpLerpThreshold = 1e-6;

/// Rotation as a unit quaternion. q and -q are the same rotation.
class UnitQuaternion {
 public:
  constexpr UnitQuaternion() noexcept = default;

  static UnitQuaternion identity() noexcept { return {}; }

  /// Throws ZeroNormQuaternion when |raw| <= 1e-12. Inputs already unit to
  /// within a few ulps are kept unchanged, so normalization is idempotent.
  static UnitQuaternion normalize(const Quat4& raw) {
    const double n = norm(raw);
    if (!(n > kMinQuaternionNorm)) {
      throw Error(Errc::ZeroNormQuaternion, "cannot normalize a quaternion of norm " + std::to_string(n));
    }
    if (std::abs(n - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon()) return UnitQuaternion(raw);
    const Quat4 u = raw * (1.0 / n);
    return UnitQuaternion(u);
  }

  /// Rotation of `angle` radians about `axis` (any non-zero length).
  static UnitQuaternion from_axis_angle(const Vec3& axis, double angle) {
    const double n = norm(axis);
    if (!(n > 0.0)) throw Error(Errc::ZeroNormQuaternion, "zero rotation axis");
    const double s = std::sin(0.5 * angle) / n;
    return normalize({std::cos(0.5 * angle), axis.x * s, axis.y * s, axis.z * s});
  }

  double w() const noexcept { return q_.w; }
  double x() const noexcept { return q_.x; }
  double y() const noexcept { return q_.y; }
  double z() const noexcept { return q_.z; }
  const Quat4& raw() const noexcept { return q_; }

  UnitQuaternion operator-() const noexcept { return UnitQuaternion(-q_); }
  UnitQuaternion conjugate() const noexcept { return UnitQuaternion({q_.w, -q_.x, -q_.y, -q_.z}); }

  friend UnitQuaternion operator*(const UnitQuaternion& a, const UnitQuaternion& b) {
    return normalize(hamilton(a.q_, b.q_));
  }
  friend bool operator==(const UnitQuaternion&, const UnitQuaternion&) = default;

  Vec3 rotate(const Vec3& v) const noexcept {
    const Vec3 u{q_.x, q_.y, q_.z};
    const Vec3 t = 2.0 * cross(u, v);
    return v + q_.w * t + cross(u, t);
  }

 private:
  explicit constexpr UnitQuaternion(const Quat4& q) noexcept : q_(q) {}

  Quat4 q_{1.0, 0.0, 0.0, 0.0};
};

inline double dot(const UnitQuaternion& a, const UnitQuaternion& b) noexcept { return dot(a.raw(), b.raw()); }

struct Pose {
  Vec3 translation;
  UnitQuaternion rotation;

  friend bool operator==(const Pose&, const Pose&) = default;
};

/// Normalizes a raw 4-vector, see UnitQuaternion::normalize.
inline UnitQuaternion quat_normalize(const Quat4& q) { return UnitQuaternion::normalize(q); }

/// Flips signs so consecutive quaternions have non-negative dot products.
/// The first element is kept as is.
inline std::vector<UnitQuaternion> hemisphere_align(std::span<const UnitQuaternion> seq) {
  std::vector<UnitQuaternion> out(seq.begin(), seq.end());
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (dot(out[i - 1], out[i]) < 0.0) out[i] = -out[i];
  }
  return out;
}

/// Returns `q` or `-q`, whichever lies in the hemisphere of `reference`.
inline UnitQuaternion align_to(const UnitQuaternion& reference, const UnitQuaternion& q) noexcept {
  return dot(reference, q) < 0.0 ? -q : q;
}

/// Spherical linear interpolation on the shorter arc. Falls back to
/// normalized lerp when the arc is shorter than 1e-6 rad.
inline UnitQuaternion slerp(const UnitQuaternion& q0, const UnitQuaternion& q1, double t) {
  const Quat4& a = q0.raw();
  Quat4 b = q1.raw();
  double d = dot(a, b);
  if (d < 0.0) {
    b = -b;
    d = -d;
  }
  d = std::min(d, 1.0);
  const double omega = std::acos(d);
  if (omega < kSlerpLerpThreshold) return UnitQuaternion::normalize((1.0 - t) * a + t * b);
  const double s = std::sin(omega);
  const double wa = std::sin((1.0 - t) * omega) / s;
  const double wb = std::sin(t * omega) / s;
  return UnitQuaternion::normalize(wa * a + wb * b);
}

/// Rotation angle between two orientations, in [0, pi]. Equals
/// 2*acos(|<q0,q1>|); evaluated through the half-chord ratio, which stays
/// accurate near zero where acos loses precision.
inline double geodesic_distance(const UnitQuaternion& q0, const UnitQuaternion& q1) noexcept {
  Quat4 b = q1.raw();
  if (dot(q0.raw(), b) < 0.0) b = -b;
  const double minus = norm(q0.raw() - b);
  const double plus = norm(q0.raw() + b);
  return 4.0 * std::atan2(minus, plus);
}

/// Sign-invariant Euclidean distance min(|q0-q1|, |q0+q1|).
inline double quaternion_distance(const UnitQuaternion& q0, const UnitQuaternion& q1) noexcept {
  return std::min(norm(q0.raw() - q1.raw()), norm(q0.raw() + q1.raw()));
}

/// Ordered pose sequence. Construction validates length and finiteness and
/// hemisphere-aligns the rotations.
class Trajectory {
 public:
  Trajectory() = default;

  explicit Trajectory(std::vector<Pose> poses, double frame_rate_hint = 30.0)
      : poses_(std::move(poses)), frame_rate_hint_(frame_rate_hint) {
    if (poses_.size() < 2) {
      throw Error(Errc::InvalidTrajectory, "trajectory needs at least 2 poses, got " + std::to_string(poses_.size()));
    }
    for (std::size_t i = 0; i < poses_.size(); ++i) {
      if (!poses_[i].translation.finite() || !poses_[i].rotation.raw().finite()) {
        throw Error(Errc::NonFiniteValue, "non-finite pose at frame " + std::to_string(i));
      }
      if (i > 0 && dot(poses_[i - 1].rotation, poses_[i].rotation) < 0.0) {
        poses_[i].rotation = -poses_[i].rotation;
      }
    }
  }

  std::size_t size() const noexcept { return poses_.size(); }
  const Pose& operator[](std::size_t i) const noexcept { return poses_[i]; }
  const std::vector<Pose>& poses() const noexcept { return poses_; }
  double frame_rate_hint() const noexcept { return frame_rate_hint_; }

  auto begin() const noexcept { return poses_.begin(); }
  auto end() const noexcept { return poses_.end(); }

  std::vector<Vec3> translations() const {
    std::vector<Vec3> out;
    out.reserve(poses_.size());
    for (const auto& p : poses_) out.push_back(p.translation);
    return out;
  }

 private:
  std::vector<Pose> poses_;
  double frame_rate_hint_ = 30.0;
};

}  // namespace resdiff
