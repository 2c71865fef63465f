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
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "resdiff/error.hpp"
#include "resdiff/geometry.hpp"

namespace resdiff {

inline constexpr int kDefaultSamplesPerSegment = 64;
inline constexpr int kDefaultEvalMultiplier = 8;
inline constexpr double kDegenerateLength = 1e-12;

struct Observation {
  int frame = 0;
  Pose pose;
};

/// Known poses with their frame indices inside a trajectory of
/// `target_length` frames.
class SparseObservations {
 public:
  SparseObservations(std::vector<Observation> entries, int target_length)
      : entries_(std::move(entries)), target_length_(target_length) {
    if (entries_.size() < 2) {
      throw Error(Errc::TooFewObservations, "need at least 2 observations, got " + std::to_string(entries_.size()));
    }
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const int f = entries_[i].frame;
      if (f < 0 || f >= target_length_) {
        throw Error(Errc::IndexOutOfRange,
                    "observation frame " + std::to_string(f) + " outside [0, " + std::to_string(target_length_) + ")");
      }
      if (i > 0 && f <= entries_[i - 1].frame) {
        throw Error(Errc::IndexOutOfRange, "observation frames must be strictly increasing at entry " + std::to_string(i));
      }
      if (i > 0) entries_[i].pose.rotation = align_to(entries_[i - 1].pose.rotation, entries_[i].pose.rotation);
    }
  }

  const std::vector<Observation>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  int target_length() const noexcept { return target_length_; }

  /// One flag per frame, true where the pose is known.
  std::vector<bool> mask() const {
    std::vector<bool> m(static_cast<std::size_t>(target_length_), false);
    for (const auto& e : entries_) m[static_cast<std::size_t>(e.frame)] = true;
    return m;
  }

 private:
  std::vector<Observation> entries_;
  int target_length_ = 0;
};

/// Cubic a*u^3 + b*u^2 + c*u + d over u in [0, 1] with SLERP between the
/// endpoint rotations. `end` is the exact translation at u = 1.
struct CubicSegment {
  Vec3 a, b, c, d;
  Vec3 end;
  UnitQuaternion q0, q1;

  static CubicSegment from_coefficients(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d,
                                        const UnitQuaternion& q0 = {}, const UnitQuaternion& q1 = {}) {
    return {a, b, c, d, ((a + b) + c) + d, q0, q1};
  }

  /// Hermite form: endpoints p0, p1 and endpoint derivatives with respect
  /// to u (already scaled by the knot span).
  static CubicSegment from_hermite(const Pose& start, const Pose& stop, const Vec3& m0, const Vec3& m1) {
    const Vec3& p0 = start.translation;
    const Vec3& p1 = stop.translation;
    return {2.0 * (p0 - p1) + m0 + m1, 3.0 * (p1 - p0) - 2.0 * m0 - m1, m0, p0, p1, start.rotation, stop.rotation};
  }
};

/// ((a*u + b)*u + c)*u + d, three multiplications per component.
constexpr Vec3 eval_cubic_horner(const CubicSegment& seg, double u) noexcept {
  return {((seg.a.x * u + seg.b.x) * u + seg.c.x) * u + seg.d.x,
          ((seg.a.y * u + seg.b.y) * u + seg.c.y) * u + seg.d.y,
          ((seg.a.z * u + seg.b.z) * u + seg.c.z) * u + seg.d.z};
}

/// Segment pose at u; endpoints are reproduced exactly.
inline Pose segment_pose(const CubicSegment& seg, double u) {
  if (u <= 0.0) return {seg.d, seg.q0};
  if (u >= 1.0) return {seg.end, align_to(seg.q0, seg.q1)};
  return {eval_cubic_horner(seg, u), slerp(seg.q0, seg.q1, u)};
}

/// Catmull-Rom tangents (derivative per unit knot) for points at strictly
/// increasing knots. Interior tangents are central differences over the
/// neighbouring knots; the ends use a reflected phantom point, which reduces
/// to the one-sided chord.
inline std::vector<Vec3> catmull_rom_tangents(std::span<const Vec3> points, std::span<const double> knots) {
  const std::size_t n = points.size();
  std::vector<Vec3> m(n);
  if (n < 2) return m;
  m.front() = (points[1] - points[0]) * (1.0 / (knots[1] - knots[0]));
  m.back() = (points[n - 1] - points[n - 2]) * (1.0 / (knots[n - 1] - knots[n - 2]));
  for (std::size_t i = 1; i + 1 < n; ++i) {
    m[i] = (points[i + 1] - points[i - 1]) * (1.0 / (knots[i + 1] - knots[i - 1]));
  }
  return m;
}

/// One Catmull-Rom segment per consecutive pose pair.
inline std::vector<CubicSegment> catmull_rom_segments(std::span<const Pose> poses, std::span<const double> knots) {
  if (poses.size() != knots.size()) throw Error(Errc::ShapeMismatch, "poses and knots differ in length");
  std::vector<Vec3> pts;
  pts.reserve(poses.size());
  for (const auto& p : poses) pts.push_back(p.translation);
  const auto m = catmull_rom_tangents(pts, knots);
  std::vector<CubicSegment> segs;
  segs.reserve(poses.size() > 0 ? poses.size() - 1 : 0);
  for (std::size_t i = 0; i + 1 < poses.size(); ++i) {
    const double h = knots[i + 1] - knots[i];
    segs.push_back(CubicSegment::from_hermite(poses[i], poses[i + 1], m[i] * h, m[i + 1] * h));
  }
  return segs;
}

/// Catmull-Rom segments through every pose of a trajectory at unit spacing.
inline std::vector<CubicSegment> catmull_rom_segments(const Trajectory& traj) {
  std::vector<double> knots(traj.size());
  for (std::size_t i = 0; i < knots.size(); ++i) knots[i] = static_cast<double>(i);
  return catmull_rom_segments(traj.poses(), knots);
}

enum class BaselineMode { CatmullRom, Linear };

/// Interpolating baseline through sparse observations. Knots are the
/// observation frame indices; frames outside the observed range hold the
/// nearest observed pose.
inline Trajectory build_baseline(const SparseObservations& obs, BaselineMode mode) {
  const auto& entries = obs.entries();
  const std::size_t n = static_cast<std::size_t>(obs.target_length());
  std::vector<Pose> out(n);

  std::vector<Pose> poses;
  std::vector<double> knots;
  for (const auto& e : entries) {
    poses.push_back(e.pose);
    knots.push_back(static_cast<double>(e.frame));
  }
  std::vector<CubicSegment> segs;
  if (mode == BaselineMode::CatmullRom) segs = catmull_rom_segments(poses, knots);

  for (int f = 0; f < entries.front().frame; ++f) out[static_cast<std::size_t>(f)] = entries.front().pose;
  for (std::size_t s = 0; s + 1 < entries.size(); ++s) {
    const int f0 = entries[s].frame;
    const int f1 = entries[s + 1].frame;
    const double span = static_cast<double>(f1 - f0);
    out[static_cast<std::size_t>(f0)] = entries[s].pose;
    for (int f = f0 + 1; f < f1; ++f) {
      const double u = static_cast<double>(f - f0) / span;
      Pose& p = out[static_cast<std::size_t>(f)];
      if (mode == BaselineMode::CatmullRom) {
        p.translation = eval_cubic_horner(segs[s], u);
        p.rotation = slerp(entries[s].pose.rotation, entries[s + 1].pose.rotation, u);
      } else {
        p.translation = (1.0 - u) * entries[s].pose.translation + u * entries[s + 1].pose.translation;
        p.rotation = UnitQuaternion::normalize((1.0 - u) * entries[s].pose.rotation.raw() +
                                               u * entries[s + 1].pose.rotation.raw());
      }
    }
  }
  for (std::size_t f = static_cast<std::size_t>(entries.back().frame); f < n; ++f) out[f] = entries.back().pose;
  return Trajectory(std::move(out));
}

/// Dense point sequence with cumulative Euclidean arc length.
struct DensePolyline {
  std::vector<Pose> points;
  std::vector<double> cumulative_length;
  std::vector<std::size_t> segment_index;

  double total_length() const noexcept { return cumulative_length.empty() ? 0.0 : cumulative_length.back(); }

  static DensePolyline from_points(std::vector<Pose> pts, std::vector<std::size_t> segment_index = {}) {
    DensePolyline poly;
    poly.cumulative_length.resize(pts.size(), 0.0);
    for (std::size_t i = 1; i < pts.size(); ++i) {
      poly.cumulative_length[i] = poly.cumulative_length[i - 1] + distance(pts[i].translation, pts[i - 1].translation);
    }
    if (segment_index.empty()) segment_index.assign(pts.size(), 0);
    poly.points = std::move(pts);
    poly.segment_index = std::move(segment_index);
    return poly;
  }
};

/// Samples each segment at u = j/(n-1), j = 0..n-1, and concatenates.
inline DensePolyline densify(std::span<const CubicSegment> segs, int n_per_segment) {
  if (n_per_segment < 2) throw Error(Errc::InvalidParams, "n_per_segment must be >= 2");
  std::vector<Pose> pts;
  std::vector<std::size_t> seg_idx;
  pts.reserve(segs.size() * static_cast<std::size_t>(n_per_segment));
  const double denom = static_cast<double>(n_per_segment - 1);
  for (std::size_t s = 0; s < segs.size(); ++s) {
    for (int j = 0; j < n_per_segment; ++j) {
      pts.push_back(segment_pose(segs[s], static_cast<double>(j) / denom));
      seg_idx.push_back(s);
    }
  }
  return DensePolyline::from_points(std::move(pts), std::move(seg_idx));
}

inline DensePolyline densify(const Trajectory& traj, int n_per_segment = kDefaultSamplesPerSegment) {
  const auto segs = catmull_rom_segments(traj);
  return densify(segs, n_per_segment);
}

/// Step of the polyline containing one arc-length sample. `lo == hi` when
/// the sample sits on the first point.
struct ResampleLookup {
  std::size_t lo = 0;
  std::size_t hi = 0;
  double weight = 0.0;
};

/// Lookup table for N_eval samples at arc lengths k*L/(N_eval-1).
inline std::vector<ResampleLookup> arc_length_lookups(std::span<const double> cumulative, int n_eval) {
  std::vector<ResampleLookup> out(static_cast<std::size_t>(n_eval));
  const double total = cumulative.back();
  const std::size_t last = cumulative.size() - 1;
  for (int k = 0; k < n_eval; ++k) {
    const double s = total * static_cast<double>(k) / static_cast<double>(n_eval - 1);
    const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), s);
    std::size_t hi = static_cast<std::size_t>(it - cumulative.begin());
    ResampleLookup& lk = out[static_cast<std::size_t>(k)];
    if (hi == 0) {
      lk = {0, 0, 0.0};
      continue;
    }
    if (hi > last) hi = last;
    const std::size_t lo = hi - 1;
    const double step = cumulative[hi] - cumulative[lo];
    const double w = step > 0.0 ? (s - cumulative[lo]) / step : 1.0;
    lk = {lo, hi, std::clamp(w, 0.0, 1.0)};
  }
  return out;
}

struct ResampleResult {
  std::vector<Pose> poses;
  bool degenerate = false;
};

/// N_eval poses evenly spaced in arc length. A polyline shorter than 1e-12
/// yields copies of its first pose with `degenerate` set.
inline ResampleResult arc_length_resample(const DensePolyline& poly, int n_eval) {
  if (n_eval < 2) throw Error(Errc::InvalidParams, "N_eval must be >= 2");
  if (poly.points.empty()) throw Error(Errc::InvalidParams, "empty polyline");
  ResampleResult res;
  if (poly.points.size() < 2 || poly.total_length() < kDegenerateLength) {
    res.poses.assign(static_cast<std::size_t>(n_eval), poly.points.front());
    res.degenerate = true;
    return res;
  }
  const auto lookups = arc_length_lookups(poly.cumulative_length, n_eval);
  res.poses.reserve(lookups.size());
  for (const auto& lk : lookups) {
    if (lk.lo == lk.hi) {
      res.poses.push_back(poly.points[lk.lo]);
      continue;
    }
    const Pose& a = poly.points[lk.lo];
    const Pose& b = poly.points[lk.hi];
    res.poses.push_back({(1.0 - lk.weight) * a.translation + lk.weight * b.translation,
                         slerp(a.rotation, b.rotation, lk.weight)});
  }
  return res;
}

}  // namespace resdiff
