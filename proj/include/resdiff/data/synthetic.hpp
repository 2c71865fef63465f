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

// Synthetic indoor walk-through generator and the stride subsampling
// protocol used for sparse observations.
//
// A scene is a rectilinear route between room centres on a grid. The route
// is smoothed along arc length, then offset by a gait-locked lateral sway,
// a smaller smooth wobble and a vertical bob. The camera walks along that
// final curve at a curvature-dependent speed, yawing towards the smoothed
// heading with a first-order lag and nodding in step with the gait.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "resdiff/error.hpp"
#include "resdiff/geometry.hpp"
#include "resdiff/spline.hpp"

namespace resdiff::data {

struct SyntheticSceneParams {
  std::uint64_t seed = 0;
  double extent_x = 16.0;  // meters
  double extent_y = 12.0;
  double room_size = 4.0;
  int waypoints = 6;
  double frame_rate = 30.0;
  double speed_min = 0.5;  // m/s
  double speed_max = 1.1;
  double sway_amplitude = 0.15;  // meters
  double sway_frequency = 0.8;   // Hz, one period per two steps
  double heading_smoothing = 0.4;  // seconds
  int length = 128;
  double corner_smoothing = 0.6;  // meters, Gaussian sigma along the route
  double wobble_ratio = 0.2;      // wobble bound as a fraction of the sway
  double bob_ratio = 0.15;        // vertical bob as a fraction of the sway
  double pitch_amplitude = 0.04;  // radians
  double eye_height = 1.6;

  double nominal_speed() const noexcept { return 0.5 * (speed_min + speed_max); }
  /// Distance walked in one sway period at the nominal speed.
  double gait_wavelength() const noexcept { return nominal_speed() / sway_frequency; }

  void validate() const {
    const auto fail = [](const std::string& what) { throw Error(Errc::InvalidParams, what); };
    if (!(extent_x > 0 && extent_y > 0 && room_size > 0)) fail("extents and room size must be positive");
    if (static_cast<int>(extent_x / room_size) * static_cast<int>(extent_y / room_size) < 2) {
      fail("room grid needs at least two rooms");
    }
    if (waypoints < 2) fail("waypoints must be >= 2");
    if (!(frame_rate > 0)) fail("frame_rate must be positive");
    if (!(speed_min > 0 && speed_max >= speed_min)) fail("speed bounds must satisfy 0 < min <= max");
    if (!(sway_amplitude >= 0 && sway_amplitude < 0.5)) fail("sway_amplitude must lie in [0, 0.5)");
    if (!(sway_frequency > 0)) fail("sway_frequency must be positive");
    if (!(heading_smoothing > 0)) fail("heading_smoothing must be positive");
    if (length < 8) fail("length must be >= 8");
    if (!(corner_smoothing > 0)) fail("corner_smoothing must be positive");
    if (!(wobble_ratio >= 0 && bob_ratio >= 0 && pitch_amplitude >= 0)) fail("ratios must be non-negative");
  }
};

namespace detail {

inline constexpr double kRouteStep = 0.01;  // meters between dense route samples

struct Planar {
  double x = 0.0, y = 0.0;
};

/// Dense polyline with cumulative length and linear lookup by arc length.
struct PathSamples {
  std::vector<Vec3> points;
  std::vector<double> s;

  void finish() {
    s.assign(points.size(), 0.0);
    for (std::size_t i = 1; i < points.size(); ++i) s[i] = s[i - 1] + distance(points[i], points[i - 1]);
  }
  double length() const { return s.back(); }

  Vec3 at(double arc) const {
    if (arc <= 0.0) return points.front();
    if (arc >= s.back()) return points.back();
    const auto it = std::upper_bound(s.begin(), s.end(), arc);
    const std::size_t hi = static_cast<std::size_t>(it - s.begin());
    const std::size_t lo = hi - 1;
    const double step = s[hi] - s[lo];
    const double w = step > 0.0 ? (arc - s[lo]) / step : 0.0;
    return (1.0 - w) * points[lo] + w * points[hi];
  }

  /// Unit tangent by central difference over one route step.
  Vec3 tangent(double arc) const {
    const Vec3 d = at(arc + kRouteStep) - at(arc - kRouteStep);
    const double n = norm(d);
    return n > 0.0 ? d * (1.0 / n) : Vec3{1.0, 0.0, 0.0};
  }
};

inline double wrap_angle(double a) {
  return std::remainder(a, 2.0 * std::numbers::pi);
}

}  // namespace detail

/// Rectilinear route through random room centres, Gaussian-smoothed along
/// arc length and long enough for `length` frames at maximum speed.
inline detail::PathSamples smoothed_route(const SyntheticSceneParams& p) {
  p.validate();
  std::mt19937_64 rng(p.seed);
  const int nx = static_cast<int>(p.extent_x / p.room_size);
  const int ny = static_cast<int>(p.extent_y / p.room_size);
  std::uniform_int_distribution<int> rx(0, nx - 1), ry(0, ny - 1);
  std::uniform_real_distribution<double> jitter(-0.25 * p.room_size, 0.25 * p.room_size);
  const auto centre = [&](int i, int j) {
    return detail::Planar{(i + 0.5) * p.room_size + jitter(rng), (j + 0.5) * p.room_size + jitter(rng)};
  };

  const double needed = (p.length + 1) * p.speed_max / p.frame_rate * 1.5 + 8.0 * p.corner_smoothing;
  std::vector<detail::Planar> corners;
  int ci = rx(rng), cj = ry(rng);
  corners.push_back(centre(ci, cj));
  double route_length = 0.0;
  std::bernoulli_distribution x_first(0.5);
  while (static_cast<int>(corners.size()) < p.waypoints || route_length < needed) {
    int ni = ci, nj = cj;
    while (ni == ci && nj == cj) {
      ni = rx(rng);
      nj = ry(rng);
    }
    const detail::Planar target = centre(ni, nj);
    const detail::Planar from = corners.back();
    // L-shaped leg: one axis, then the other.
    const detail::Planar elbow = x_first(rng) ? detail::Planar{target.x, from.y} : detail::Planar{from.x, target.y};
    corners.push_back(elbow);
    corners.push_back(target);
    route_length += std::abs(target.x - from.x) + std::abs(target.y - from.y);
    ci = ni;
    cj = nj;
  }

  // Dense samples of the rectilinear route, extended straight past both ends
  // so smoothing does not pull the ends inwards.
  std::vector<Vec3> dense;
  const auto push_leg = [&](const detail::Planar& a, const detail::Planar& b) {
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    if (len <= 0.0) return;
    const int steps = std::max(1, static_cast<int>(std::ceil(len / detail::kRouteStep)));
    for (int k = 0; k < steps; ++k) {
      const double w = static_cast<double>(k) / steps;
      dense.push_back({a.x + w * (b.x - a.x), a.y + w * (b.y - a.y), 0.0});
    }
  };
  const double pad = 4.0 * p.corner_smoothing;
  const auto extend = [&](const detail::Planar& end, const detail::Planar& inner) {
    double dx = end.x - inner.x, dy = end.y - inner.y;
    const double n = std::hypot(dx, dy);
    if (n > 0.0) {
      dx /= n;
      dy /= n;
    } else {
      dx = 1.0;
      dy = 0.0;
    }
    return detail::Planar{end.x + pad * dx, end.y + pad * dy};
  };
  std::vector<detail::Planar> route;
  for (const auto& c : corners)
    if (route.empty() || std::hypot(c.x - route.back().x, c.y - route.back().y) > 0.0) route.push_back(c);
  const detail::Planar head = extend(route[0], route[1]);
  const detail::Planar tail = extend(route[route.size() - 1], route[route.size() - 2]);
  push_leg(head, route.front());
  for (std::size_t i = 0; i + 1 < route.size(); ++i) push_leg(route[i], route[i + 1]);
  push_leg(route.back(), tail);
  dense.push_back({tail.x, tail.y, 0.0});

  // Gaussian smoothing by sample index (samples are ~kRouteStep apart).
  const double sigma = p.corner_smoothing / detail::kRouteStep;
  const int half = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
  for (int k = -half; k <= half; ++k) kernel[static_cast<std::size_t>(k + half)] = std::exp(-0.5 * k * k / (sigma * sigma));
  const int n = static_cast<int>(dense.size());
  detail::PathSamples out;
  // Only the interior, where the full kernel fits, is kept.
  for (int i = half; i + half < n; ++i) {
    Vec3 acc;
    double wsum = 0.0;
    for (int k = -half; k <= half; ++k) {
      const double w = kernel[static_cast<std::size_t>(k + half)];
      acc += w * dense[static_cast<std::size_t>(i + k)];
      wsum += w;
    }
    out.points.push_back(acc * (1.0 / wsum));
  }
  out.finish();
  return out;
}

/// One synthetic ground-truth trajectory; deterministic in `p`.
inline Trajectory generate_scene(const SyntheticSceneParams& p) {
  const detail::PathSamples route = smoothed_route(p);
  std::mt19937_64 rng(p.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> unit(0.5, 1.5);
  const double two_pi = 2.0 * std::numbers::pi;
  // Gait terms follow the step cadence, so they are periodic in time. Bob
  // and nod repeat every step, twice per sway period, in a fixed relation
  // to the sway.
  const double sway_phase = phase(rng);
  const double bob_phase = 2.0 * sway_phase, pitch_phase = 2.0 * sway_phase + 0.5 * std::numbers::pi;
  // Wobble: a slow meander along the route from three incommensurate
  // sinusoids with weights summing to one.
  const double lambda = p.gait_wavelength();
  double wobble_len[3], wobble_phase[3], wobble_w[3], wsum = 0.0;
  for (int k = 0; k < 3; ++k) {
    wobble_len[k] = lambda * (1.7 + 1.3 * k) * unit(rng);
    wobble_phase[k] = phase(rng);
    wobble_w[k] = unit(rng);
    wsum += wobble_w[k];
  }

  const auto curvature = [&](double s) {
    const Vec3 a = route.tangent(s - 0.1), b = route.tangent(s + 0.1);
    return norm(b - a) / 0.2;
  };
  const auto speed = [&](double s) {
    return std::clamp(p.speed_max / (1.0 + 1.5 * curvature(s)), p.speed_min, p.speed_max);
  };

  std::vector<Pose> poses;
  poses.reserve(static_cast<std::size_t>(p.length));
  double s = 4.0 * p.corner_smoothing;  // skip the straight lead-in
  double yaw = 0.0;
  const double lag = 1.0 - std::exp(-1.0 / (p.frame_rate * p.heading_smoothing));
  for (int f = 0; f < p.length; ++f) {
    if (s > route.length()) throw Error(Errc::InvalidParams, "route too short for the requested length");
    const double time = f / p.frame_rate;
    const double gait = two_pi * p.sway_frequency * time;
    const Vec3 t = route.tangent(s);
    const Vec3 left{-t.y, t.x, 0.0};
    double wobble = 0.0;
    for (int k = 0; k < 3; ++k) wobble += wobble_w[k] / wsum * std::sin(two_pi * s / wobble_len[k] + wobble_phase[k]);
    const double lateral = p.sway_amplitude * (std::sin(gait + sway_phase) + p.wobble_ratio * wobble);
    const double bob = p.bob_ratio * p.sway_amplitude * std::sin(2.0 * gait + bob_phase);

    const double heading = std::atan2(t.y, t.x);
    yaw = f == 0 ? heading : yaw + lag * detail::wrap_angle(heading - yaw);
    const double pitch = p.pitch_amplitude * std::sin(2.0 * gait + pitch_phase);
    const UnitQuaternion q = UnitQuaternion::from_axis_angle({0, 0, 1}, yaw) *
                             UnitQuaternion::from_axis_angle({0, 1, 0}, pitch);
    poses.push_back({route.at(s) + lateral * left + Vec3{0.0, 0.0, p.eye_height + bob}, q});
    s += speed(s) / p.frame_rate;
  }
  return Trajectory(std::move(poses), p.frame_rate);
}

/// Independent per-index seeds from one base seed (splitmix64).
inline std::uint64_t scene_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::vector<Trajectory> generate_dataset(const SyntheticSceneParams& base, int count, std::uint64_t seed) {
  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    SyntheticSceneParams p = base;
    p.seed = scene_seed(seed, static_cast<std::uint64_t>(i));
    out.push_back(generate_scene(p));
  }
  return out;
}

struct ObservationSpec {
  int stride = 10;
};

/// Frames {0, k, 2k, ...} plus the last frame.
inline std::vector<int> stride_indices(int length, int stride) {
  if (stride < 2) throw Error(Errc::InvalidParams, "stride must be >= 2, got " + std::to_string(stride));
  if (stride >= length) {
    throw Error(Errc::StrideTooLarge, "stride " + std::to_string(stride) + " must be < length " + std::to_string(length));
  }
  std::vector<int> idx;
  for (int f = 0; f < length; f += stride) idx.push_back(f);
  if (idx.back() != length - 1) idx.push_back(length - 1);
  return idx;
}

inline SparseObservations subsample_observations(const Trajectory& traj, const ObservationSpec& spec) {
  const int n = static_cast<int>(traj.size());
  std::vector<Observation> obs;
  for (int f : stride_indices(n, spec.stride)) obs.push_back({f, traj[static_cast<std::size_t>(f)]});
  return SparseObservations(std::move(obs), n);
}

}  // namespace resdiff::data
