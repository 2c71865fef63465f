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


// Trajectory comparison metrics. Translation distances are reported in
// centimeters, rotations in radians, recalls and scores in percent.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "resdiff/error.hpp"
#include "resdiff/geometry.hpp"

namespace resdiff {

inline constexpr double kCentimetersPerMeter = 100.0;

struct FrameErrors {
  std::vector<double> translation;  // meters
  std::vector<double> geodesic;     // radians
  std::vector<double> quaternion;
};

inline FrameErrors frame_errors(const Trajectory& pred, const Trajectory& gt) {
  if (pred.size() != gt.size()) {
    throw Error(Errc::LengthMismatch, "prediction has " + std::to_string(pred.size()) + " frames, ground truth " +
                                          std::to_string(gt.size()));
  }
  FrameErrors e;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    e.translation.push_back(norm(pred[i].translation - gt[i].translation));
    e.geodesic.push_back(geodesic_distance(pred[i].rotation, gt[i].rotation));
    e.quaternion.push_back(quaternion_distance(pred[i].rotation, gt[i].rotation));
  }
  return e;
}

/// Percentage of errors strictly below `threshold` (meters).
inline double recall_at(const std::vector<double>& errors, double threshold) {
  if (!(threshold > 0.0)) throw Error(Errc::InvalidParams, "recall threshold must be positive");
  if (errors.empty()) return 0.0;
  const auto hits = std::count_if(errors.begin(), errors.end(), [&](double e) { return e < threshold; });
  return 100.0 * static_cast<double>(hits) / static_cast<double>(errors.size());
}

namespace detail {

inline std::vector<Vec3> translations(const Trajectory& t) {
  std::vector<Vec3> out;
  out.reserve(t.size());
  for (const auto& p : t) out.push_back(p.translation);
  return out;
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline void require_nonempty(std::size_t a, std::size_t b) {
  if (a == 0 || b == 0) throw Error(Errc::InvalidTrajectory, "metric inputs must be non-empty");
}

}  // namespace detail

/// Minimum-cost monotone alignment with Euclidean ground distance. Among
/// equal-cost alignments the shortest is taken; the cost is divided by its
/// length. Result in meters.
inline double dtw_distance_m(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  detail::require_nonempty(a.size(), b.size());
  const std::size_t n = a.size(), m = b.size();
  struct Cell {
    double cost;
    std::size_t len;
  };
  const auto better = [](const Cell& x, const Cell& y) { return x.cost < y.cost || (x.cost == y.cost && x.len < y.len); };
  std::vector<Cell> D(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double d = norm(a[i] - b[j]);
      if (i == 0 && j == 0) {
        D[0] = {d, 1};
        continue;
      }
      Cell best{std::numeric_limits<double>::infinity(), 0};
      if (i > 0 && better(D[(i - 1) * m + j], best)) best = D[(i - 1) * m + j];
      if (j > 0 && better(D[i * m + j - 1], best)) best = D[i * m + j - 1];
      if (i > 0 && j > 0 && better(D[(i - 1) * m + j - 1], best)) best = D[(i - 1) * m + j - 1];
      D[i * m + j] = {best.cost + d, best.len + 1};
    }
  }
  const Cell& end = D.back();
  return end.cost / static_cast<double>(end.len);
}

inline double hausdorff_distance_m(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  detail::require_nonempty(a.size(), b.size());
  const auto directed = [](const std::vector<Vec3>& x, const std::vector<Vec3>& y) {
    double worst = 0.0;
    for (const auto& p : x) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : y) best = std::min(best, norm(p - q));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

/// Discrete Frechet distance via the coupling recurrence.
inline double frechet_distance_m(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  detail::require_nonempty(a.size(), b.size());
  const std::size_t n = a.size(), m = b.size();
  std::vector<double> C(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double d = norm(a[i] - b[j]);
      double prev;
      if (i == 0 && j == 0) prev = 0.0;
      else if (i == 0) prev = C[j - 1];
      else if (j == 0) prev = C[(i - 1) * m];
      else prev = std::min({C[(i - 1) * m + j], C[i * m + j - 1], C[(i - 1) * m + j - 1]});
      C[i * m + j] = std::max(prev, d);
    }
  }
  return C.back();
}

/// Average of the two directed mean nearest-neighbour distances.
inline double chamfer_l2_m(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  detail::require_nonempty(a.size(), b.size());
  const auto directed = [](const std::vector<Vec3>& x, const std::vector<Vec3>& y) {
    double sum = 0.0;
    for (const auto& p : x) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : y) best = std::min(best, norm(p - q));
      sum += best;
    }
    return sum / static_cast<double>(x.size());
  };
  return 0.5 * (directed(a, b) + directed(b, a));
}

inline double dtw_distance(const Trajectory& a, const Trajectory& b) {
  return kCentimetersPerMeter * dtw_distance_m(detail::translations(a), detail::translations(b));
}
inline double hausdorff_distance(const Trajectory& a, const Trajectory& b) {
  return kCentimetersPerMeter * hausdorff_distance_m(detail::translations(a), detail::translations(b));
}
inline double frechet_distance(const Trajectory& a, const Trajectory& b) {
  return kCentimetersPerMeter * frechet_distance_m(detail::translations(a), detail::translations(b));
}
inline double chamfer_l2(const Trajectory& a, const Trajectory& b) {
  return kCentimetersPerMeter * chamfer_l2_m(detail::translations(a), detail::translations(b));
}

/// 100 * (1 - geodesic / pi).
inline double rotation_score(double mean_geodesic) {
  if (!(mean_geodesic >= 0.0 && mean_geodesic <= std::numbers::pi)) {
    throw Error(Errc::OutOfRange, "mean geodesic " + std::to_string(mean_geodesic) + " outside [0, pi]");
  }
  return 100.0 * (1.0 - mean_geodesic / std::numbers::pi);
}

struct SlsInputs {
  double r75 = 0.0;
  double rotation_score = 0.0;
  double bt = 0.0;
};

/// Harmonic mean of recall at 75 cm, rotation score and preference score.
inline double sls(const SlsInputs& in) {
  for (double v : {in.r75, in.rotation_score, in.bt}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(Errc::NonPositiveInput, "SLS inputs must be positive and finite");
  }
  return 3.0 / (1.0 / in.r75 + 1.0 / in.rotation_score + 1.0 / in.bt);
}

struct MetricReport {
  double recall_50 = 0.0;
  double recall_75 = 0.0;
  double recall_100 = 0.0;
  double euclidean_cm = 0.0;
  double dtw_cm = 0.0;
  double hausdorff_cm = 0.0;
  double frechet_cm = 0.0;
  double chamfer_cm = 0.0;
  double quaternion = 0.0;
  double geodesic = 0.0;
  double rotation_score = 100.0;

  /// (key, value) pairs in a fixed order.
  std::vector<std::pair<std::string, double>> fields() const {
    return {{"recall_50cm", recall_50},   {"recall_75cm", recall_75},   {"recall_1m", recall_100},
            {"euclidean_cm", euclidean_cm}, {"dtw_cm", dtw_cm},         {"hausdorff_cm", hausdorff_cm},
            {"frechet_cm", frechet_cm},   {"chamfer_cm", chamfer_cm},   {"quaternion_distance", quaternion},
            {"geodesic_rad", geodesic},   {"rotation_score", rotation_score}};
  }
};

/// Flat `key=value` lines.
inline std::string to_key_value(const MetricReport& r) {
  std::string out;
  char buf[64];
  for (const auto& [k, v] : r.fields()) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += k + "=" + buf + "\n";
  }
  return out;
}

inline MetricReport evaluate(const Trajectory& pred, const Trajectory& gt) {
  const FrameErrors e = frame_errors(pred, gt);
  MetricReport r;
  r.recall_50 = recall_at(e.translation, 0.5);
  r.recall_75 = recall_at(e.translation, 0.75);
  r.recall_100 = recall_at(e.translation, 1.0);
  r.euclidean_cm = kCentimetersPerMeter * detail::mean(e.translation);
  r.dtw_cm = dtw_distance(pred, gt);
  r.hausdorff_cm = hausdorff_distance(pred, gt);
  r.frechet_cm = frechet_distance(pred, gt);
  r.chamfer_cm = chamfer_l2(pred, gt);
  r.quaternion = detail::mean(e.quaternion);
  r.geodesic = detail::mean(e.geodesic);
  r.rotation_score = rotation_score(std::min(r.geodesic, std::numbers::pi));
  return r;
}

/// Field-wise mean over scenes; the rotation score is recomputed from the
/// mean geodesic.
inline MetricReport mean_report(const std::vector<MetricReport>& reports) {
  if (reports.empty()) throw Error(Errc::EmptyDataset, "no reports to aggregate");
  MetricReport m;
  m.rotation_score = 0.0;
  for (const auto& r : reports) {
    m.recall_50 += r.recall_50;
    m.recall_75 += r.recall_75;
    m.recall_100 += r.recall_100;
    m.euclidean_cm += r.euclidean_cm;
    m.dtw_cm += r.dtw_cm;
    m.hausdorff_cm += r.hausdorff_cm;
    m.frechet_cm += r.frechet_cm;
    m.chamfer_cm += r.chamfer_cm;
    m.quaternion += r.quaternion;
    m.geodesic += r.geodesic;
  }
  const double k = 1.0 / static_cast<double>(reports.size());
  m.recall_50 *= k;
  m.recall_75 *= k;
  m.recall_100 *= k;
  m.euclidean_cm *= k;
  m.dtw_cm *= k;
  m.hausdorff_cm *= k;
  m.frechet_cm *= k;
  m.chamfer_cm *= k;
  m.quaternion *= k;
  m.geodesic *= k;
  m.rotation_score = rotation_score(std::min(m.geodesic, std::numbers::pi));
  return m;
}

}  // namespace resdiff
