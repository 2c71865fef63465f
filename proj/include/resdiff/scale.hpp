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


// Metric-scale alignment from paired reference / reconstructed distances.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "resdiff/error.hpp"
#include "resdiff/geometry.hpp"

namespace resdiff {

inline constexpr double kMinReconstructedDistance = 1e-6;

struct DistancePairSample {
  double reference = 0.0;      // meters
  double reconstructed = 0.0;  // reconstruction units
};

enum class ScaleAggregate { Mean, Median };

struct ScaleEstimate {
  double multiplier = 0.0;
  std::vector<double> ratios;  // accepted samples, input order
  std::size_t samples = 0;
  std::size_t rejected = 0;
};

/// Mean (or median) of reference / reconstructed over samples whose
/// reconstructed distance exceeds 1e-6.
inline ScaleEstimate estimate_scale(const std::vector<DistancePairSample>& samples,
                                    ScaleAggregate how = ScaleAggregate::Mean) {
  ScaleEstimate e;
  e.samples = samples.size();
  for (const auto& s : samples) {
    if (!std::isfinite(s.reference) || !std::isfinite(s.reconstructed) || s.reference < 0.0 || s.reconstructed < 0.0) {
      throw Error(Errc::NonFiniteValue, "distance samples must be finite and non-negative");
    }
    if (s.reconstructed > kMinReconstructedDistance) e.ratios.push_back(s.reference / s.reconstructed);
    else ++e.rejected;
  }
  if (e.ratios.empty()) throw Error(Errc::NoValidSamples, "no sample has a usable reconstructed distance");
  if (how == ScaleAggregate::Mean) {
    // Summing in sorted order keeps the result independent of input order.
    std::vector<double> sorted = e.ratios;
    std::sort(sorted.begin(), sorted.end());
    double sum = 0.0;
    for (double r : sorted) sum += r;
    e.multiplier = sum / static_cast<double>(sorted.size());
  } else {
    std::vector<double> sorted = e.ratios;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    e.multiplier = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  }
  return e;
}

/// Every translation multiplied by s; rotations untouched.
inline Trajectory apply_scale(const Trajectory& traj, double s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw Error(Errc::NonPositiveScale, "scale must be positive, got " + std::to_string(s));
  std::vector<Pose> poses = traj.poses();
  for (auto& p : poses) p.translation = p.translation * s;
  return Trajectory(std::move(poses), traj.frame_rate_hint());
}

/// Parses `reference_m,reconstructed_units` lines; blank and '#' lines are
/// skipped.
inline std::vector<DistancePairSample> parse_distance_samples(std::string_view text) {
  std::vector<DistancePairSample> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string line(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const std::size_t comma = line.find(',');
    const auto bad = [&] {
      return Error(Errc::MalformedRecord, "line " + std::to_string(line_no) + ": expected `reference_m,reconstructed_units`");
    };
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) throw bad();
    try {
      std::size_t used_a = 0, used_b = 0;
      const std::string a = line.substr(0, comma), b = line.substr(comma + 1);
      DistancePairSample s{std::stod(a, &used_a), std::stod(b, &used_b)};
      if (a.find_first_not_of(" \t", used_a) != std::string::npos || b.find_first_not_of(" \t", used_b) != std::string::npos) {
        throw bad();
      }
      out.push_back(s);
    } catch (const std::logic_error&) {
      throw bad();
    }
  }
  return out;
}

}  // namespace resdiff
