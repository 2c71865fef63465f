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

// Pose CSV files: header `frame,tx,ty,tz,qw,qx,qy,qz`, one pose per row,
// values written with 17 significant digits.

#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "resdiff/error.hpp"
#include "resdiff/geometry.hpp"
#include "resdiff/spline.hpp"

namespace resdiff::data {

inline constexpr std::string_view kCsvHeader = "frame,tx,ty,tz,qw,qx,qy,qz";
inline constexpr double kUnitNormTolerance = 1e-3;

struct PoseRows {
  std::vector<int> frames;
  std::vector<Pose> poses;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

inline std::string where(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line) + ": ";
}

template <class T>
T parse_number(std::string_view field, const std::string& source, std::size_t line) {
  field = trim(field);
  T v{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    // from_chars rejects "inf"/"nan" spellings it does not know; surface those as non-finite.
    std::string lower(field);
    for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower.find("nan") != std::string::npos || lower.find("inf") != std::string::npos) {
      throw Error(Errc::NonFiniteValue, where(source, line) + "non-finite value '" + std::string(field) + "'");
    }
    throw Error(Errc::MalformedHeader, where(source, line) + "cannot parse '" + std::string(field) + "'");
  }
  return v;
}

}  // namespace detail

inline std::string format_pose_row(int frame, const Pose& p) {
  char buf[512];
  const auto& q = p.rotation;
  std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", frame, p.translation.x,
                p.translation.y, p.translation.z, q.w(), q.x(), q.y(), q.z());
  return buf;
}

inline std::string format_pose_csv(const std::vector<int>& frames, const std::vector<Pose>& poses) {
  std::string out(kCsvHeader);
  out += '\n';
  for (std::size_t i = 0; i < poses.size(); ++i) {
    out += format_pose_row(frames[i], poses[i]);
    out += '\n';
  }
  return out;
}

/// Parses CSV text. `source` names the input in error messages.
inline PoseRows parse_pose_csv(std::string_view text, const std::string& source = "<csv>") {
  PoseRows rows;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = detail::trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (!header_seen) {
      if (line != kCsvHeader) {
        throw Error(Errc::MalformedHeader, detail::where(source, line_no) + "expected header '" +
                                               std::string(kCsvHeader) + "', got '" + std::string(line) + "'");
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 8) {
      throw Error(Errc::MalformedHeader,
                  detail::where(source, line_no) + "expected 8 fields, got " + std::to_string(fields.size()));
    }
    const int frame = detail::parse_number<int>(fields[0], source, line_no);
    double v[7];
    for (int i = 0; i < 7; ++i) {
      v[i] = detail::parse_number<double>(fields[static_cast<std::size_t>(i + 1)], source, line_no);
      if (!std::isfinite(v[i])) throw Error(Errc::NonFiniteValue, detail::where(source, line_no) + "non-finite value");
    }
    const Quat4 q{v[3], v[4], v[5], v[6]};
    const double qn = norm(q);
    if (std::abs(qn - 1.0) > kUnitNormTolerance) {
      throw Error(Errc::NonUnitQuaternion,
                  detail::where(source, line_no) + "quaternion norm " + std::to_string(qn) + " is not unit");
    }
    if (!rows.frames.empty() && frame <= rows.frames.back()) {
      throw Error(Errc::MalformedHeader, detail::where(source, line_no) + "frame indices must increase");
    }
    if (frame < 0) throw Error(Errc::MalformedHeader, detail::where(source, line_no) + "negative frame index");
    rows.frames.push_back(frame);
    // Near-unit rotations are renormalized; unit ones keep their bits.
    rows.poses.push_back({{v[0], v[1], v[2]}, UnitQuaternion::normalize(q)});
  }
  if (!header_seen) throw Error(Errc::MalformedHeader, source + ": empty file, missing header");
  return rows;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Errc::Io, "cannot open " + path.string() + " for writing");
  f << text;
  f.flush();
  if (!f) throw Error(Errc::Io, "write failed for " + path.string());
}

inline Trajectory trajectory_from_rows(const PoseRows& rows, const std::string& source) {
  for (std::size_t i = 0; i < rows.frames.size(); ++i) {
    if (rows.frames[i] != static_cast<int>(i)) {
      throw Error(Errc::MalformedHeader, source + ": trajectory frames must be 0..N-1 without gaps");
    }
  }
  if (rows.poses.size() < 2) throw Error(Errc::InvalidTrajectory, source + ": trajectory needs at least 2 poses");
  return Trajectory(rows.poses);
}

inline Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  return trajectory_from_rows(parse_pose_csv(read_text_file(path), path.string()), path.string());
}

inline void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  std::vector<int> frames(traj.size());
  for (std::size_t i = 0; i < frames.size(); ++i) frames[i] = static_cast<int>(i);
  write_text_file(path, format_pose_csv(frames, traj.poses()));
}

/// Observations file; the target length defaults to last frame + 1.
inline SparseObservations read_observations_csv(const std::filesystem::path& path, int target_length = 0) {
  const PoseRows rows = parse_pose_csv(read_text_file(path), path.string());
  if (rows.frames.size() < 2) throw Error(Errc::TooFewObservations, path.string() + ": need at least 2 observations");
  std::vector<Observation> obs;
  for (std::size_t i = 0; i < rows.frames.size(); ++i) obs.push_back({rows.frames[i], rows.poses[i]});
  return SparseObservations(std::move(obs), target_length > 0 ? target_length : rows.frames.back() + 1);
}

inline void write_observations_csv(const std::filesystem::path& path, const SparseObservations& obs) {
  std::vector<int> frames;
  std::vector<Pose> poses;
  for (const auto& e : obs.entries()) {
    frames.push_back(e.frame);
    poses.push_back(e.pose);
  }
  write_text_file(path, format_pose_csv(frames, poses));
}

}  // namespace resdiff::data
