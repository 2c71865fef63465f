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


// Bradley-Terry strengths from pairwise preference counts, fitted with
// simultaneous minorize-maximize updates.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "resdiff/error.hpp"

namespace resdiff {

inline constexpr double kMinStrength = 1e-9;

/// wins[i][j] = number of times method i was preferred over method j.
struct PreferenceMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<long>> wins;

  std::size_t size() const noexcept { return names.size(); }
  long comparisons(std::size_t i, std::size_t j) const { return wins[i][j] + wins[j][i]; }
  long total_wins(std::size_t i) const {
    long w = 0;
    for (long v : wins[i]) w += v;
    return w;
  }

  void validate() const {
    const std::size_t k = names.size();
    if (wins.size() != k) throw Error(Errc::ShapeMismatch, "preference matrix is not K x K");
    bool any = false;
    for (std::size_t i = 0; i < k; ++i) {
      if (wins[i].size() != k) throw Error(Errc::ShapeMismatch, "preference matrix is not K x K");
      if (wins[i][i] != 0) throw Error(Errc::InvalidParams, "preference matrix diagonal must be zero");
      for (long v : wins[i]) {
        if (v < 0) throw Error(Errc::InvalidParams, "preference counts must be non-negative");
        any = any || v > 0;
      }
    }
    if (k < 2) throw Error(Errc::EmptyComparisons, "need at least two methods");
    if (!any) throw Error(Errc::NoWinsForAnyMethod, "preference matrix has no recorded wins");
  }

  friend bool operator==(const PreferenceMatrix&, const PreferenceMatrix&) = default;
};

struct Judgment {
  std::string winner;
  std::string loser;
};

/// Counts judgments over a fixed method list.
inline PreferenceMatrix build_matrix(std::vector<std::string> names, const std::vector<Judgment>& judgments) {
  if (judgments.empty()) throw Error(Errc::EmptyComparisons, "no judgments");
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!index.emplace(names[i], i).second) throw Error(Errc::InvalidParams, "duplicate method name " + names[i]);
  }
  PreferenceMatrix m{std::move(names), {}};
  m.wins.assign(m.names.size(), std::vector<long>(m.names.size(), 0));
  for (const auto& j : judgments) {
    const auto w = index.find(j.winner), l = index.find(j.loser);
    if (w == index.end()) throw Error(Errc::UnknownMethodName, "unknown method " + j.winner);
    if (l == index.end()) throw Error(Errc::UnknownMethodName, "unknown method " + j.loser);
    if (w->second == l->second) throw Error(Errc::InvalidParams, "method " + j.winner + " judged against itself");
    ++m.wins[w->second][l->second];
  }
  return m;
}

/// Method list taken from the judgments, sorted by name.
inline PreferenceMatrix build_matrix(const std::vector<Judgment>& judgments) {
  std::set<std::string> names;
  for (const auto& j : judgments) {
    names.insert(j.winner);
    names.insert(j.loser);
  }
  return build_matrix(std::vector<std::string>(names.begin(), names.end()), judgments);
}

/// Parses `winner,loser` lines. Blank lines and lines starting with '#'
/// are skipped.
inline std::vector<Judgment> parse_judgments(std::string_view text) {
  std::vector<Judgment> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto trim = [](std::string_view s) {
      while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
      while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
      return s;
    };
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos) {
      throw Error(Errc::MalformedRecord, "line " + std::to_string(line_no) + ": expected `winner,loser`");
    }
    const auto w = trim(line.substr(0, comma)), l = trim(line.substr(comma + 1));
    if (w.empty() || l.empty()) throw Error(Errc::MalformedRecord, "line " + std::to_string(line_no) + ": empty method name");
    out.push_back({std::string(w), std::string(l)});
  }
  return out;
}

/// s = pi / (pi + 1).
inline std::vector<double> bt_scores(const std::vector<double>& pi) {
  std::vector<double> s;
  s.reserve(pi.size());
  for (double p : pi) {
    if (!(p > 0.0)) throw Error(Errc::NonPositivePi, "strength " + std::to_string(p) + " is not positive");
    s.push_back(p / (p + 1.0));
  }
  return s;
}

struct BtResult {
  std::vector<double> pi;
  std::vector<double> scores;
  int iterations = 0;
  bool converged = false;
};

struct BtOptions {
  double tol = 1e-8;
  int max_iter = 10000;
};

/// pi_i <- W_i / sum_j N_ij / (pi_i + pi_j), all methods updated from the
/// previous iterate, starting at pi = 1, no renormalization. Stops when the
/// largest change falls below tol.
inline BtResult bt_fit(const PreferenceMatrix& m, const BtOptions& opt = {}) {
  m.validate();
  if (!(opt.tol > 0.0) || opt.max_iter <= 0) throw Error(Errc::InvalidParams, "tol and max_iter must be positive");
  const std::size_t k = m.size();
  BtResult r;
  r.pi.assign(k, 1.0);
  std::vector<double> next(k);
  for (int it = 1; it <= opt.max_iter; ++it) {
    double change = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      double denom = 0.0;
      for (std::size_t j = 0; j < k; ++j)
        if (j != i) denom += static_cast<double>(m.comparisons(i, j)) / (r.pi[i] + r.pi[j]);
      const double w = static_cast<double>(m.total_wins(i));
      next[i] = denom > 0.0 ? std::max(w / denom, kMinStrength) : kMinStrength;
      change = std::max(change, std::abs(next[i] - r.pi[i]));
    }
    r.pi.swap(next);
    r.iterations = it;
    if (change < opt.tol) {
      r.converged = true;
      break;
    }
  }
  r.scores = bt_scores(r.pi);
  return r;
}

}  // namespace resdiff
