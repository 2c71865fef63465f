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

// Dense-spline trajectory loss with an analytic gradient.
//
// Both trajectories are passed through the same pipeline: uniform
// Catmull-Rom through every frame (SLERP for rotations), n samples per
// segment, then N_eval points evenly spaced in arc length. The loss is the
// mean squared translation error plus the mean geodesic angle over those
// points. Resampling indices are frozen after the forward pass; the
// interpolation weights stay differentiable through the cumulative lengths.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "resdiff/error.hpp"
#include "resdiff/geometry.hpp"
#include "resdiff/spline.hpp"

namespace resdiff::diffusion {

namespace detail {

inline Quat4 normalized(const Quat4& v) { return v * (1.0 / norm(v)); }

/// d(v/|v|) applied to an upstream gradient on the unit output.
inline Quat4 normalize_backward(const Quat4& unit_out, double vnorm, const Quat4& g) {
  return (g - unit_out * dot(unit_out, g)) * (1.0 / vnorm);
}

/// Same arithmetic as resdiff::slerp on raw unit 4-vectors.
inline Quat4 slerp_raw(const Quat4& a, Quat4 b, double t) {
  double d = dot(a, b);
  if (d < 0.0) {
    b = -b;
    d = -d;
  }
  d = std::min(d, 1.0);
  const double omega = std::acos(d);
  if (omega < kSlerpLerpThreshold) return normalized((1.0 - t) * a + t * b);
  const double s = std::sin(omega);
  return normalized((std::sin((1.0 - t) * omega) / s) * a + (std::sin(t * omega) / s) * b);
}

/// Accumulates gradients of slerp_raw(a, b, t) into ga, gb and *gt.
inline void slerp_backward(const Quat4& a, const Quat4& b_in, double t, const Quat4& g_out, Quat4& ga, Quat4& gb,
                           double* gt) {
  Quat4 b = b_in;
  double sign = 1.0;
  double d = dot(a, b);
  if (d < 0.0) {
    b = -b;
    d = -d;
    sign = -1.0;
  }
  const bool clamped = d >= 1.0;
  d = std::min(d, 1.0);
  const double omega = std::acos(d);
  if (omega < kSlerpLerpThreshold) {
    const Quat4 v = (1.0 - t) * a + t * b;
    const double vn = norm(v);
    const Quat4 gv = normalize_backward(v * (1.0 / vn), vn, g_out);
    ga += (1.0 - t) * gv;
    gb += (sign * t) * gv;
    if (gt != nullptr) *gt += dot(gv, b - a);
    return;
  }
  const double s = std::sin(omega);
  const double c = std::cos(omega);
  const double sa = std::sin((1.0 - t) * omega), ca = std::cos((1.0 - t) * omega);
  const double sb = std::sin(t * omega), cb = std::cos(t * omega);
  const double wa = sa / s, wb = sb / s;
  const Quat4 v = wa * a + wb * b;
  const double vn = norm(v);
  const Quat4 gv = normalize_backward(v * (1.0 / vn), vn, g_out);

  const double dwa_domega = ((1.0 - t) * ca * s - sa * c) / (s * s);
  const double dwb_domega = (t * cb * s - sb * c) / (s * s);
  const double g_omega = dot(gv, a) * dwa_domega + dot(gv, b) * dwb_domega;
  const double g_d = clamped ? 0.0 : g_omega * (-1.0 / s);
  ga += wa * gv + g_d * b;
  gb += sign * (wb * gv + g_d * a);
  if (gt != nullptr) *gt += dot(gv, a) * (-omega * ca / s) + dot(gv, b) * (omega * cb / s);
}

/// Gradient of 2*acos(|<q, g>|) with respect to unit q, projected onto the
/// tangent space at q. Zero where the two rotations coincide.
inline Quat4 geodesic_grad(const Quat4& q, const Quat4& g) {
  const double d = dot(q, g);
  const Quat4 perp = g - d * q;
  const double pn = norm(perp);
  if (pn < 1e-15) return {0.0, 0.0, 0.0, 0.0};
  return perp * ((d < 0.0 ? 2.0 : -2.0) / pn);
}

/// Forward state of the dense pipeline for one trajectory.
struct DensePass {
  std::size_t frames = 0;
  int per_segment = 0;
  std::vector<Quat4> unit;        // normalized input rotations
  std::vector<double> raw_norm;   // |raw input rotation|
  std::vector<Vec3> tangent;      // Catmull-Rom tangents, unit knots
  std::vector<Vec3> x;            // dense translations
  std::vector<Quat4> r;           // dense rotations
  std::vector<double> cumulative;
  std::vector<ResampleLookup> lookups;
  bool degenerate = false;
  std::vector<Vec3> px;           // resampled translations
  std::vector<Quat4> pr;          // resampled rotations

  void run(std::span<const Vec3> t, std::span<const Quat4> q, int n, int n_eval) {
    frames = t.size();
    per_segment = n;
    unit.resize(frames);
    raw_norm.resize(frames);
    for (std::size_t i = 0; i < frames; ++i) {
      raw_norm[i] = norm(q[i]);
      if (!(raw_norm[i] > kMinQuaternionNorm)) throw Error(Errc::ZeroNormQuaternion, "degenerate rotation in loss");
      unit[i] = q[i] * (1.0 / raw_norm[i]);
    }
    tangent.resize(frames);
    tangent.front() = t[1] - t[0];
    tangent.back() = t[frames - 1] - t[frames - 2];
    for (std::size_t i = 1; i + 1 < frames; ++i) tangent[i] = (t[i + 1] - t[i - 1]) * 0.5;

    const std::size_t dense = (frames - 1) * static_cast<std::size_t>(n);
    x.resize(dense);
    r.resize(dense);
    const double denom = static_cast<double>(n - 1);
    for (std::size_t s = 0; s + 1 < frames; ++s) {
      const Vec3& p0 = t[s];
      const Vec3& p1 = t[s + 1];
      const Vec3& m0 = tangent[s];
      const Vec3& m1 = tangent[s + 1];
      const CubicSegment seg{2.0 * (p0 - p1) + m0 + m1, 3.0 * (p1 - p0) - 2.0 * m0 - m1, m0, p0, p1, {}, {}};
      const Quat4 q1 = dot(unit[s], unit[s + 1]) < 0.0 ? -unit[s + 1] : unit[s + 1];
      for (int j = 0; j < n; ++j) {
        const std::size_t i = s * static_cast<std::size_t>(n) + static_cast<std::size_t>(j);
        if (j == 0) {
          x[i] = p0;
          r[i] = unit[s];
        } else if (j == n - 1) {
          x[i] = p1;
          r[i] = q1;
        } else {
          const double u = static_cast<double>(j) / denom;
          x[i] = eval_cubic_horner(seg, u);
          r[i] = slerp_raw(unit[s], unit[s + 1], u);
        }
      }
    }
    cumulative.assign(dense, 0.0);
    for (std::size_t i = 1; i < dense; ++i) cumulative[i] = cumulative[i - 1] + distance(x[i], x[i - 1]);

    const std::size_t k_count = static_cast<std::size_t>(n_eval);
    px.resize(k_count);
    pr.resize(k_count);
    degenerate = cumulative.back() < kDegenerateLength;
    if (degenerate) {
      lookups.assign(k_count, ResampleLookup{});
      std::fill(px.begin(), px.end(), x.front());
      std::fill(pr.begin(), pr.end(), r.front());
      return;
    }
    lookups = arc_length_lookups(cumulative, n_eval);
    for (std::size_t k = 0; k < k_count; ++k) {
      const auto& lk = lookups[k];
      if (lk.lo == lk.hi) {
        px[k] = x[lk.lo];
        pr[k] = r[lk.lo];
      } else {
        px[k] = (1.0 - lk.weight) * x[lk.lo] + lk.weight * x[lk.hi];
        pr[k] = slerp_raw(r[lk.lo], r[lk.hi], lk.weight);
      }
    }
  }

  /// Maps gradients on the resampled points back to the input frames.
  void backward(const std::vector<Vec3>& gpx, const std::vector<Quat4>& gpr,
                std::vector<Vec3>& gt_out, std::vector<Quat4>& gq_out) const {
    const std::size_t dense = x.size();
    std::vector<Vec3> gx(dense);
    std::vector<Quat4> gr(dense);
    std::vector<double> gcum(dense, 0.0);
    const std::size_t k_count = px.size();

    if (degenerate) {
      for (std::size_t k = 0; k < k_count; ++k) {
        gx.front() += gpx[k];
        gr.front() += gpr[k];
      }
    } else {
      const double total = cumulative.back();
      for (std::size_t k = 0; k < k_count; ++k) {
        const auto& lk = lookups[k];
        if (lk.lo == lk.hi) {
          gx[lk.lo] += gpx[k];
          gr[lk.lo] += gpr[k];
          continue;
        }
        const double w = lk.weight;
        gx[lk.lo] += (1.0 - w) * gpx[k];
        gx[lk.hi] += w * gpx[k];
        double gw = dot(gpx[k], x[lk.hi] - x[lk.lo]);
        slerp_backward(r[lk.lo], r[lk.hi], w, gpr[k], gr[lk.lo], gr[lk.hi], &gw);

        const double step = cumulative[lk.hi] - cumulative[lk.lo];
        const double s = total * static_cast<double>(k) / static_cast<double>(k_count - 1);
        const double raw_w = step > 0.0 ? (s - cumulative[lk.lo]) / step : 1.0;
        if (step > 0.0 && raw_w > 0.0 && raw_w < 1.0) {
          gcum[lk.lo] += gw * (w - 1.0) / step;
          gcum[lk.hi] += gw * (-w / step);
          gcum.back() += gw * static_cast<double>(k) / (static_cast<double>(k_count - 1) * step);
        }
      }
      // cumulative[i] = sum of step lengths up to i
      double suffix = 0.0;
      for (std::size_t i = dense - 1; i >= 1; --i) {
        suffix += gcum[i];
        const Vec3 diff = x[i] - x[i - 1];
        const double len = norm(diff);
        if (len > 0.0) {
          const Vec3 gdir = diff * (suffix / len);
          gx[i] += gdir;
          gx[i - 1] -= gdir;
        }
      }
    }

    // Dense points back to frames.
    gt_out.assign(frames, Vec3{});
    std::vector<Vec3> gm(frames);
    std::vector<Quat4> gunit(frames);
    const int n = per_segment;
    const double denom = static_cast<double>(n - 1);
    for (std::size_t s = 0; s + 1 < frames; ++s) {
      const double sign1 = dot(unit[s], unit[s + 1]) < 0.0 ? -1.0 : 1.0;
      for (int j = 0; j < n; ++j) {
        const std::size_t i = s * static_cast<std::size_t>(n) + static_cast<std::size_t>(j);
        if (j == 0) {
          gt_out[s] += gx[i];
          gunit[s] += gr[i];
        } else if (j == n - 1) {
          gt_out[s + 1] += gx[i];
          gunit[s + 1] += sign1 * gr[i];
        } else {
          const double u = static_cast<double>(j) / denom;
          const double u2 = u * u, u3 = u2 * u;
          gt_out[s] += (2.0 * u3 - 3.0 * u2 + 1.0) * gx[i];
          gt_out[s + 1] += (-2.0 * u3 + 3.0 * u2) * gx[i];
          gm[s] += (u3 - 2.0 * u2 + u) * gx[i];
          gm[s + 1] += (u3 - u2) * gx[i];
          slerp_backward(unit[s], unit[s + 1], u, gr[i], gunit[s], gunit[s + 1], nullptr);
        }
      }
    }
    gt_out[0] -= gm[0];
    gt_out[1] += gm[0];
    gt_out[frames - 1] += gm[frames - 1];
    gt_out[frames - 2] -= gm[frames - 1];
    for (std::size_t i = 1; i + 1 < frames; ++i) {
      gt_out[i + 1] += 0.5 * gm[i];
      gt_out[i - 1] -= 0.5 * gm[i];
    }

    gq_out.resize(frames);
    for (std::size_t i = 0; i < frames; ++i) gq_out[i] = normalize_backward(unit[i], raw_norm[i], gunit[i]);
  }
};

}  // namespace detail

struct LossTerms {
  double total = 0.0;
  double translation = 0.0;
  double rotation = 0.0;
  bool degenerate = false;
};

struct TrajectoryLossResult {
  LossTerms terms;
  std::vector<Vec3> grad_translation;  // dL/d(pred translation)
  std::vector<Quat4> grad_rotation;    // dL/d(raw pred quaternion)
};

struct TrajectoryLossOptions {
  int n_per_segment = kDefaultSamplesPerSegment;
  int n_eval = 0;  // 0 selects kDefaultEvalMultiplier * N
  bool compute_gradient = true;
};

/// Loss between a predicted pose sequence (rotations as raw, possibly
/// unnormalized 4-vectors) and a ground-truth trajectory.
inline TrajectoryLossResult trajectory_loss(std::span<const Vec3> pred_t, std::span<const Quat4> pred_r,
                                            const Trajectory& gt, const TrajectoryLossOptions& opt = {}) {
  const std::size_t n = gt.size();
  if (pred_t.size() != n || pred_r.size() != n) {
    throw Error(Errc::LengthMismatch, "prediction has " + std::to_string(pred_t.size()) + " frames, ground truth " +
                                          std::to_string(n));
  }
  if (opt.n_per_segment < 2) throw Error(Errc::InvalidParams, "n_per_segment must be >= 2");
  const int n_eval = opt.n_eval > 0 ? opt.n_eval : kDefaultEvalMultiplier * static_cast<int>(n);
  if (n_eval < 2) throw Error(Errc::InvalidParams, "N_eval must be >= 2");

  std::vector<Vec3> gt_t;
  std::vector<Quat4> gt_r;
  for (const auto& p : gt) {
    gt_t.push_back(p.translation);
    gt_r.push_back(p.rotation.raw());
  }
  detail::DensePass pred, ref;
  pred.run(pred_t, pred_r, opt.n_per_segment, n_eval);
  ref.run(gt_t, gt_r, opt.n_per_segment, n_eval);

  TrajectoryLossResult res;
  res.terms.degenerate = pred.degenerate || ref.degenerate;
  // Overflowing inputs surface as a NaN loss for the caller to report.
  const auto finite = [](const detail::DensePass& d) {
    for (const auto& v : d.px)
      if (!v.finite()) return false;
    for (const auto& q : d.pr)
      if (!q.finite()) return false;
    return true;
  };
  if (!finite(pred) || !finite(ref)) {
    res.terms.total = res.terms.translation = res.terms.rotation = std::numeric_limits<double>::quiet_NaN();
    return res;
  }
  const double inv_k = 1.0 / static_cast<double>(n_eval);
  std::vector<Vec3> gpx(static_cast<std::size_t>(n_eval));
  std::vector<Quat4> gpr(static_cast<std::size_t>(n_eval));
  for (std::size_t k = 0; k < static_cast<std::size_t>(n_eval); ++k) {
    const Vec3 diff = pred.px[k] - ref.px[k];
    res.terms.translation += dot(diff, diff);
    res.terms.rotation += geodesic_distance(UnitQuaternion::normalize(pred.pr[k]), UnitQuaternion::normalize(ref.pr[k]));
    gpx[k] = diff * (2.0 * inv_k);
    gpr[k] = detail::geodesic_grad(pred.pr[k], ref.pr[k]) * inv_k;
  }
  res.terms.translation *= inv_k;
  res.terms.rotation *= inv_k;
  res.terms.total = res.terms.translation + res.terms.rotation;
  if (opt.compute_gradient) pred.backward(gpx, gpr, res.grad_translation, res.grad_rotation);
  return res;
}

inline TrajectoryLossResult trajectory_loss(const Trajectory& pred, const Trajectory& gt,
                                            const TrajectoryLossOptions& opt = {}) {
  std::vector<Vec3> t;
  std::vector<Quat4> q;
  for (const auto& p : pred) {
    t.push_back(p.translation);
    q.push_back(p.rotation.raw());
  }
  return trajectory_loss(t, q, gt, opt);
}

}  // namespace resdiff::diffusion
