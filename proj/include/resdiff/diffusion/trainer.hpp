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
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "resdiff/data/synthetic.hpp"
#include "resdiff/diffusion/model.hpp"
#include "resdiff/diffusion/residual.hpp"
#include "resdiff/diffusion/trajectory_loss.hpp"
#include "resdiff/error.hpp"
#include "resdiff/geometry.hpp"
#include "resdiff/nn/adam.hpp"
#include "resdiff/spline.hpp"

namespace resdiff::diffusion {

/// Largest gap between consecutive observations used in training.
inline constexpr int kMaxObservationGap = 20;

struct TrainConfig {
  ModelConfig model;
  long iterations = 30000;   // one iteration = one sampled trajectory batch
  int batch_size = 1;
  int accumulation = 8;      // iterations per optimizer step
  double learning_rate = 5e-6;
  int stride_min = 3;
  int stride_max = kMaxObservationGap;
  int eval_multiplier = kDefaultEvalMultiplier;
  int n_per_segment = kDefaultSamplesPerSegment;
  std::uint64_t seed = 0;
  long checkpoint_interval = 0;  // 0 = only at the end

  static TrainConfig standard() { return {}; }
  static TrainConfig fast() {
    TrainConfig c;
    c.iterations = 5000;
    c.learning_rate = 1e-4;
    return c;
  }

  void validate() const {
    model.validate();
    if (iterations <= 0 || batch_size <= 0 || accumulation <= 0 || !(learning_rate > 0.0) || eval_multiplier <= 0 ||
        n_per_segment < 2 || checkpoint_interval < 0) {
      throw Error(Errc::InvalidParams, "training sizes and learning rate must be positive");
    }
    if (stride_min < 2 || stride_max < stride_min || stride_max > kMaxObservationGap) {
      throw Error(Errc::InvalidParams, "stride curriculum must satisfy 2 <= min <= max <= 20");
    }
  }
};

struct TrainRecord {
  long iteration = 0;  // 1-based
  double loss = 0.0;
  double translation = 0.0;
  double rotation = 0.0;
  int stride = 0;  // stride of the last sample in the batch
  int t = 0;
};

/// Line-delimited JSON record.
inline std::string format_train_record(const TrainRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "{\"iteration\":%ld,\"loss\":%.17g,\"translation\":%.17g,\"rotation\":%.17g,\"stride\":%d,\"t\":%d}",
                r.iteration, r.loss, r.translation, r.rotation, r.stride, r.t);
  return buf;
}

struct TrainOutputs {
  std::filesystem::path checkpoint;  // empty = none
  std::filesystem::path log;         // empty = none
  std::function<void(const TrainRecord&)> on_record;
};

struct TrainResult {
  DiffusionModel model;
  std::vector<TrainRecord> history;
  long optimizer_steps = 0;
};

/// One training sample and its loss gradient with respect to the network
/// output. Exposed for tests.
struct SampleStep {
  LossTerms terms;
  nn::TensorTable grads;
  int stride = 0;
  int t = 0;
};

inline SampleStep train_sample(const DiffusionModel& model, const Trajectory& gt, int stride, int t,
                               std::mt19937_64& rng, const TrainConfig& cfg) {
  const SparseObservations obs = data::subsample_observations(gt, {stride});
  const std::vector<bool> mask = obs.mask();
  const Trajectory baseline = build_baseline(obs, BaselineMode::CatmullRom);
  const ResidualTrajectory x0 = model.to_network(compute_residual(gt, baseline, mask));
  const ResidualTrajectory noise = gaussian_residual(gt.size(), mask, rng);
  const ResidualTrajectory xt = forward_diffuse(x0, t, noise, mask, model.schedule());
  const Conditioning cond = model.condition(baseline, mask);
  const Prediction pred = model.predict(xt, cond, t);

  const RawPoses raw = compose_raw(baseline, model.to_physical(pred.x0), mask);
  TrajectoryLossOptions lopt;
  lopt.n_per_segment = cfg.n_per_segment;
  lopt.n_eval = cfg.eval_multiplier * static_cast<int>(gt.size());
  const TrajectoryLossResult loss = trajectory_loss(raw.translation, raw.rotation, gt, lopt);

  SampleStep s;
  s.terms = loss.terms;
  s.stride = stride;
  s.t = t;
  if (!std::isfinite(loss.terms.total)) return s;
  nn::Tensor dpred(kPoseChannels, gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (mask[i]) continue;
    for (int c = 0; c < 3; ++c) dpred(static_cast<std::size_t>(c), i) = loss.grad_translation[i][c] * model.channel_scale(0);
    for (int c = 0; c < 4; ++c) dpred(static_cast<std::size_t>(3 + c), i) = loss.grad_rotation[i][c] * model.channel_scale(3);
  }
  s.grads = model.net().backward(pred.forward.cache, dpred);
  return s;
}

/// Stride curriculum for trajectories of length n: uniform over
/// [stride_min, stride_max], capped so at least two frames are observed.
inline int draw_stride(const TrainConfig& cfg, std::size_t n, std::mt19937_64& rng) {
  const int cap = static_cast<int>(n) - 1;
  std::uniform_int_distribution<int> d(std::min(cfg.stride_min, cap), std::min(cfg.stride_max, cap));
  return d(rng);
}

inline TrainResult train(const std::vector<Trajectory>& dataset, const TrainConfig& cfg, const TrainOutputs& outs = {}) {
  cfg.validate();
  if (dataset.empty()) throw Error(Errc::EmptyDataset, "training dataset is empty");
  for (const auto& tr : dataset)
    if (tr.size() < 8) throw Error(Errc::InvalidTrajectory, "training trajectories need at least 8 frames");

  TrainResult res{DiffusionModel(cfg.model, data::scene_seed(cfg.seed, 0)), {}, 0};
  DiffusionModel& model = res.model;
  nn::Adam adam(model.net().params());
  nn::TensorTable accum = model.net().params().zeros_like();
  std::mt19937_64 rng(data::scene_seed(cfg.seed, 1));
  std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);
  std::uniform_int_distribution<int> pick_t(1, model.schedule().steps());

  std::ofstream log;
  if (!outs.log.empty()) {
    log.open(outs.log, std::ios::trunc);
    if (!log) throw Error(Errc::Io, "cannot open training log " + outs.log.string());
  }
  const auto write_checkpoint = [&] {
    if (!outs.checkpoint.empty()) model.save(outs.checkpoint);
  };

  int pending = 0;
  for (long it = 1; it <= cfg.iterations; ++it) {
    TrainRecord rec;
    rec.iteration = it;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const Trajectory& gt = dataset[pick(rng)];
      const int stride = draw_stride(cfg, gt.size(), rng);
      const int t = pick_t(rng);
      SampleStep s = train_sample(model, gt, stride, t, rng, cfg);
      if (!std::isfinite(s.terms.total)) {
        throw Error(Errc::NonFiniteLoss, "non-finite loss at iteration " + std::to_string(it) + " (stride " +
                                             std::to_string(stride) + ", t " + std::to_string(t) + ", translation " +
                                             std::to_string(s.terms.translation) + ", rotation " +
                                             std::to_string(s.terms.rotation) + ")");
      }
      accum += s.grads;
      rec.loss += s.terms.total;
      rec.translation += s.terms.translation;
      rec.rotation += s.terms.rotation;
      rec.stride = stride;
      rec.t = t;
    }
    rec.loss /= cfg.batch_size;
    rec.translation /= cfg.batch_size;
    rec.rotation /= cfg.batch_size;

    if (++pending == cfg.accumulation || it == cfg.iterations) {
      accum.scale(1.0 / (static_cast<double>(pending) * cfg.batch_size));
      adam.step(model.net().params(), accum, cfg.learning_rate);
      accum.set_zero();
      pending = 0;
      ++res.optimizer_steps;
    }

    res.history.push_back(rec);
    if (log) log << format_train_record(rec) << '\n';
    if (outs.on_record) outs.on_record(rec);
    if (cfg.checkpoint_interval > 0 && it % cfg.checkpoint_interval == 0) write_checkpoint();
  }
  if (log) {
    log.flush();
    if (!log) throw Error(Errc::Io, "failed writing training log " + outs.log.string());
  }
  write_checkpoint();
  return res;
}

}  // namespace resdiff::diffusion
