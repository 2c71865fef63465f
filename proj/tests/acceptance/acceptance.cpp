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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.
//
//   acceptance            fast training profile (CI)
//   acceptance --full     standard training profile
//   acceptance --only 1,2,7

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "metric_oracles.hpp"
#include "resdiff/data/synthetic.hpp"
#include "resdiff/data/trajectory_csv.hpp"
#include "resdiff/diffusion/sampler.hpp"
#include "resdiff/diffusion/trainer.hpp"
#include "resdiff/metrics.hpp"
#include "resdiff/nn/checkpoint.hpp"
#include "resdiff/nn/grad_check.hpp"
#include "resdiff/nn/layers.hpp"
#include "resdiff/nn/unet.hpp"
#include "resdiff/ranking.hpp"
#include "resdiff/scale.hpp"
#include "test_util.hpp"

namespace resdiff::acceptance {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;
using testing::Rng;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

unsigned worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Runtime budgets are stated for a 4-core desktop. On smaller machines the
/// elapsed time is reported but not asserted.
constexpr unsigned kReferenceCores = 4;

std::string runtime_note(double elapsed, double budget, bool& ok) {
  if (worker_count() >= kReferenceCores) {
    ok = ok && elapsed < budget;
    return fmt("%.1f s (budget %.0f s)", elapsed, budget);
  }
  return fmt("%.1f s (budget %.0f s on %u cores, not asserted on %u)", elapsed, budget, kReferenceCores, worker_count());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) fn(i);
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < std::min<std::size_t>(worker_count(), n); ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
}

// ---------------------------------------------------------------------------
// 1, 2

Outcome sls_reproduction() {
  const double a = sls({60.2, 97.1, 79.5});
  const double b = sls({57.1, 96.8, 71.4});
  return {std::abs(a - 76.0) <= 0.05 && std::abs(b - 71.7) <= 0.05, fmt("sls=%.4f (76.0), %.4f (71.7)", a, b)};
}

Outcome rotation_score_consistency() {
  const double s = rotation_score(0.09);
  return {s >= 97.10 && s <= 97.18, fmt("rotation_score(0.09)=%.4f in [97.10, 97.18]", s)};
}

// ---------------------------------------------------------------------------
// 3, 4, 5 share one trained model.

struct Experiment {
  bool full = false;
  std::optional<diffusion::DiffusionModel> model;
  double train_seconds = 0.0;
  // Mean Euclidean error (m) on the held-out set per stride 5, 10, 15.
  std::vector<double> baseline, diffuser;
  double eval_seconds = 0.0;
};

constexpr int kTrainScenes = 200;
constexpr int kHeldOutScenes = 40;
constexpr std::uint64_t kTrainSeed = 1001, kHeldOutSeed = 2002, kDiracSeed = 3003, kSampleSeed = 4004;
const int kStrides[] = {5, 10, 15};

double mean_translation_error(const Trajectory& a, const Trajectory& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += distance(a[i].translation, b[i].translation);
  return s / static_cast<double>(a.size());
}

void train_model(Experiment& ex) {
  if (ex.model) return;
  const data::SyntheticSceneParams params;
  const auto train_set = data::generate_dataset(params, kTrainScenes, kTrainSeed);
  auto cfg = ex.full ? diffusion::TrainConfig::standard() : diffusion::TrainConfig::fast();
  cfg.seed = 7;
  const auto t0 = Clock::now();
  ex.model = diffusion::train(train_set, cfg).model;
  ex.train_seconds = seconds_since(t0);
}

void evaluate_held_out(Experiment& ex) {
  if (!ex.baseline.empty()) return;
  train_model(ex);
  const auto held_out = data::generate_dataset(data::SyntheticSceneParams{}, kHeldOutScenes, kHeldOutSeed);
  const auto t0 = Clock::now();
  for (int k : kStrides) {
    std::vector<double> eb(held_out.size()), ed(held_out.size());
    parallel_for(held_out.size(), [&](std::size_t i) {
      const auto obs = data::subsample_observations(held_out[i], {k});
      eb[i] = mean_translation_error(build_baseline(obs, BaselineMode::CatmullRom), held_out[i]);
      const auto out = diffusion::sample_trajectory(*ex.model, obs, data::scene_seed(kSampleSeed, i));
      ed[i] = mean_translation_error(out.trajectory, held_out[i]);
    });
    ex.baseline.push_back(mean_of(eb));
    ex.diffuser.push_back(mean_of(ed));
  }
  ex.eval_seconds = seconds_since(t0);
}

Outcome dirac_invariant(Experiment& ex) {
  train_model(ex);
  const auto scenes = data::generate_dataset(data::SyntheticSceneParams{}, 100, kDiracSeed);
  const auto t0 = Clock::now();
  std::vector<double> worst_t(scenes.size() * 3, 0.0), worst_r(scenes.size() * 3, 0.0);
  parallel_for(worst_t.size(), [&](std::size_t job) {
    const auto& gt = scenes[job / 3];
    const auto obs = data::subsample_observations(gt, {kStrides[job % 3]});
    const auto out = diffusion::sample_trajectory(*ex.model, obs, data::scene_seed(kSampleSeed, job));
    for (const auto& o : obs.entries()) {
      const Pose& p = out.trajectory[static_cast<std::size_t>(o.frame)];
      worst_t[job] = std::max(worst_t[job], distance(p.translation, o.pose.translation));
      worst_r[job] = std::max(worst_r[job], geodesic_distance(p.rotation, o.pose.rotation));
    }
  });
  const double elapsed = seconds_since(t0);
  const double mt = *std::max_element(worst_t.begin(), worst_t.end());
  const double mr = *std::max_element(worst_r.begin(), worst_r.end());
  bool ok = mt == 0.0 && mr < 1e-9;
  const std::string rt = runtime_note(elapsed, 300.0, ok);
  return {ok, fmt("300 samples: max translation error %.3g m, max geodesic %.3g rad; %s", mt, mr, rt.c_str())};
}

Outcome beats_spline(Experiment& ex) {
  evaluate_held_out(ex);
  const double b = ex.baseline[1], d = ex.diffuser[1];
  const double gain = 1.0 - d / b;
  bool ok = ex.full ? d <= 0.95 * b : d < b;
  const double elapsed = ex.train_seconds + ex.eval_seconds;
  const std::string rt = runtime_note(elapsed, ex.full ? 7200.0 : 1200.0, ok);
  return {ok, fmt("%s profile, stride 10: diffuser %.3f cm vs catmull-rom %.3f cm (%.1f%% %s, need %s lower); %s",
                  ex.full ? "standard" : "fast", 100 * d, 100 * b, 100 * std::abs(gain), gain >= 0 ? "lower" : "higher",
                  ex.full ? ">= 5%" : "> 0%", rt.c_str())};
}

Outcome sparsity_monotone(Experiment& ex) {
  evaluate_held_out(ex);
  const auto& b = ex.baseline;
  const auto& d = ex.diffuser;
  const bool ok = b[0] <= b[1] && b[1] <= b[2] && d[0] <= d[1] && d[1] <= d[2];
  return {ok, fmt("catmull-rom %.3f / %.3f / %.3f cm, diffuser %.3f / %.3f / %.3f cm at strides 5 / 10 / 15", 100 * b[0],
                  100 * b[1], 100 * b[2], 100 * d[0], 100 * d[1], 100 * d[2])};
}

// ---------------------------------------------------------------------------
// 6

nn::Tensor random_tensor(Rng& rng, std::size_t c, std::size_t l, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  nn::Tensor t(c, l);
  for (double& v : t.values()) v = n(rng);
  return t;
}

double weighted_sum(const nn::Tensor& y, const nn::Tensor& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y.values()[i] * w.values()[i];
  return s;
}

Outcome gradient_correctness() {
  using namespace nn;
  const auto t0 = Clock::now();
  struct Check {
    std::string name;
    double error;
    double tol;
  };
  std::vector<Check> checks;
  Rng rng(61);
  UNetConfig tiny = UNetConfig::tiny();
  tiny.zero_init_output = false;

  for (int stride : {1, 2}) {
    TensorTable p;
    const Conv1d conv = Conv1d::create(p, "conv", 3, 4, 5, stride, 2, rng);
    const Tensor x = random_tensor(rng, 3, 12);
    const Tensor w = random_tensor(rng, 4, conv.output_length(12));
    const auto loss = [&](const TensorTable& t) { return weighted_sum(silu(conv.forward(t, x)), w); };
    const auto grad = [&](const TensorTable& t) {
      TensorTable g = t.zeros_like();
      conv.backward(t, x, silu_backward(conv.forward(t, x), w), g);
      return g;
    };
    checks.push_back({"conv1d+silu stride " + std::to_string(stride), grad_check(p, loss, grad).max_relative_error, 1e-4});

    TensorTable xin;
    xin.add("x", x);
    const auto loss_x = [&](const TensorTable& t) { return weighted_sum(conv.forward(p, t[0]), w); };
    const auto grad_x = [&](const TensorTable& t) {
      TensorTable scratch = p.zeros_like();
      TensorTable g = t.zeros_like();
      g[0] = conv.backward(p, t[0], w, scratch);
      return g;
    };
    checks.push_back({"conv1d input stride " + std::to_string(stride), grad_check(xin, loss_x, grad_x).max_relative_error, 1e-4});
  }
  {
    TensorTable p;
    const GroupNorm gn = GroupNorm::create(p, "gn", 8, 4);
    std::normal_distribution<double> n(0.0, 0.3);
    for (double& v : p[0].values()) v = 1.0 + n(rng);
    for (double& v : p[1].values()) v = n(rng);
    const Tensor x = random_tensor(rng, 8, 7, 2.0);
    const Tensor w = random_tensor(rng, 8, 7);
    const auto loss = [&](const TensorTable& t) {
      GroupNorm::Cache c;
      return weighted_sum(silu(gn.forward(t, x, c)), w);
    };
    const auto grad = [&](const TensorTable& t) {
      GroupNorm::Cache c;
      const Tensor y = gn.forward(t, x, c);
      TensorTable g = t.zeros_like();
      gn.backward(t, c, silu_backward(y, w), g);
      return g;
    };
    checks.push_back({"groupnorm params", grad_check(p, loss, grad).max_relative_error, 1e-4});
    TensorTable xin;
    xin.add("x", x);
    const auto loss_x = [&](const TensorTable& t) {
      GroupNorm::Cache c;
      return weighted_sum(silu(gn.forward(p, t[0], c)), w);
    };
    const auto grad_x = [&](const TensorTable& t) {
      GroupNorm::Cache c;
      const Tensor y = gn.forward(p, t[0], c);
      TensorTable scratch = p.zeros_like();
      TensorTable g = t.zeros_like();
      g[0] = gn.backward(p, c, silu_backward(y, w), scratch);
      return g;
    };
    checks.push_back({"groupnorm input", grad_check(xin, loss_x, grad_x).max_relative_error, 1e-4});
  }
  {
    TensorTable p;
    const Linear lin = Linear::create(p, "fc", 6, 5, rng);
    const Tensor x = random_tensor(rng, 6, 1);
    const Tensor w = random_tensor(rng, 5, 1);
    const auto loss = [&](const TensorTable& t) { return weighted_sum(silu(lin.forward(t, x)), w); };
    const auto grad = [&](const TensorTable& t) {
      TensorTable g = t.zeros_like();
      lin.backward(t, x, silu_backward(lin.forward(t, x), w), g, false);
      return g;
    };
    checks.push_back({"linear+silu", grad_check(p, loss, grad).max_relative_error, 1e-4});
  }
  {
    TensorTable in;
    in.add("a", random_tensor(rng, 2, 5));
    in.add("b", random_tensor(rng, 3, 10));
    const Tensor w = random_tensor(rng, 5, 10);
    const auto loss = [&](const TensorTable& t) { return weighted_sum(silu(concat_channels(upsample2(t[0]), t[1])), w); };
    const auto grad = [&](const TensorTable& t) {
      const Tensor y = concat_channels(upsample2(t[0]), t[1]);
      auto [da, db] = split_channels(silu_backward(y, w), 2);
      TensorTable g = t.zeros_like();
      g[0] = upsample2_backward(da);
      g[1] = db;
      return g;
    };
    checks.push_back({"upsample+concat", grad_check(in, loss, grad).max_relative_error, 1e-4});
  }
  {
    TensorTable p;
    const ResBlock block = ResBlock::create(p, "blk", 16, 8, tiny, rng);
    const Tensor x = random_tensor(rng, 16, 10);
    const Tensor temb = random_tensor(rng, static_cast<std::size_t>(tiny.time_dim), 1);
    const Tensor w = random_tensor(rng, 8, 10);
    const auto loss = [&](const TensorTable& t) {
      ResBlock::Cache c;
      return weighted_sum(block.forward(t, x, temb, c), w);
    };
    const auto grad = [&](const TensorTable& t) {
      ResBlock::Cache c;
      block.forward(t, x, temb, c);
      TensorTable g = t.zeros_like();
      Tensor dtemb(temb.channels(), 1);
      block.backward(t, c, temb, w, g, dtemb);
      return g;
    };
    checks.push_back({"resblock+time embedding", grad_check(p, loss, grad).max_relative_error, 1e-4});
  }
  for (std::size_t n : {16u, 14u}) {
    const UNet net(tiny, 21);
    Rng r2(22);
    const Tensor input = random_tensor(r2, 15, n);
    const Tensor w = random_tensor(r2, 7, n);
    const auto loss = [&](const TensorTable& p) { return weighted_sum(UNet(tiny, p).forward(input, 17).prediction, w); };
    const auto grad = [&](const TensorTable& p) {
      const UNet probe(tiny, p);
      return probe.backward(probe.forward(input, 17).cache, w);
    };
    checks.push_back({"tiny u-net N=" + std::to_string(n), grad_check(net.params(), loss, grad).max_relative_error, 1e-3});
  }

  bool ok = true;
  const Check* worst = &checks.front();
  for (const auto& c : checks) {
    ok = ok && c.error < c.tol;
    if (c.error / c.tol > worst->error / worst->tol) worst = &c;
  }
  const std::string rt = runtime_note(seconds_since(t0), 120.0, ok);
  return {ok, fmt("%zu checks, worst %s at %.2e (tol %.0e); %s", checks.size(), worst->name.c_str(), worst->error,
                  worst->tol, rt.c_str())};
}

// ---------------------------------------------------------------------------
// 7

Outcome metric_oracles() {
  const auto t0 = Clock::now();
  Rng rng(71);
  std::uniform_int_distribution<int> len(1, 8);
  std::normal_distribution<double> n(0.0, 1.0);
  int mismatches = 0;
  for (int trial = 0; trial < 500; ++trial) {
    testing::Points a(static_cast<std::size_t>(len(rng))), b(static_cast<std::size_t>(len(rng)));
    for (auto* pts : {&a, &b})
      for (auto& p : *pts) p = {n(rng), n(rng), n(rng)};
    if (dtw_distance_m(a, b) != testing::dtw_oracle(a, b)) ++mismatches;
    if (frechet_distance_m(a, b) != testing::frechet_oracle(a, b)) ++mismatches;
    if (hausdorff_distance_m(a, b) != testing::hausdorff_oracle(a, b)) ++mismatches;
    const double c = chamfer_l2_m(a, b), co = testing::chamfer_oracle(a, b);
    // Chamfer sums in a different order than the enumeration.
    if (std::abs(c - co) > 1e-12 * std::max(1.0, co)) ++mismatches;
  }
  bool ok = mismatches == 0;
  const std::string rt = runtime_note(seconds_since(t0), 60.0, ok);
  return {ok, fmt("500 pairs, %d mismatches; %s", mismatches, rt.c_str())};
}

// ---------------------------------------------------------------------------
// 8

Outcome forward_statistics() {
  const auto t0 = Clock::now();
  const auto s = diffusion::make_schedule(256, diffusion::ScheduleKind::Cosine);
  const int draws = 100000;
  Rng rng(81);
  const std::vector<bool> mask{false};
  diffusion::ResidualTrajectory x0(1);
  x0.set(0, {5.0, -7.5, 10.0}, {6.0, -9.0, 8.0, -5.5});
  double worst_mean = 0.0, worst_var = 0.0;
  for (int t : {1, 64, 128, 192, 240}) {
    std::vector<double> sum(diffusion::kPoseChannels, 0.0), sq(diffusion::kPoseChannels, 0.0);
    for (int d = 0; d < draws; ++d) {
      const auto xt = diffusion::forward_diffuse(x0, t, diffusion::gaussian_residual(1, mask, rng), mask, s);
      for (std::size_t c = 0; c < diffusion::kPoseChannels; ++c) {
        const double v = xt.tensor()(c, 0);
        sum[c] += v;
        sq[c] += v * v;
      }
    }
    const double ab = s.alpha_bar(t);
    for (std::size_t c = 0; c < diffusion::kPoseChannels; ++c) {
      const double mean = sum[c] / draws;
      const double var = sq[c] / draws - mean * mean;
      const double want = std::sqrt(ab) * x0.tensor()(c, 0);
      worst_mean = std::max(worst_mean, std::abs(mean - want) / std::abs(want));
      worst_var = std::max(worst_var, std::abs(var - (1.0 - ab)) / (1.0 - ab));
    }
  }
  bool ok = worst_mean <= 0.02 && worst_var <= 0.02;
  const std::string rt = runtime_note(seconds_since(t0), 60.0, ok);
  return {ok, fmt("t in {1,64,128,192,240}, 1e5 draws: worst relative mean error %.2e, variance error %.2e; %s",
                  worst_mean, worst_var, rt.c_str())};
}

// ---------------------------------------------------------------------------
// 9

Outcome bradley_terry() {
  const auto t0 = Clock::now();
  const auto sym = bt_fit(PreferenceMatrix{{"A", "B"}, {{0, 5}, {5, 0}}});
  const bool sym_ok = sym.scores[0] == 0.5 && sym.scores[1] == 0.5;
  const auto r31 = bt_fit(PreferenceMatrix{{"A", "B"}, {{0, 3}, {1, 0}}});
  const bool r31_ok = std::abs(r31.scores[0] - 0.6) <= 1e-6 && std::abs(r31.scores[1] - 1.0 / 3.0) <= 1e-6;

  int recovered = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    std::vector<double> truth{0.3, 0.8, 1.0, 2.5, 6.0};
    std::shuffle(truth.begin(), truth.end(), rng);
    const std::size_t k = truth.size();
    PreferenceMatrix m;
    m.wins.assign(k, std::vector<long>(k, 0));
    for (std::size_t i = 0; i < k; ++i) m.names.push_back("m" + std::to_string(i));
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) {
        std::bernoulli_distribution win(truth[i] / (truth[i] + truth[j]));
        for (int c = 0; c < 1000; ++c) ++(win(rng) ? m.wins[i][j] : m.wins[j][i]);
      }
    }
    const auto r = bt_fit(m);
    // Spearman correlation of 1 means identical rank order.
    bool same = true;
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j)
        if ((truth[i] < truth[j]) != (r.scores[i] < r.scores[j])) same = false;
    recovered += same ? 1 : 0;
  }
  bool ok = sym_ok && r31_ok && recovered == 20;
  const std::string rt = runtime_note(seconds_since(t0), 60.0, ok);
  return {ok, fmt("equal wins (%.17g, %.17g); 3:1 (%.9f, %.9f); ordering recovered %d/20; %s", sym.scores[0],
                  sym.scores[1], r31.scores[0], r31.scores[1], recovered, rt.c_str())};
}

// ---------------------------------------------------------------------------
// 10

Outcome scale_alignment() {
  Rng rng(101);
  std::uniform_real_distribution<double> u(0.1, 20.0);
  std::vector<DistancePairSample> samples;
  for (int i = 0; i < 50; ++i) {
    const double rec = u(rng);
    samples.push_back({2.0 * rec, rec});
  }
  const double s = estimate_scale(samples).multiplier;
  const double med = estimate_scale(samples, ScaleAggregate::Median).multiplier;

  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto traj = testing::random_trajectory(rng, 20, 3.0);
    const double a = u(rng), b = u(rng);
    const auto twice = apply_scale(apply_scale(traj, a), b);
    const auto once = apply_scale(traj, a * b);
    for (std::size_t i = 0; i < traj.size(); ++i) {
      const double d = distance(twice[i].translation, once[i].translation);
      worst = std::max(worst, d / std::max(1.0, norm(once[i].translation)));
    }
  }
  return {s == 2.0 && med == 2.0 && worst <= 1e-12,
          fmt("ratio-2 samples: mean %.17g, median %.17g; composition worst relative gap %.2e", s, med, worst)};
}

// ---------------------------------------------------------------------------
// 11

Outcome format_round_trips() {
  const auto t0 = Clock::now();
  testing::TempDir dir("resdiff_acceptance_");
  Rng rng(111);
  std::uniform_int_distribution<int> len(2, 200);
  int csv_bad = 0, ck_bad = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto traj = testing::random_trajectory(rng, static_cast<std::size_t>(len(rng)), 5.0, 0.5);
    const fs::path csv = dir.path() / "t.csv";
    data::write_trajectory_csv(csv, traj);
    const auto back = data::read_trajectory_csv(csv);
    bool same = back.size() == traj.size();
    for (std::size_t i = 0; same && i < traj.size(); ++i) {
      same = back[i].translation == traj[i].translation && back[i].rotation == traj[i].rotation;
    }
    csv_bad += same ? 0 : 1;

    nn::TensorTable table;
    std::uniform_int_distribution<int> dim(1, 9);
    const int tensors = dim(rng);
    for (int k = 0; k < tensors; ++k) {
      table.add("t" + std::to_string(k), random_tensor(rng, static_cast<std::size_t>(dim(rng)),
                                                       static_cast<std::size_t>(dim(rng)), 1e3));
    }
    const fs::path ck = dir.path() / "t.htrd";
    nn::save_tensor_table(ck, table);
    ck_bad += nn::load_tensor_table(ck) == table ? 0 : 1;
  }
  // A full model checkpoint, including its configuration.
  diffusion::ModelConfig mc;
  mc.unet = nn::UNetConfig::tiny();
  mc.steps = 16;
  const diffusion::DiffusionModel model(mc, 5);
  model.save(dir.path() / "m.htrd");
  const auto loaded = diffusion::DiffusionModel::load(dir.path() / "m.htrd");
  const bool model_ok = loaded.config() == model.config() && loaded.net().params() == model.net().params();
  bool ok = csv_bad == 0 && ck_bad == 0 && model_ok;
  const std::string rt = runtime_note(seconds_since(t0), 60.0, ok);
  return {ok, fmt("100 trajectories: %d CSV mismatches, 100 tensor tables: %d checkpoint mismatches, model %s; %s",
                  csv_bad, ck_bad, model_ok ? "identical" : "differs", rt.c_str())};
}

}  // namespace
}  // namespace resdiff::acceptance

int main(int argc, char** argv) {
  using namespace resdiff::acceptance;
  CLI::App app{"Acceptance criteria"};
  bool full = false;
  std::vector<int> only;
  app.add_flag("--full", full, "Use the standard training profile");
  app.add_option("--only", only, "Criteria to run")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  Experiment ex;
  ex.full = full;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"SLS arithmetic reproduction", sls_reproduction},
      {"Rotation-score consistency", rotation_score_consistency},
      {"Dirac-conditioning invariant", [&] { return dirac_invariant(ex); }},
      {"Residual learning beats the spline baseline", [&] { return beats_spline(ex); }},
      {"Sparsity monotonicity", [&] { return sparsity_monotone(ex); }},
      {"Gradient correctness", gradient_correctness},
      {"Metric oracle equivalence", metric_oracles},
      {"Forward-process statistics", forward_statistics},
      {"Bradley-Terry", bradley_terry},
      {"Scale alignment", scale_alignment},
      {"Format round-trips", format_round_trips},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  if (ex.model) std::printf("training took %.1f s\n", ex.train_seconds);
  return failed == 0 ? 0 : 1;
}
