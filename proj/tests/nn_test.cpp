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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "resdiff/nn/adam.hpp"
#include "resdiff/nn/grad_check.hpp"
#include "resdiff/nn/layers.hpp"
#include "resdiff/nn/unet.hpp"

namespace resdiff::nn {
namespace {

using Rng = std::mt19937_64;

Tensor random_tensor(Rng& rng, std::size_t c, std::size_t l, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Tensor t(c, l);
  for (double& v : t.values()) v = n(rng);
  return t;
}

double weighted_sum(const Tensor& y, const Tensor& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y.values()[i] * w.values()[i];
  return s;
}


UNetConfig tiny_config() {
  UNetConfig c = UNetConfig::tiny();
  c.zero_init_output = false;
  return c;
}

TEST(GradCheck, QuadraticScalar) {
  TensorTable p;
  p.add("x", Tensor(1, 3, std::vector<double>{0.5, -1.25, 2.0}));
  const auto loss = [](const TensorTable& t) {
    const auto v = t[0].values();
    return 3.0 * v[0] * v[0] + v[1] * v[1] - 0.5 * v[2] * v[2] + v[0] * v[1];
  };
  const auto grad = [](const TensorTable& t) {
    TensorTable g = t.zeros_like();
    const auto v = t[0].values();
    auto o = g[0].values();
    o[0] = 6.0 * v[0] + v[1];
    o[1] = 2.0 * v[1] + v[0];
    o[2] = -v[2];
    return g;
  };
  const auto r = grad_check(p, loss, grad);
  EXPECT_EQ(r.checked, 3u);
  EXPECT_LT(r.max_relative_error, 1e-8);
}

TEST(GradCheck, Conv1dWithSilu) {
  Rng rng(11);
  for (int stride : {1, 2}) {
    TensorTable p;
    const Conv1d conv = Conv1d::create(p, "conv", 3, 4, 5, stride, 2, rng);
    const Tensor x = random_tensor(rng, 3, 12);
    const Tensor w = random_tensor(rng, 4, conv.output_length(12));
    const auto loss = [&](const TensorTable& t) { return weighted_sum(silu(conv.forward(t, x)), w); };
    const auto grad = [&](const TensorTable& t) {
      TensorTable g = t.zeros_like();
      const Tensor pre = conv.forward(t, x);
      conv.backward(t, x, silu_backward(pre, w), g);
      return g;
    };
    EXPECT_LT(grad_check(p, loss, grad).max_relative_error, 1e-4) << "stride " << stride;
  }
}

TEST(GradCheck, Conv1dInputGradient) {
  Rng rng(12);
  TensorTable p;
  const Conv1d conv = Conv1d::create(p, "conv", 2, 3, 5, 2, 2, rng);
  TensorTable xin;
  xin.add("x", random_tensor(rng, 2, 9));
  const Tensor w = random_tensor(rng, 3, conv.output_length(9));
  const auto loss = [&](const TensorTable& t) { return weighted_sum(conv.forward(p, t[0]), w); };
  const auto grad = [&](const TensorTable& t) {
    TensorTable scratch = p.zeros_like();
    TensorTable g = t.zeros_like();
    g[0] = conv.backward(p, t[0], w, scratch);
    return g;
  };
  EXPECT_LT(grad_check(xin, loss, grad).max_relative_error, 1e-4);
}

TEST(GradCheck, GroupNormParametersAndInput) {
  Rng rng(13);
  TensorTable p;
  const GroupNorm gn = GroupNorm::create(p, "gn", 8, 4);
  for (double& v : p[0].values()) v = 1.0 + 0.3 * std::normal_distribution<double>()(rng);
  for (double& v : p[1].values()) v = 0.3 * std::normal_distribution<double>()(rng);
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
  EXPECT_LT(grad_check(p, loss, grad).max_relative_error, 1e-4);

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
  EXPECT_LT(grad_check(xin, loss_x, grad_x).max_relative_error, 1e-4);
}

TEST(GradCheck, LinearAndSilu) {
  Rng rng(14);
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
  EXPECT_LT(grad_check(p, loss, grad).max_relative_error, 1e-4);
}

TEST(GradCheck, UpsampleAndConcat) {
  Rng rng(15);
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
  EXPECT_LT(grad_check(in, loss, grad).max_relative_error, 1e-4);
}

TEST(GradCheck, ResBlockWithTimeEmbedding) {
  Rng rng(16);
  UNetConfig cfg = tiny_config();
  TensorTable p;
  const ResBlock block = ResBlock::create(p, "blk", 16, 8, cfg, rng);
  const Tensor x = random_tensor(rng, 16, 10);
  const Tensor temb = random_tensor(rng, static_cast<std::size_t>(cfg.time_dim), 1);
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
  EXPECT_LT(grad_check(p, loss, grad).max_relative_error, 1e-4);
}

struct TinyNetFixture {
  UNet net{tiny_config(), 21};
  Tensor input;
  Tensor w;
  int t = 17;

  explicit TinyNetFixture(std::size_t n) {
    Rng rng(22);
    input = random_tensor(rng, 15, n);
    w = random_tensor(rng, 7, n);
  }

  double loss(const TensorTable& params) const {
    const UNet probe(net.config(), params);
    return weighted_sum(probe.forward(input, t).prediction, w);
  }

  TensorTable grad(const TensorTable& params) const {
    const UNet probe(net.config(), params);
    const auto r = probe.forward(input, t);
    return probe.backward(r.cache, w);
  }
};

TEST(GradCheck, FullTinyUNet) {
  const TinyNetFixture f(16);
  const auto r = grad_check(
      f.net.params(), [&](const TensorTable& p) { return f.loss(p); }, [&](const TensorTable& p) { return f.grad(p); });
  EXPECT_EQ(r.checked, f.net.parameter_count());
  EXPECT_LT(r.max_relative_error, 1e-3) << r.worst_tensor << "[" << r.worst_index << "]";
}

TEST(GradCheck, FullTinyUNetWithCropping) {
  const TinyNetFixture f(14);
  const auto r = grad_check(
      f.net.params(), [&](const TensorTable& p) { return f.loss(p); }, [&](const TensorTable& p) { return f.grad(p); });
  EXPECT_LT(r.max_relative_error, 1e-3) << r.worst_tensor << "[" << r.worst_index << "]";
}

TEST(UNet, ShapesAtDefaultWidth) {
  const UNet net(UNetConfig{}, 1);
  Rng rng(1);
  const auto r = net.forward(random_tensor(rng, 7, 128), random_tensor(rng, 7, 128), Tensor(1, 128), 10);
  EXPECT_EQ(r.prediction.channels(), 7u);
  EXPECT_EQ(r.prediction.length(), 128u);
  EXPECT_EQ(r.bottleneck.channels(), 256u);
  EXPECT_EQ(r.bottleneck.length(), 32u);
}

TEST(UNet, PadsAndCropsNonMultipleLength) {
  const UNet net(UNetConfig::tiny(), 1);
  Rng rng(2);
  const auto r = net.forward(random_tensor(rng, 15, 130), 3);
  EXPECT_EQ(r.cache.padded_length, 132u);
  EXPECT_EQ(r.prediction.length(), 130u);
  EXPECT_EQ(r.bottleneck.length(), 33u);
}

TEST(UNet, ReflectPaddingMirrorsWithoutEdgeRepeat) {
  const Tensor x(1, 5, std::vector<double>{0, 1, 2, 3, 4});
  const Tensor y = reflect_pad_right(x, 4);
  ASSERT_EQ(y.length(), 8u);
  EXPECT_EQ(y(0, 5), 3.0);
  EXPECT_EQ(y(0, 6), 2.0);
  EXPECT_EQ(y(0, 7), 1.0);
}

TEST(UNet, DeterministicForward) {
  const UNet a(UNetConfig::tiny(), 5);
  const UNet b(UNetConfig::tiny(), 5);
  EXPECT_EQ(a.params(), b.params());
  Rng rng(3);
  const Tensor x = random_tensor(rng, 15, 64);
  const auto r1 = a.forward(x, 40);
  const auto r2 = a.forward(x, 40);
  EXPECT_EQ(r1.prediction, r2.prediction);
  EXPECT_EQ(r1.bottleneck, r2.bottleneck);
}

TEST(UNet, ZeroInitOutputPredictsZero) {
  const UNet net(UNetConfig::tiny(), 5);
  Rng rng(4);
  const auto r = net.forward(random_tensor(rng, 15, 32), 9);
  for (double v : r.prediction.values()) EXPECT_EQ(v, 0.0);
}

TEST(UNet, ParameterCountIsDeterministic) {
  EXPECT_EQ(UNet(UNetConfig{}, 1).parameter_count(), UNet(UNetConfig{}, 2).parameter_count());
  EXPECT_GT(UNet(UNetConfig{}, 1).parameter_count(), UNet(UNetConfig::tiny(), 1).parameter_count());
}

TEST(UNet, RejectsWrongShapes) {
  const UNet net(UNetConfig::tiny(), 1);
  EXPECT_THROW(net.forward(Tensor(14, 16), 1), Error);
  EXPECT_THROW(net.forward(Tensor(7, 16), Tensor(7, 15), Tensor(1, 16), 1), Error);
  const auto r = net.forward(Tensor(15, 16), 1);
  EXPECT_THROW(net.backward(r.cache, Tensor(7, 15)), Error);
}

TEST(UNet, BackwardWithoutForwardThrows) {
  const UNet net(UNetConfig::tiny(), 1);
  try {
    net.backward(ForwardCache{}, Tensor(7, 16));
    FAIL() << "expected MissingForwardCache";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingForwardCache);
  }
}

TEST(UNet, ZeroUpstreamGivesZeroGradients) {
  const UNet net(tiny_config(), 3);
  Rng rng(5);
  const auto r = net.forward(random_tensor(rng, 15, 16), 4);
  const TensorTable g = net.backward(r.cache, Tensor(7, 16));
  for (std::size_t i = 0; i < g.size(); ++i)
    for (double v : g[i].values()) ASSERT_EQ(v, 0.0) << g.name(i);
}

TEST(UNet, BackwardIsLinearInUpstream) {
  const UNet net(tiny_config(), 3);
  Rng rng(6);
  const auto r = net.forward(random_tensor(rng, 15, 16), 4);
  const Tensor a = random_tensor(rng, 7, 16);
  const Tensor b = random_tensor(rng, 7, 16);
  Tensor ab = a;
  ab += b;
  TensorTable sum = net.backward(r.cache, a);
  sum += net.backward(r.cache, b);
  const TensorTable direct = net.backward(r.cache, ab);
  for (std::size_t i = 0; i < sum.size(); ++i)
    for (std::size_t j = 0; j < sum[i].size(); ++j)
      EXPECT_NEAR(sum[i].values()[j], direct[i].values()[j], 1e-10 * (1.0 + std::abs(direct[i].values()[j])));
}

TEST(UNet, SumOfOutputsGradientMatchesAllOnesBackward) {
  // Perturb single weights and compare d(sum of outputs) with the all-ones backward.
  const UNet net(tiny_config(), 7);
  Rng rng(7);
  const Tensor x = random_tensor(rng, 15, 16);
  const auto r = net.forward(x, 12);
  const TensorTable g = net.backward(r.cache, Tensor(7, 16, 1.0));
  const auto total = [&](const TensorTable& p) {
    const Tensor y = UNet(net.config(), p).forward(x, 12).prediction;
    double s = 0.0;
    for (double v : y.values()) s += v;
    return s;
  };
  std::uniform_int_distribution<std::size_t> pick_tensor(0, g.size() - 1);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t ti = pick_tensor(rng);
    std::uniform_int_distribution<std::size_t> pick(0, g[ti].size() - 1);
    const std::size_t j = pick(rng);
    TensorTable p = net.params();
    const double orig = p[ti].values()[j];
    p[ti].values()[j] = orig + 1e-5;
    const double up = total(p);
    p[ti].values()[j] = orig - 1e-5;
    const double down = total(p);
    const double numeric = (up - down) / 2e-5;
    EXPECT_LT(relative_error(g[ti].values()[j], numeric, 1e-5), 1e-4) << g.name(ti) << "[" << j << "]";
  }
}

TEST(UNet, TranslationCovariantAwayFromBoundary) {
  // Content is confined to the middle of a zero background. Circularly
  // shifting it by 4 frames shifts the output by 4 frames wherever the
  // receptive field does not reach the sequence ends.
  const UNet net(tiny_config(), 9);
  const std::size_t n = 256, shift = 4, margin = 72;
  Rng rng(8);
  Tensor x(15, n);
  std::normal_distribution<double> g(0.0, 1.0);
  for (std::size_t c = 0; c < 15; ++c)
    for (std::size_t t = 104; t < 152; ++t) x(c, t) = g(rng);
  Tensor xs(15, n);
  for (std::size_t c = 0; c < 15; ++c)
    for (std::size_t t = 0; t < n; ++t) xs(c, (t + shift) % n) = x(c, t);
  const Tensor y = net.forward(x, 30).prediction;
  const Tensor ys = net.forward(xs, 30).prediction;
  for (std::size_t c = 0; c < 7; ++c)
    for (std::size_t t = margin; t + margin < n; ++t) EXPECT_NEAR(ys(c, t + shift), y(c, t), 1e-9);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  TensorTable p;
  p.add("w", Tensor(2, 2, std::vector<double>{1, -2, 3, 0.5}));
  const TensorTable before = p;
  Adam opt(p);
  opt.step(p, p.zeros_like(), 1e-3);
  EXPECT_EQ(p, before);
  EXPECT_EQ(opt.steps(), 1);
}

TEST(Adam, ConstantGradientDescends) {
  TensorTable p;
  p.add("w", Tensor(1, 2, std::vector<double>{0.0, 0.0}));
  TensorTable g = p.zeros_like();
  g[0].values()[0] = 2.0;
  g[0].values()[1] = -0.1;
  Adam opt(p);
  for (int i = 0; i < 100; ++i) opt.step(p, g, 1e-2);
  EXPECT_LT(p[0].values()[0], 0.0);
  EXPECT_GT(p[0].values()[1], 0.0);
  EXPECT_EQ(opt.steps(), 100);
}

TEST(Adam, MatchesHandComputedTwoStepTrace) {
  // Scalar x0 = 1, lr = 0.1, g1 = 0.5, g2 = -0.2, manual recurrence.
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8, lr = 0.1;
  double m = 0.0, v = 0.0, x = 1.0;
  const double gs[2] = {0.5, -0.2};
  for (int k = 1; k <= 2; ++k) {
    m = b1 * m + (1 - b1) * gs[k - 1];
    v = b2 * v + (1 - b2) * gs[k - 1] * gs[k - 1];
    x -= lr * (m / (1 - std::pow(b1, k))) / (std::sqrt(v / (1 - std::pow(b2, k))) + eps);
  }

  TensorTable p;
  p.add("x", Tensor(1, 1, 1.0));
  Adam opt(p);
  TensorTable g = p.zeros_like();
  g[0].values()[0] = gs[0];
  opt.step(p, g, lr);
  EXPECT_NEAR(p[0].values()[0], 0.9, 1e-8);
  g[0].values()[0] = gs[1];
  opt.step(p, g, lr);
  EXPECT_NEAR(p[0].values()[0], x, 1e-15);
}

TEST(Adam, RejectsMismatchedLayout) {
  TensorTable p;
  p.add("w", Tensor(1, 2));
  TensorTable other;
  other.add("w", Tensor(1, 3));
  Adam opt(p);
  EXPECT_THROW(opt.step(p, other, 1e-3), Error);
}

}  // namespace
}  // namespace resdiff::nn
