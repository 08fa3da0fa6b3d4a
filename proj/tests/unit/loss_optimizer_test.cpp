// Copyright 2026 The aenet Authors. All Rights Reserved.
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

#include "aenet/nnet/loss.hpp"
#include "aenet/nnet/optimizer.hpp"

namespace aenet::nnet {
namespace {

Network<double> one_linear(std::size_t in, std::size_t out) {
  Network<double> net;
  net.input_shape = {in};
  net.n_classes = out;
  net.layers = {linear<double>(in, out), simple<double>(LayerKind::kSoftmax)};
  return net;
}

TEST(CrossEntropy, CertainPredictionHasZeroLoss) {
  const auto net = one_linear(2, 3);
  const Tensor<double> p({2, 3}, {0, 1, 0, 1, 0, 0});
  const std::vector<int> y{1, 0};
  EXPECT_EQ(cross_entropy_l1(p, y, net, 0.0).loss, 0.0);
}

TEST(CrossEntropy, UniformOverTwentyEightClasses) {
  const auto net = one_linear(2, 28);
  const Tensor<double> p({1, 28}, std::vector<double>(28, 1.0 / 28));
  const std::vector<int> y{5};
  EXPECT_NEAR(cross_entropy_l1(p, y, net, 0.0).loss, std::log(28.0), 1e-12);
  EXPECT_NEAR(std::log(28.0), 3.3322, 1e-4);
}

TEST(CrossEntropy, RegulariserIsZeroForZeroWeights) {
  const auto net = one_linear(4, 3);
  const Tensor<double> p({1, 3}, {0.2, 0.3, 0.5});
  const std::vector<int> y{2};
  const auto r = cross_entropy_l1(p, y, net, 1e-6);
  EXPECT_EQ(r.regulariser, 0.0);
  EXPECT_EQ(r.loss, r.data_loss);
}

TEST(CrossEntropy, RegulariserMatchesSummation) {
  auto net = one_linear(4, 3);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> d;
  double oracle = 0.0;
  for (auto* t : {&net.layers[0].weight, &net.layers[0].bias})
    for (auto& v : t->vec()) oracle += std::abs(v = d(rng));
  const Tensor<double> p({1, 3}, {0.2, 0.3, 0.5});
  const std::vector<int> y{0};
  const auto r = cross_entropy_l1(p, y, net, 1e-6);
  EXPECT_NEAR(r.regulariser, 1e-6 * oracle, 1e-18);
  EXPECT_NEAR(r.loss, -std::log(0.2) + 1e-6 * oracle, 1e-15);
}

TEST(CrossEntropy, ClampsVanishingProbability) {
  const auto net = one_linear(1, 2);
  const Tensor<double> p({1, 2}, {1.0, 0.0});
  const std::vector<int> y{1};
  const auto r = cross_entropy_l1(p, y, net, 0.0);
  EXPECT_EQ(r.clamped, 1u);
  EXPECT_NEAR(r.loss, -std::log(kProbEpsilon), 1e-9);
  EXPECT_TRUE(std::isfinite(r.d_probs[1]));
}

TEST(CrossEntropy, BadLabelsAreRejected) {
  const auto net = one_linear(1, 2);
  const Tensor<double> p({1, 2}, {0.5, 0.5});
  const std::vector<int> bad{2}, two{0, 1};
  EXPECT_THROW(cross_entropy_l1(p, bad, net), DomainError);
  EXPECT_THROW(cross_entropy_l1(p, two, net), ShapeError);
}

TEST(CrossEntropyLogits, MatchesProbabilityFormAndChainRule) {
  const auto net = one_linear(2, 4);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> d(0.0, 2.0);
  Tensor<double> z({3, 4});
  for (auto& v : z.vec()) v = d(rng);
  const std::vector<int> y{0, 3, 1};
  Tensor<double> p(z.shape());
  for (std::size_t s = 0; s < 3; ++s) {
    const auto row = softmax<double>(z.row(s));
    std::copy(row.begin(), row.end(), p.row(s).begin());
  }
  const auto a = cross_entropy_l1_logits(z, y, net, 0.0), b = cross_entropy_l1(p, y, net, 0.0);
  EXPECT_NEAR(a.loss, b.loss, 1e-12);
  // Central differences of the loss in score space.
  for (std::size_t i = 0; i < z.size(); ++i) {
    auto zp = z, zm = z;
    zp[i] += 1e-6;
    zm[i] -= 1e-6;
    const double fd = (cross_entropy_l1_logits(zp, y, net, 0.0).loss -
                       cross_entropy_l1_logits(zm, y, net, 0.0).loss) / 2e-6;
    EXPECT_NEAR(a.d_probs[i], fd, 1e-7);
  }
}

TEST(CrossEntropyLogits, SaturatedWrongClassKeepsGradient) {
  const Tensor<float> z({1, 2}, {200.0f, -200.0f});
  const std::vector<int> y{1};
  Network<float> nf;
  nf.input_shape = {1};
  nf.n_classes = 2;
  const auto r = cross_entropy_l1_logits(z, y, nf, 0.0);
  EXPECT_NEAR(r.loss, 400.0, 1e-3);
  EXPECT_NEAR(r.d_probs[0], 1.0, 1e-6);
  EXPECT_NEAR(r.d_probs[1], -1.0, 1e-6);
}

TEST(L1Subgradient, SignWithZeroAtZero) {
  auto net = one_linear(3, 1);
  net.layers[0].weight = Tensor<double>({1, 3}, {-2.0, 0.0, 5.0});
  auto g = Gradients<double>::zeros_like(net);
  add_l1_subgradient(net, g, 0.5);
  EXPECT_EQ(g.weight[0].vec(), (std::vector<double>{-0.5, 0.0, 0.5}));
  EXPECT_EQ(g.bias[0].vec(), (std::vector<double>{0.0}));
}

struct Quadratic {
  Network<double> net = one_linear(2, 1);
  Gradients<double> grad() const {
    // f(w) = 0.5 |w - c|^2 with c = (1, -2), bias target 3
    auto g = Gradients<double>::zeros_like(net);
    g.weight[0][0] = net.layers[0].weight[0] - 1.0;
    g.weight[0][1] = net.layers[0].weight[1] + 2.0;
    g.bias[0][0] = net.layers[0].bias[0] - 3.0;
    return g;
  }
  double loss() const {
    const auto& l = net.layers[0];
    return 0.5 * (std::pow(l.weight[0] - 1, 2) + std::pow(l.weight[1] + 2, 2) + std::pow(l.bias[0] - 3, 2));
  }
};

TEST(SgdMomentum, ZeroGradientLeavesParametersUnchanged) {
  Quadratic q;
  q.net.layers[0].weight = Tensor<double>({1, 2}, {0.3, -0.7});
  auto s = TrainState<double>::create(q.net, {}, 0);
  const auto before = q.net.layers[0].weight;
  sgd_momentum_step(q.net, s, Gradients<double>::zeros_like(q.net));
  EXPECT_EQ(q.net.layers[0].weight, before);
}

TEST(SgdMomentum, FirstStepAndTwoStepUnroll) {
  Quadratic q;
  OptimizerConfig cfg;
  cfg.learning_rate = 0.1;
  auto s = TrainState<double>::create(q.net, cfg, 0);
  auto g = Gradients<double>::zeros_like(q.net);
  g.weight[0][0] = 2.0;
  g.weight[0][1] = -1.0;
  sgd_momentum_step(q.net, s, g);
  EXPECT_DOUBLE_EQ(q.net.layers[0].weight[0], -0.1 * 2.0);
  EXPECT_DOUBLE_EQ(q.net.layers[0].weight[1], 0.1);
  sgd_momentum_step(q.net, s, g);
  EXPECT_NEAR(q.net.layers[0].weight[0], -0.1 * 2.0 * (1.0 + 1.9), 1e-15);
  EXPECT_NEAR(q.net.layers[0].weight[1], 0.1 * (1.0 + 1.9), 1e-15);
}

TEST(SgdMomentum, SmallStepReducesConvexLoss) {
  Quadratic q;
  OptimizerConfig cfg;
  cfg.learning_rate = 0.01;
  auto s = TrainState<double>::create(q.net, cfg, 0);
  const double before = q.loss();
  sgd_momentum_step(q.net, s, q.grad());
  EXPECT_LT(q.loss(), before);
  for (int i = 0; i < 2000; ++i) sgd_momentum_step(q.net, s, q.grad());
  EXPECT_LT(q.loss(), 1e-10);
}

TEST(Schedule, HalvesAfterPatienceEpochsWithoutImprovement) {
  auto s = TrainState<double>::create(one_linear(1, 1), {}, 0);
  EXPECT_FALSE(s.observe_epoch(1.0));
  EXPECT_FALSE(s.observe_epoch(0.9));
  EXPECT_FALSE(s.observe_epoch(0.95));
  EXPECT_FALSE(s.observe_epoch(0.9));
  EXPECT_TRUE(s.observe_epoch(1.2));
  EXPECT_DOUBLE_EQ(s.learning_rate, 0.005);
  EXPECT_FALSE(s.observe_epoch(0.5));
  EXPECT_DOUBLE_EQ(s.learning_rate, 0.005);
}

}  // namespace
}  // namespace aenet::nnet
