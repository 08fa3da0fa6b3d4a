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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "aenet/mil.hpp"
#include "aenet/model_zoo.hpp"
#include "aenet/nnet/checkpoint.hpp"

namespace aenet::mil {
namespace {

Tensor<double> random_h(std::size_t m, std::size_t n, std::mt19937_64& rng, double scale = 3.0) {
  Tensor<double> h({m, n});
  std::normal_distribution<double> d(0.0, scale);
  for (auto& v : h.vec()) v = d(rng);
  return h;
}

std::vector<double> plain_softmax(std::vector<double> z) {
  double mx = *std::max_element(z.begin(), z.end()), s = 0.0;
  for (auto& v : z) s += (v = std::exp(v - mx));
  for (auto& v : z) v /= s;
  return z;
}

TEST(MaxAggregation, SingleInstanceIsSoftmax) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 100; ++t) {
    const auto h = random_h(6, 1, rng);
    const auto p = aggregate_max(h);
    const auto q = plain_softmax(h.vec());
    for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(p[i], q[i], 1e-12);
  }
}

TEST(MaxAggregation, MatchesPerRowMaxOracle) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 1000; ++t) {
    const auto h = random_h(5, 3, rng);
    std::vector<double> top(5);
    for (std::size_t i = 0; i < 5; ++i) top[i] = std::max({h.at(i, 0), h.at(i, 1), h.at(i, 2)});
    const auto q = plain_softmax(top);
    const auto p = aggregate_max(h);
    for (std::size_t i = 0; i < 5; ++i) ASSERT_NEAR(p[i], q[i], 1e-7);
  }
}

TEST(MaxAggregation, DominantRowWins) {
  Tensor<double> h({3, 4});
  h.at(2, 3) = 10.0;
  const auto p = aggregate_max(h);
  EXPECT_EQ(std::max_element(p.begin(), p.end()) - p.begin(), 2);
}

TEST(NoisyOrAggregation, SingleInstanceIsSoftmax) {
  std::mt19937_64 rng(3);
  const auto h = random_h(4, 1, rng);
  const auto p = aggregate_noisy_or(h);
  const auto q = plain_softmax(h.vec());
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(p[i], q[i], 1e-12);
}

TEST(NoisyOrAggregation, TwoHalfInstancesGiveThreeQuarters) {
  // Two classes with equal logits: p = 0.5 per instance.
  const Tensor<double> h({2, 2});
  const auto r = noisy_or(h);
  EXPECT_DOUBLE_EQ(r.raw[0], 0.75);
  EXPECT_DOUBLE_EQ(r.raw[1], 0.75);
}

TEST(NoisyOrAggregation, MatchesDirectProductOracle) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 1000; ++t) {
    const auto h = random_h(5, 3, rng);
    std::vector<double> raw(5, 1.0);
    for (std::size_t j = 0; j < 3; ++j) {
      const auto pj = plain_softmax({h.at(0, j), h.at(1, j), h.at(2, j), h.at(3, j), h.at(4, j)});
      for (std::size_t i = 0; i < 5; ++i) raw[i] *= 1.0 - pj[i];
    }
    double sum = 0.0;
    for (auto& v : raw) sum += (v = 1.0 - v);
    const auto r = noisy_or(h);
    for (std::size_t i = 0; i < 5; ++i) {
      ASSERT_NEAR(r.raw[i], raw[i], 1e-7);
      ASSERT_NEAR(r.probs[i], raw[i] / sum, 1e-7);
      ASSERT_GT(r.raw[i], 0.0);
      ASSERT_LT(r.raw[i], 1.0);
    }
    EXPECT_NEAR(std::accumulate(r.probs.begin(), r.probs.end(), 0.0), 1.0, 1e-6);
  }
}

TEST(Aggregation, InvariantUnderInstancePermutation) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    const auto h = random_h(4, 5, rng);
    std::vector<std::size_t> perm{4, 2, 0, 3, 1};
    Tensor<double> g({4, 5});
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 5; ++j) g.at(i, j) = h.at(i, perm[j]);
    const auto a = aggregate_max(h), b = aggregate_max(g);
    const auto c = aggregate_noisy_or(h), d = aggregate_noisy_or(g);
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_NEAR(a[i], b[i], 1e-15);
      EXPECT_NEAR(c[i], d[i], 1e-12);
    }
  }
}

TEST(BagLoss, MaxRoutesGradientToFirstArgmax) {
  const Tensor<double> h({2, 3}, {1.0, 4.0, 4.0, 0.5, -1.0, 0.2});
  const auto bl = bag_loss(h, 0, Aggregation::kMax);
  EXPECT_NE(bl.d_h.at(0, 1), 0.0);
  EXPECT_EQ(bl.d_h.at(0, 0), 0.0);
  EXPECT_EQ(bl.d_h.at(0, 2), 0.0);
  EXPECT_NE(bl.d_h.at(1, 0), 0.0);
  EXPECT_EQ(bl.d_h.at(1, 1), 0.0);
  EXPECT_EQ(bl.d_h.at(1, 2), 0.0);
}

TEST(BagLoss, AnalyticMatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  for (auto agg : {Aggregation::kMax, Aggregation::kNoisyOr}) {
    for (int t = 0; t < 50; ++t) {
      auto h = random_h(5, 3, rng, 1.5);
      const int y = t % 5;
      const auto bl = bag_loss(h, y, agg);
      for (std::size_t k = 0; k < h.size(); ++k) {
        const double saved = h[k];
        h[k] = saved + 1e-6;
        const double up = bag_loss(h, y, agg).loss;
        h[k] = saved - 1e-6;
        const double down = bag_loss(h, y, agg).loss;
        h[k] = saved;
        EXPECT_LT(nnet::relative_error(bl.d_h[k], (up - down) / 2e-6), 1e-4) << to_string(agg);
      }
    }
  }
}

TEST(MilStep, SingleInstanceBagsMatchPlainCrossEntropy) {
  const auto net = zoo::build<double>(zoo::arch_spec("conv:4,pool:2x2,fc:8", 3, 12), 3);
  Tensor<double> x({2, 3, 50, 12});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.1 * i);
  const std::vector<int> y{2, 0};
  for (auto agg : {Aggregation::kMax, Aggregation::kNoisyOr}) {
    const auto a = mil_step(net, x, y, 1, agg, nnet::Mode::kEval, nullptr, 0.0);
    const auto c = nnet::forward(net, x, nnet::Mode::kEval);
    const auto ce = nnet::cross_entropy_l1(c.output(), y, net, 0.0);
    EXPECT_NEAR(a.loss, ce.loss, 1e-10);
    const auto g = nnet::backward(net, c, ce.d_probs);
    for (std::size_t i = 0; i < net.layers.size(); ++i)
      for (std::size_t j = 0; j < g.weight[i].size(); ++j) ASSERT_NEAR(a.grad.weight[i][j], g.weight[i][j], 1e-10);
  }
}

TEST(MilGradCheck, BothAggregationsThroughNetwork) {
  zoo::ArchSpec spec = zoo::arch_spec("conv:8,pool:1x2,conv:6,pool:2x2,fc:12", 20, 12);
  spec.input_shape = {3, 10, 12};
  auto net = zoo::build<double>(spec, 11);
  Tensor<double> x({6, 3, 10, 12});
  std::mt19937_64 rng(12);
  std::normal_distribution<double> d;
  for (auto& v : x.vec()) v = d(rng);
  nnet::GradCheckOptions opt;
  opt.dropout_seed = 5;
  opt.rho = 1e-4;
  for (auto agg : {Aggregation::kMax, Aggregation::kNoisyOr}) {
    const auto rep = mil_grad_check(net, x, {3, 17, 0}, 2, agg, opt);
    EXPECT_LT(rep.max_rel_error, 1e-4) << to_string(agg);
    auto bad = opt;
    bad.corrupt_factor = 1.01;
    EXPECT_GT(mil_grad_check(net, x, {3, 17, 0}, 2, agg, bad).max_rel_error, 1e-3);
  }
}

TEST(DrawBags, ReproducibleSameClassAndComplete) {
  const std::vector<int> labels{0, 0, 0, 1, 1, 1, 1, 2};
  Rng a(9), b(9);
  const auto x = draw_bags(labels, 2, a), y = draw_bags(labels, 2, b);
  EXPECT_EQ(x, y);
  std::vector<int> seen(labels.size(), 0);
  for (const auto& bag : x) {
    ASSERT_EQ(bag.clips.size(), 2u);
    for (std::size_t c : bag.clips) {
      EXPECT_EQ(labels[c], bag.label);
      ++seen[c];
    }
    EXPECT_EQ(bag.with_replacement, bag.label == 2);
    if (bag.label != 2) {
      EXPECT_NE(bag.clips[0], bag.clips[1]);
    }
  }
  for (int s : seen) EXPECT_GE(s, 1);
}

TEST(MilTrainEpoch, RunsAndIsDeterministic) {
  auto spec = zoo::arch_spec("conv:4,pool:2x2,fc:16", 2, 20);
  std::vector<Tensor<float>> streams;
  std::vector<int> labels;
  for (int c = 0; c < 2; ++c)
    for (int k = 0; k < 3; ++k) {
      Tensor<float> s({3, 50, 30});
      for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<float>(std::sin((c + 1) * 0.05 * i + k));
      streams.push_back(s);
      labels.push_back(c);
    }
  auto run = [&] {
    auto net = zoo::build<float>(spec, 1);
    auto st = nnet::TrainState<float>::create(net, {}, 0);
    Rng rng(4);
    double loss = 0.0;
    for (int e = 0; e < 3; ++e) loss = mil_train_epoch(net, st, streams, labels, 2, Aggregation::kNoisyOr, 20, 2, rng).mean_loss;
    return std::make_pair(loss, nnet::to_checkpoint(net));
  };
  const auto a = run(), b = run();
  EXPECT_TRUE(std::isfinite(a.first));
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
}

TEST(ParseAggregation, Names) {
  EXPECT_EQ(parse_aggregation("max"), Aggregation::kMax);
  EXPECT_EQ(parse_aggregation("noisy_or"), Aggregation::kNoisyOr);
  EXPECT_THROW(parse_aggregation("mean"), DomainError);
}

}  // namespace
}  // namespace aenet::mil
