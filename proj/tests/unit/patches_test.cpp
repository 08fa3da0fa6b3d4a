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

#include <random>

#include "aenet/dsp/patches.hpp"
#include "aenet/dsp/tensor_file.hpp"
#include "test_util.hpp"

namespace aenet::dsp {
namespace {

FrameFeatures frames_from(std::size_t n, std::size_t bands, auto fn) {
  FrameFeatures f({n, bands});
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t b = 0; b < bands; ++b) f.at(t, b) = fn(t, b);
  return f;
}

TEST(AddDeltas, ConstantInTimeGivesExactZeros) {
  const auto f = frames_from(40, 50, [](std::size_t, std::size_t b) { return 0.37 * b - 3.0; });
  const auto x = add_deltas(f);
  ASSERT_EQ(x.shape(), (Shape{3, 50, 40}));
  for (std::size_t b = 0; b < 50; ++b)
    for (std::size_t t = 0; t < 40; ++t) {
      EXPECT_EQ(x.at(0, b, t), f.at(t, b));
      EXPECT_EQ(x.at(1, b, t), 0.0);
      EXPECT_EQ(x.at(2, b, t), 0.0);
    }
}

TEST(AddDeltas, LinearRampHasSlopeInTheInterior) {
  const double a = 0.75;
  const auto x = add_deltas(frames_from(30, 2, [&](std::size_t t, std::size_t) { return a * t; }));
  for (std::size_t t = 2; t + 2 < 30; ++t) EXPECT_NEAR(x.at(1, 0, t), a, 1e-12);
  // delta-delta of a constant interior slope vanishes away from the edges
  for (std::size_t t = 4; t + 4 < 30; ++t) EXPECT_NEAR(x.at(2, 1, t), 0.0, 1e-12);
}

TEST(AddDeltas, ImpulseGivesAntisymmetricDelta) {
  const std::size_t c = 10;
  const auto x = add_deltas(frames_from(21, 1, [&](std::size_t t, std::size_t) { return t == c ? 1.0 : 0.0; }));
  // Direct stencil evaluation: delta_t = sum_n n (c_{t+n} - c_{t-n}) / 10
  EXPECT_DOUBLE_EQ(x.at(1, 0, c - 2), 0.2);
  EXPECT_DOUBLE_EQ(x.at(1, 0, c - 1), 0.1);
  EXPECT_DOUBLE_EQ(x.at(1, 0, c), 0.0);
  EXPECT_DOUBLE_EQ(x.at(1, 0, c + 1), -0.1);
  EXPECT_DOUBLE_EQ(x.at(1, 0, c + 2), -0.2);
  for (std::size_t k = 0; k <= 5; ++k) EXPECT_DOUBLE_EQ(x.at(1, 0, c - k), -x.at(1, 0, c + k));
}

TEST(AddDeltas, TooFewFramesIsDomainError) {
  EXPECT_THROW(add_deltas(FrameFeatures({4, 50})), DomainError);
}

TEST(PatchStream, ExactLengthGivesOnePatch) {
  const Tensor<float> x({3, 50, 400}, 1.0f);
  const auto p = patch_stream(x, 400);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].data, x);
}

TEST(PatchStream, FiftyPercentOverlapStarts) {
  const auto p = patch_stream(Tensor<float>({3, 50, 800}), 400, 0.5);
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p[0].start_frame, 0u);
  EXPECT_EQ(p[1].start_frame, 200u);
  EXPECT_EQ(p[2].start_frame, 400u);
}

TEST(PatchStream, FinalWindowRepeatsLastFrame) {
  Tensor<float> x({1, 2, 500});
  for (std::size_t t = 0; t < 500; ++t) {
    x.at(0, 0, t) = static_cast<float>(t);
    x.at(0, 1, t) = -static_cast<float>(t);
  }
  const auto p = patch_stream(x, 400, 0.5);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[1].start_frame, 200u);
  for (std::size_t t = 0; t < 300; ++t) EXPECT_EQ(p[1].data.at(0, 0, t), 200.0f + t);
  for (std::size_t t = 300; t < 400; ++t) {
    EXPECT_EQ(p[1].data.at(0, 0, t), 499.0f);
    EXPECT_EQ(p[1].data.at(0, 1, t), -499.0f);
  }
}

TEST(PatchStream, ShortStreamRules) {
  EXPECT_EQ(patch_stream(Tensor<float>({3, 50, 250}), 400).size(), 1u);
  EXPECT_THROW(patch_stream(Tensor<float>({3, 50, 150}), 400), DomainError);
}

TEST(PatchStream, WindowsTileTheStream) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> len(100, 3000);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t total = len(rng), length = trial % 2 ? 200 : 400;
    if (2 * total < length) continue;
    std::vector<bool> covered(total, false);
    for (std::size_t s : patch_starts(total, length, 0.5))
      for (std::size_t t = s; t < std::min(total, s + length); ++t) covered[t] = true;
    EXPECT_TRUE(std::all_of(covered.begin(), covered.end(), [](bool b) { return b; })) << total;
  }
}

TEST(StandardizeMaps, EachMapHasZeroMeanUnitVariance) {
  Tensor<float> x({3, 4, 5});
  std::mt19937 rng(3);
  std::normal_distribution<float> nd(0.0f, 1.0f);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 7.0f * nd(rng) + (i < 20 ? -40.0f : 5.0f);
  for (std::size_t i = 40; i < 60; ++i) x[i] = 2.5f;  // flat map: centred only
  const auto y = standardize_maps(x);
  for (std::size_t m = 0; m < 2; ++m) {
    double mean = 0, sq = 0;
    for (std::size_t i = 0; i < 20; ++i) mean += y[m * 20 + i];
    mean /= 20;
    for (std::size_t i = 0; i < 20; ++i) sq += (y[m * 20 + i] - mean) * (y[m * 20 + i] - mean);
    EXPECT_NEAR(mean, 0.0, 1e-6);
    EXPECT_NEAR(sq / 20, 1.0, 1e-5);
  }
  for (std::size_t i = 40; i < 60; ++i) EXPECT_EQ(y[i], 0.0f);
  // affine changes of one map do not reach the output
  auto z = x;
  for (std::size_t i = 0; i < 20; ++i) z[i] = 3.0f * z[i] + 11.0f;
  const auto yz = standardize_maps(z);
  for (std::size_t i = 0; i < 60; ++i) EXPECT_NEAR(yz[i], y[i], 1e-5);
  EXPECT_THROW(standardize_maps(Tensor<float>({4, 5})), ShapeError);
}

TEST(TensorFile, RoundTripIsBitExact) {
  aenet::testing::TempDir dir("aef");
  Tensor<float> x({3, 50, 7});
  std::mt19937 rng(1);
  std::normal_distribution<float> d;
  for (auto& v : x.vec()) v = d(rng);
  write_tensor(dir / "x.aef", x);
  EXPECT_EQ(read_tensor(dir / "x.aef"), x);
  const auto bytes = aenet::testing::slurp(dir / "x.aef");
  EXPECT_EQ(bytes.size(), 8u + 12u + 4u * x.size());
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "AEF1");
  auto bad = bytes;
  bad.pop_back();
  EXPECT_THROW(decode_tensor(bad), ParseError);
}

}  // namespace
}  // namespace aenet::dsp
