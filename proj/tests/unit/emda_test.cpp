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
#include <random>

#include "aenet/augment/emda.hpp"
#include "test_util.hpp"

namespace aenet::augment {
namespace {

dsp::Waveform noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  dsp::Waveform w{std::vector<double>(n), 16000};
  for (double& s : w.samples) s = d(rng);
  return dsp::normalize_peak(w);
}

EmdaParams flat(double alpha, double beta) {
  EmdaParams p;
  p.alpha = alpha;
  p.beta = beta;
  p.psi1 = {1000, 0, 1};
  p.psi2 = {3000, 0, 2};
  return p;
}

TEST(Emda, AlphaOneIgnoresSecondSource) {
  const auto s1 = noise(8000, 1);
  EmdaParams p = flat(1.0, 0.0);
  p.psi1 = {800, 5, 3};
  const auto a = emda_mix(s1, noise(8000, 2), p);
  const auto b = emda_mix(s1, noise(8000, 3), p);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_EQ(a.samples, dsp::normalize_peak(apply_eq(s1, design_peaking_eq(p.psi1, 16000))).samples);
}

TEST(Emda, FlatEqualiserHalfMixIsAverage) {
  const auto s1 = noise(4000, 4), s2 = noise(4000, 5);
  const auto out = emda_mix(s1, s2, flat(0.5, 0.0));
  std::vector<double> avg(4000);
  double peak = 0.0;
  for (std::size_t i = 0; i < avg.size(); ++i) {
    avg[i] = 0.5 * (s1.samples[i] + s2.samples[i]);
    peak = std::max(peak, std::abs(avg[i]));
  }
  for (std::size_t i = 0; i < avg.size(); ++i) EXPECT_NEAR(out.samples[i], avg[i] / peak, 1e-12);
}

TEST(Emda, DelayPrefixesZerosAndExtendsLength) {
  const auto s1 = noise(1600, 6), s2 = noise(1600, 7);
  EmdaParams p = flat(0.0, 0.25);
  const auto out = emda_mix(s1, s2, p);  // T defaults to duration of s1 (0.1 s)
  const std::size_t delay = 400;
  ASSERT_EQ(out.size(), delay + s2.size());
  for (std::size_t i = 0; i < delay; ++i) EXPECT_EQ(out.samples[i], 0.0);
  for (std::size_t i = 0; i < s2.size(); ++i) EXPECT_NEAR(out.samples[delay + i], s2.samples[i], 1e-12);
}

TEST(Emda, ExplicitMaxDelay) {
  EmdaParams p = flat(0.5, 0.5);
  p.max_delay_sec = 1.0;
  EXPECT_EQ(emda_mix(noise(1600, 1), noise(1600, 2), p).size(), 8000u + 1600u);
}

TEST(Emda, SameSeedIsBitIdentical) {
  const auto s1 = noise(5000, 8), s2 = noise(7000, 9);
  Rng a(42), b(42), c(43);
  const auto x = emda_sample(s1, s2, a), y = emda_sample(s1, s2, b), z = emda_sample(s1, s2, c);
  EXPECT_EQ(x.samples, y.samples);
  EXPECT_NE(x.samples, z.samples);
}

TEST(Emda, OutputIsFiniteAndBounded) {
  Rng rng(10);
  std::uniform_int_distribution<std::size_t> len(100, 6000);
  std::uniform_real_distribution<double> amp(0.001, 1.0);
  for (int i = 0; i < 100; ++i) {
    auto s1 = noise(len(rng), 100 + i), s2 = noise(len(rng), 200 + i);
    for (double& v : s1.samples) v *= amp(rng);
    const auto out = emda_sample(s1, s2, rng);
    ASSERT_TRUE(std::all_of(out.samples.begin(), out.samples.end(), [](double v) { return std::isfinite(v); }));
    EXPECT_LE(out.peak(), 1.0);
    EXPECT_EQ(out.size() >= std::max(s1.size(), s2.size()), true);
  }
}

TEST(Emda, DrawnParametersStayInTheirBoxes) {
  Rng rng(12);
  for (int i = 0; i < 1000; ++i) EXPECT_TRUE(draw_emda_params(rng).valid());
}

TEST(Emda, SampleRateMismatchIsRejected) {
  Rng rng(1);
  dsp::Waveform other{std::vector<double>(100, 0.1), 8000};
  EXPECT_THROW(emda_sample(noise(100, 1), other, rng), DomainError);
}

}  // namespace
}  // namespace aenet::augment
