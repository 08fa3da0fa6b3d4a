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

#include "aenet/dsp/filterbank.hpp"
#include "test_util.hpp"

namespace aenet::dsp {
namespace {

// Independent center-frequency table: 49 HTK mel triangles over 0-8000 Hz.
std::vector<double> oracle_centers() {
  const double top = 2595.0 * std::log10(1.0 + 8000.0 / 700.0);
  std::vector<double> c;
  for (int i = 1; i <= 49; ++i) c.push_back(700.0 * (std::pow(10.0, top * i / 50.0 / 2595.0) - 1.0));
  return c;
}

std::size_t nearest(const std::vector<double>& centers, double hz) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < centers.size(); ++i)
    if (std::abs(centers[i] - hz) < std::abs(centers[best] - hz)) best = i;
  return best;
}

TEST(LogMelFilterbank, FourSecondsGiveFourHundredFrames) {
  const Waveform w{std::vector<double>(4 * 16000 + 240, 0.01), 16000};
  const auto f = log_mel_filterbank(w);
  EXPECT_EQ(f.dim(0), 400u);
  EXPECT_EQ(f.dim(1), 50u);
}

TEST(LogMelFilterbank, PureToneLandsInNearestFilter) {
  const auto centers = oracle_centers();
  const auto table = center_frequencies(mel_edges());
  for (std::size_t i = 0; i < centers.size(); ++i) EXPECT_NEAR(table[i], centers[i], 1e-9);
  for (double hz : {1000.0, 440.0, 2500.0, 5000.0}) {
    const auto f = log_mel_filterbank(aenet::testing::sine(hz, 0.5, 16000));
    const std::size_t want = nearest(centers, hz);
    for (std::size_t t = 0; t < f.dim(0); ++t) {
      std::size_t arg = 0;
      for (std::size_t b = 1; b < kNumFilters; ++b)
        if (f.at(t, b) > f.at(t, arg)) arg = b;
      ASSERT_EQ(arg, want) << hz << " Hz, frame " << t;
    }
  }
}

TEST(LogMelFilterbank, SilenceHitsTheLogFloor) {
  const auto f = log_mel_filterbank({std::vector<double>(8000, 0.0), 16000});
  for (double v : f.vec()) EXPECT_EQ(v, std::log(1e-10));
}

TEST(LogMelFilterbank, LastColumnIsLogFrameEnergy) {
  const Waveform w{std::vector<double>(400, 0.5), 16000};
  const auto f = log_mel_filterbank(w);
  ASSERT_EQ(f.dim(0), 1u);
  EXPECT_NEAR(f.at(0, 49), std::log(400 * 0.25), 1e-12);
}

TEST(LogMelFilterbank, RejectsShortOrWrongRateInput) {
  EXPECT_THROW(log_mel_filterbank({std::vector<double>(399, 0.1), 16000}), DomainError);
  EXPECT_THROW(log_mel_filterbank({std::vector<double>(4000, 0.1), 8000}), DomainError);
}

TEST(LogMelFilterbank, FrameCountFormulaOnRandomLengths) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> len(400, 20000);
  std::normal_distribution<double> noise(0.0, 0.1);
  for (int i = 0; i < 50; ++i) {
    Waveform w{std::vector<double>(len(rng)), 16000};
    for (double& s : w.samples) s = noise(rng);
    const auto f = log_mel_filterbank(w);
    EXPECT_EQ(f.dim(0), (w.size() - 400) / 160 + 1);
    EXPECT_TRUE(f.all_finite());
  }
}

TEST(FilterBank, TrianglesAreWellFormed) {
  const auto& fb = standard_filterbank();
  ASSERT_EQ(fb.n_filters, 49u);
  const auto c = center_frequencies(fb.edges_hz);
  for (std::size_t i = 1; i < c.size(); ++i) EXPECT_GT(hz_to_mel(c[i]), hz_to_mel(c[i - 1]));
  for (std::size_t m = 0; m < fb.n_filters; ++m) {
    double sum = 0.0;
    for (double w : fb.filter(m)) {
      EXPECT_GE(w, 0.0);
      EXPECT_LE(w, 1.0);
      sum += w;
    }
    EXPECT_GT(sum, 0.0) << "filter " << m;
  }
}

}  // namespace
}  // namespace aenet::dsp
