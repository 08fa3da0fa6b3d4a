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
#include <map>

#include "aenet/data_synth.hpp"
#include "aenet/dsp/filterbank.hpp"
#include "aenet/dsp/signal.hpp"
#include "test_util.hpp"

namespace aenet::synth {
namespace {

std::vector<EventClassDef> short_classes() {
  auto c = default_classes();
  for (auto& d : c) {
    d.min_sec = 1.0;
    d.max_sec = 1.5;
  }
  return c;
}

TEST(SynthCorpus, EightByTwentyIsBalancedAndLoadable) {
  aenet::testing::TempDir dir("synth");
  const auto m = synth_corpus(dir.path(), short_classes(), 20, 3);
  ASSERT_EQ(m.size(), 160u);
  std::map<int, int> per;
  for (const auto& r : m.records) {
    ++per[r.class_id];
    EXPECT_FALSE(std::filesystem::path(r.path).is_absolute());
    const auto w = dsp::standardize(dsp::load_wav(m.resolve(r)));
    EXPECT_EQ(w.sample_rate, 16000);
    EXPECT_GE(w.duration(), 1.0 - 1e-9);
    EXPECT_LE(w.duration(), 1.5 + 1e-9);
  }
  for (auto [c, n] : per) EXPECT_EQ(n, 20);
}

TEST(SynthCorpus, DefaultClipLengthsSpanThreeToEightSeconds) {
  Rng rng(1);
  for (const auto& c : default_classes()) {
    const auto w = synth_clip(c, rng);
    EXPECT_GE(w.duration(), 3.0 - 1e-9);
    EXPECT_LE(w.duration(), 8.0 + 1e-9);
    EXPECT_LE(w.peak(), 0.9 + 1e-12);
  }
}

TEST(SynthCorpus, SameSeedIsByteIdentical) {
  aenet::testing::TempDir a("synth"), b("synth"), c("synth");
  auto cls = short_classes();
  cls.resize(3);
  const auto ma = synth_corpus(a.path(), cls, 2, 9), mb = synth_corpus(b.path(), cls, 2, 9);
  const auto mc = synth_corpus(c.path(), cls, 2, 10);
  EXPECT_EQ(ma.str(), mb.str());
  bool any_diff = false;
  for (const auto& r : ma.records) {
    EXPECT_EQ(aenet::testing::slurp(a / r.path), aenet::testing::slurp(b / r.path));
    any_diff |= aenet::testing::slurp(a / r.path) != aenet::testing::slurp(c / r.path);
  }
  EXPECT_TRUE(any_diff);
}

TEST(SynthCorpus, ToneClipPeakLiesInClassRange) {
  const auto tone = default_classes()[0];
  for (std::uint64_t s = 0; s < 5; ++s) {
    Rng rng(s);
    EventClassDef c = tone;
    c.min_sec = c.max_sec = 0.25;
    c.min_cover = c.max_cover = 0.95;
    const auto w = synth_clip(c, rng);
    const double hz = aenet::testing::dft_peak_hz(w.samples, 16000, 50, 8000);
    EXPECT_GE(hz, tone.lo - 8.0);
    EXPECT_LE(hz, tone.hi + 8.0);
  }
}

TEST(SynthCorpus, RejectsTooFewClips) {
  aenet::testing::TempDir dir("synth");
  EXPECT_THROW(synth_corpus(dir.path(), default_classes(), 1, 0), DomainError);
}

TEST(SynthCorpus, NearestCentroidBeatsChance) {
  aenet::testing::TempDir dir("synth");
  const auto m = synth_corpus(dir.path(), short_classes(), 6, 21);
  // Mean log filterbank vector per clip; centroids from clips 0-3, test on 4-5.
  std::map<int, std::vector<std::vector<double>>> train, test;
  for (const auto& r : m.records) {
    const auto f = dsp::log_mel_filterbank(dsp::standardize(dsp::load_wav(m.resolve(r))));
    std::vector<double> mean(f.dim(1), 0.0);
    for (std::size_t t = 0; t < f.dim(0); ++t)
      for (std::size_t b = 0; b < f.dim(1); ++b) mean[b] += f.at(t, b) / f.dim(0);
    const int k = std::stoi(r.clip_id.substr(4));
    (k < 4 ? train : test)[r.class_id].push_back(mean);
  }
  std::map<int, std::vector<double>> centroid;
  for (auto& [c, v] : train) {
    centroid[c].assign(v[0].size(), 0.0);
    for (auto& x : v)
      for (std::size_t b = 0; b < x.size(); ++b) centroid[c][b] += x[b] / v.size();
  }
  int correct = 0, total = 0;
  for (auto& [c, v] : test)
    for (auto& x : v) {
      int best = -1;
      double best_d = 1e300;
      for (auto& [k, cen] : centroid) {
        double d = 0.0;
        for (std::size_t b = 0; b < x.size(); ++b) d += (x[b] - cen[b]) * (x[b] - cen[b]);
        if (d < best_d) best_d = d, best = k;
      }
      correct += best == c;
      ++total;
    }
  EXPECT_GT(static_cast<double>(correct) / total, 1.0 / 8 + 0.25);
}

TEST(HighlightSet, TwoPositivesPerVideoAndDeterministic) {
  aenet::testing::TempDir a("hl"), b("hl");
  HighlightSynthConfig cfg;
  cfg.videos = 4;
  cfg.seed = 5;
  const auto sa = synth_highlight_set(a.path(), cfg), sb = synth_highlight_set(b.path(), cfg);
  EXPECT_EQ(sa, sb);
  EXPECT_EQ(aenet::testing::slurp(a / "segments.tsv"), aenet::testing::slurp(b / "segments.tsv"));
  ASSERT_EQ(sa.size(), 32u);
  std::map<std::string, int> pos;
  for (const auto& s : sa) pos[s.video_id] += s.label;
  for (auto [v, n] : pos) EXPECT_EQ(n, 2) << v;
  EXPECT_EQ(load_segments(a / "segments.tsv"), sa);
}

TEST(HighlightSet, PositiveMomentsCarryMoreEventBandEnergy) {
  aenet::testing::TempDir dir("hl");
  HighlightSynthConfig cfg;
  cfg.videos = 3;
  cfg.seed = 8;
  const auto segs = synth_highlight_set(dir.path(), cfg);
  double min_pos = 1e300, max_neg = 0.0;
  for (const auto& s : segs) {
    const auto w = dsp::load_wav(dir / s.path);
    const auto b = static_cast<std::size_t>(s.t_start * 16000), e = static_cast<std::size_t>(s.t_end * 16000);
    // Energy in the tone class band (200-1200 Hz covers f0 and two harmonics).
    std::vector<double> x(w.samples.begin() + b, w.samples.begin() + b + 4096);
    const auto mag = aenet::testing::dft_magnitude(x);
    double band = 0.0;
    for (std::size_t k = 200 * 4096 / 16000; k <= 1200 * 4096 / 16000; ++k) band += mag[k] * mag[k];
    (void)e;
    if (s.label) min_pos = std::min(min_pos, band);
    else max_neg = std::max(max_neg, band);
  }
  EXPECT_GT(min_pos, max_neg);
}

TEST(HighlightSet, PositiveRateMustBeOpenInterval) {
  aenet::testing::TempDir dir("hl");
  HighlightSynthConfig cfg;
  cfg.positive_rate = 1.0;
  EXPECT_THROW(synth_highlight_set(dir.path(), cfg), DomainError);
}

}  // namespace
}  // namespace aenet::synth
