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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "aenet/common.hpp"
#include "aenet/dsp/wav.hpp"

namespace aenet::dsp {

struct ResamplerConfig {
  int taps = 32;
  double kaiser_beta = 8.0;
};

namespace detail {

inline double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace detail

/// Windowed-sinc interpolation to `out_rate`. The kernel spans `taps` input
/// samples; when downsampling the cutoff drops to the output Nyquist. Each
/// output's weights are renormalised so DC passes with unit gain.
inline Waveform resample(const Waveform& w, int out_rate, const ResamplerConfig& cfg = {}) {
  if (out_rate <= 0 || w.sample_rate <= 0) throw DomainError("resample: non-positive rate");
  if (out_rate == w.sample_rate) return w;
  const double ratio = static_cast<double>(w.sample_rate) / out_rate;
  const double cutoff = std::min(1.0, 1.0 / ratio);
  const int half = cfg.taps / 2;
  const double i0_beta = std::cyl_bessel_i(0.0, cfg.kaiser_beta);
  const auto n_in = static_cast<std::int64_t>(w.samples.size());
  const auto n_out = static_cast<std::int64_t>(
      std::llround(static_cast<double>(n_in) * out_rate / w.sample_rate));

  Waveform out;
  out.sample_rate = out_rate;
  out.samples.resize(static_cast<std::size_t>(n_out));
  for (std::int64_t n = 0; n < n_out; ++n) {
    const double t = static_cast<double>(n) * w.sample_rate / out_rate;
    const auto base = static_cast<std::int64_t>(std::floor(t));
    double acc = 0.0, wsum = 0.0;
    for (std::int64_t k = base - half + 1; k <= base + half; ++k) {
      const double d = t - static_cast<double>(k);
      const double x = d / half;
      if (std::abs(x) > 1.0) continue;
      const double win = std::cyl_bessel_i(0.0, cfg.kaiser_beta * std::sqrt(1.0 - x * x)) / i0_beta;
      const double h = cutoff * detail::sinc(cutoff * d) * win;
      wsum += h;
      if (k >= 0 && k < n_in) acc += h * w.samples[static_cast<std::size_t>(k)];
    }
    out.samples[static_cast<std::size_t>(n)] = wsum != 0.0 ? acc / wsum : acc;
  }
  return out;
}

/// Scale so max |sample| == 1; all-zero input is returned unchanged.
inline Waveform normalize_peak(Waveform w) {
  const double p = w.peak();
  if (p > 0.0 && p != 1.0)
    for (double& s : w.samples) s /= p;
  return w;
}

/// 16 kHz, peak-normalised mono.
inline Waveform standardize(const Waveform& w, const ResamplerConfig& cfg = {}) {
  if (w.empty()) throw DomainError("standardize: empty waveform");
  if (w.sample_rate <= 0) throw DomainError("standardize: non-positive sample rate");
  for (double s : w.samples)
    if (!std::isfinite(s)) throw DomainError("standardize: non-finite sample");
  return normalize_peak(resample(w, kStandardRate, cfg));
}

struct TrimConfig {
  double threshold_db = -60.0;
  double min_gap_ms = 200.0;
  double window_ms = 25.0;
};

/// Drop runs of 25 ms blocks whose RMS sits more than |threshold_db| below the
/// waveform peak, when the run lasts at least `min_gap_ms`. A trailing partial
/// block is judged like a full one.
inline Waveform trim_silence(const Waveform& w, const TrimConfig& cfg = {}) {
  if (!(cfg.threshold_db < 0.0)) throw DomainError("trim_silence: threshold_db must be < 0");
  if (w.empty()) throw AllSilentError("trim_silence: empty waveform");
  const double peak = w.peak();
  if (peak == 0.0) throw AllSilentError("trim_silence: waveform is all-silent");

  const auto block = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(cfg.window_ms * 1e-3 * w.sample_rate)));
  const double limit = peak * std::pow(10.0, cfg.threshold_db / 20.0);
  const std::size_t n_blocks = (w.size() + block - 1) / block;
  std::vector<bool> quiet(n_blocks);
  for (std::size_t b = 0; b < n_blocks; ++b) {
    const std::size_t lo = b * block, hi = std::min(w.size(), lo + block);
    double e = 0.0;
    for (std::size_t i = lo; i < hi; ++i) e += w.samples[i] * w.samples[i];
    quiet[b] = std::sqrt(e / static_cast<double>(hi - lo)) < limit;
  }

  const double min_gap_samples = cfg.min_gap_ms * 1e-3 * w.sample_rate;
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.reserve(w.size());
  std::size_t b = 0;
  while (b < n_blocks) {
    std::size_t e = b;
    while (e < n_blocks && quiet[e] == quiet[b]) ++e;
    const std::size_t lo = b * block, hi = std::min(w.size(), e * block);
    const bool drop = quiet[b] && static_cast<double>(hi - lo) >= min_gap_samples;
    if (!drop) out.samples.insert(out.samples.end(), w.samples.begin() + lo, w.samples.begin() + hi);
    b = e;
  }
  if (out.empty()) throw AllSilentError("trim_silence: nothing left above threshold");
  return out;
}

/// Equal pieces, each strictly shorter than `max_sec`; the last may be shorter.
inline std::vector<Waveform> split_long(const Waveform& w, double max_sec = 12.0) {
  if (!(max_sec > 0.0)) throw DomainError("split_long: max_sec must be > 0");
  const double max_len = max_sec * w.sample_rate;
  if (w.empty() || static_cast<double>(w.size()) < max_len) return {w};
  if (max_len <= 1.0) throw DomainError("split_long: max_sec shorter than one sample");
  std::size_t pieces = 1;
  std::size_t piece_len = w.size();
  while (!(static_cast<double>(piece_len) < max_len)) {
    ++pieces;
    piece_len = (w.size() + pieces - 1) / pieces;
  }
  std::vector<Waveform> out;
  for (std::size_t lo = 0; lo < w.size(); lo += piece_len) {
    const std::size_t hi = std::min(w.size(), lo + piece_len);
    out.push_back({{w.samples.begin() + lo, w.samples.begin() + hi}, w.sample_rate});
  }
  return out;
}

}  // namespace aenet::dsp
