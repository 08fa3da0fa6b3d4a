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
#include <complex>
#include <numbers>
#include <vector>

#include "aenet/common.hpp"
#include "aenet/dsp/fft.hpp"
#include "aenet/dsp/wav.hpp"
#include "aenet/tensor.hpp"

namespace aenet::dsp {

// Frame geometry at 16 kHz: 25 ms frames, 10 ms shift.
inline constexpr std::size_t kFrameLength = 400;
inline constexpr std::size_t kFrameShift = 160;
inline constexpr std::size_t kFftSize = 512;
inline constexpr std::size_t kNumFilters = 49;
inline constexpr std::size_t kNumBands = kNumFilters + 1;  // + log energy
inline constexpr double kLogFloor = 1e-10;
inline constexpr double kMelLowHz = 0.0;
inline constexpr double kMelHighHz = 8000.0;

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

inline double log_floor(double x) { return std::log(std::max(x, kLogFloor)); }

/// n_frames = floor((n - 400) / 160) + 1 for n >= 400, else 0.
inline std::size_t frame_count(std::size_t n_samples) {
  if (n_samples < kFrameLength) return 0;
  return (n_samples - kFrameLength) / kFrameShift + 1;
}

/// n_filters + 2 edge frequencies equally spaced on the mel scale; filter m
/// rises from edges[m] to a peak at edges[m+1] and falls to zero at edges[m+2].
inline std::vector<double> mel_edges(std::size_t n_filters = kNumFilters, double lo_hz = kMelLowHz,
                                     double hi_hz = kMelHighHz) {
  const double lo = hz_to_mel(lo_hz), hi = hz_to_mel(hi_hz);
  std::vector<double> edges(n_filters + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_filters + 1));
  edges.front() = lo_hz;
  edges.back() = hi_hz;
  return edges;
}

inline std::vector<double> center_frequencies(const std::vector<double>& edges) {
  return {edges.begin() + 1, edges.end() - 1};
}

/// Triangular filters rasterised onto FFT bins. Row m holds filter m's weights.
struct FilterBank {
  std::size_t n_filters = 0;
  std::size_t n_bins = 0;
  std::vector<double> weights;  // n_filters x n_bins
  std::vector<double> edges_hz;

  std::span<const double> filter(std::size_t m) const {
    return {weights.data() + m * n_bins, n_bins};
  }
};

inline FilterBank make_filterbank(const std::vector<double>& edges_hz, std::size_t n_fft = kFftSize,
                                  int sample_rate = kStandardRate) {
  if (edges_hz.size() < 3) throw DomainError("filterbank needs at least one filter");
  for (std::size_t i = 1; i < edges_hz.size(); ++i)
    if (!(edges_hz[i] > edges_hz[i - 1])) throw DomainError("filterbank edges must increase");
  FilterBank fb;
  fb.n_filters = edges_hz.size() - 2;
  fb.n_bins = n_fft / 2 + 1;
  fb.edges_hz = edges_hz;
  fb.weights.assign(fb.n_filters * fb.n_bins, 0.0);
  for (std::size_t m = 0; m < fb.n_filters; ++m) {
    const double lo = edges_hz[m], c = edges_hz[m + 1], hi = edges_hz[m + 2];
    for (std::size_t k = 0; k < fb.n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
      double w = 0.0;
      if (f > lo && f <= c)
        w = (f - lo) / (c - lo);
      else if (f > c && f < hi)
        w = (hi - f) / (hi - c);
      fb.weights[m * fb.n_bins + k] = w;
    }
  }
  return fb;
}

inline const FilterBank& standard_filterbank() {
  static const FilterBank fb = make_filterbank(mel_edges());
  return fb;
}

/// Short-time power spectra plus per-frame energy (sum of squared raw samples).
struct PowerSpectra {
  std::size_t n_frames = 0;
  std::size_t n_bins = 0;
  std::vector<double> power;   // n_frames x n_bins
  std::vector<double> energy;  // n_frames
};

inline const std::vector<double>& hann_window() {
  static const std::vector<double> win = [] {
    std::vector<double> w(kFrameLength);
    for (std::size_t i = 0; i < kFrameLength; ++i)
      w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / kFrameLength);
    return w;
  }();
  return win;
}

inline PowerSpectra power_spectra(const Waveform& w) {
  if (w.sample_rate != kStandardRate)
    throw DomainError("filterbank input must be 16 kHz (got " + std::to_string(w.sample_rate) + ")");
  const std::size_t n_frames = frame_count(w.size());
  if (n_frames == 0) throw DomainError("waveform shorter than one 25 ms frame");

  static const Fft fft(kFftSize);
  const auto& win = hann_window();
  PowerSpectra ps;
  ps.n_frames = n_frames;
  ps.n_bins = kFftSize / 2 + 1;
  ps.power.resize(n_frames * ps.n_bins);
  ps.energy.resize(n_frames);
  std::vector<double> frame(kFrameLength);
  std::vector<std::complex<double>> scratch;
  for (std::size_t t = 0; t < n_frames; ++t) {
    const double* src = w.samples.data() + t * kFrameShift;
    double e = 0.0;
    for (std::size_t i = 0; i < kFrameLength; ++i) {
      e += src[i] * src[i];
      frame[i] = src[i] * win[i];
    }
    ps.energy[t] = e;
    fft.power_spectrum(frame, std::span<double>(ps.power.data() + t * ps.n_bins, ps.n_bins), scratch);
  }
  return ps;
}

/// [n_frames x (n_filters + 1)] log filterbank energies; last column is log frame energy.
using FrameFeatures = Tensor<double>;

inline FrameFeatures apply_filterbank(const PowerSpectra& ps, const FilterBank& fb) {
  if (fb.n_bins != ps.n_bins) throw ShapeError("filterbank/spectrum bin count mismatch");
  const std::size_t cols = fb.n_filters + 1;
  FrameFeatures out({ps.n_frames, cols});
  for (std::size_t t = 0; t < ps.n_frames; ++t) {
    const double* p = ps.power.data() + t * ps.n_bins;
    for (std::size_t m = 0; m < fb.n_filters; ++m) {
      const double* wm = fb.weights.data() + m * fb.n_bins;
      double acc = 0.0;
      for (std::size_t k = 0; k < fb.n_bins; ++k) acc += wm[k] * p[k];
      out.at(t, m) = log_floor(acc);
    }
    out.at(t, fb.n_filters) = log_floor(ps.energy[t]);
  }
  return out;
}

inline FrameFeatures log_mel_filterbank(const Waveform& w) {
  return apply_filterbank(power_spectra(w), standard_filterbank());
}

}  // namespace aenet::dsp
