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

#include <vector>

#include "aenet/common.hpp"
#include "aenet/dsp/filterbank.hpp"

namespace aenet::augment {

inline constexpr double kVtlpMinWarp = 0.9;
inline constexpr double kVtlpMaxWarp = 1.1;
inline constexpr double kVtlpKneeHz = 4800.0;

inline void check_warp(double warp) {
  if (!(warp >= kVtlpMinWarp && warp <= kVtlpMaxWarp))
    throw DomainError("vtlp: warp factor must lie in [0.9, 1.1]");
}

/// Piecewise-linear frequency warp: f * warp below the knee, then a straight
/// segment that lands on the Nyquist frequency unchanged.
inline double warp_frequency(double hz, double warp, double nyquist = dsp::kMelHighHz) {
  if (hz <= kVtlpKneeHz) return hz * warp;
  const double knee_out = kVtlpKneeHz * warp;
  return knee_out + (nyquist - knee_out) * (hz - kVtlpKneeHz) / (nyquist - kVtlpKneeHz);
}

/// Exact inverse of warp_frequency for the same factor.
inline double unwarp_frequency(double hz, double warp, double nyquist = dsp::kMelHighHz) {
  const double knee_out = kVtlpKneeHz * warp;
  if (hz <= knee_out) return hz / warp;
  return kVtlpKneeHz + (hz - knee_out) * (nyquist - kVtlpKneeHz) / (nyquist - knee_out);
}

inline std::vector<double> warp_edges(const std::vector<double>& edges, double warp) {
  check_warp(warp);
  std::vector<double> out(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) out[i] = warp_frequency(edges[i], warp);
  return out;
}

inline std::vector<double> unwarp_edges(const std::vector<double>& edges, double warp) {
  check_warp(warp);
  std::vector<double> out(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) out[i] = unwarp_frequency(edges[i], warp);
  return out;
}

/// Log filterbank features computed with warped filter positions.
inline dsp::FrameFeatures vtlp_warp(const dsp::PowerSpectra& ps, double warp) {
  check_warp(warp);
  if (warp == 1.0) return dsp::apply_filterbank(ps, dsp::standard_filterbank());
  return dsp::apply_filterbank(ps, dsp::make_filterbank(warp_edges(dsp::mel_edges(), warp)));
}

}  // namespace aenet::augment
