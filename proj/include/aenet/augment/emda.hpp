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
#include <optional>
#include <random>

#include "aenet/augment/biquad.hpp"
#include "aenet/common.hpp"
#include "aenet/dsp/signal.hpp"

namespace aenet::augment {

/// One draw of the equalised-mixture parameters.
///   s_aug = alpha * EQ(s1, psi1) + (1 - alpha) * EQ(s2 delayed by beta*T, psi2)
struct EmdaParams {
  double alpha = 0.5;  // [0, 1)
  double beta = 0.0;   // [0, 1)
  EqParams psi1;
  EqParams psi2;
  /// Maximum delay T in seconds; unset means "duration of s1".
  std::optional<double> max_delay_sec;

  bool valid() const {
    return alpha >= 0.0 && alpha <= 1.0 && beta >= 0.0 && beta < 1.0 && psi1.in_box() &&
           psi2.in_box() && (!max_delay_sec || *max_delay_sec >= 0.0);
  }
};

struct EmdaOptions {
  /// Peak-normalise each source before mixing.
  bool normalize_sources = true;
  std::optional<double> max_delay_sec;
};

inline EqParams draw_eq_params(Rng& rng) {
  std::uniform_real_distribution<double> f0(EqParams::kMinF0, EqParams::kMaxF0);
  std::uniform_real_distribution<double> g(EqParams::kMinGain, EqParams::kMaxGain);
  std::uniform_real_distribution<double> q(EqParams::kMinQ, EqParams::kMaxQ);
  EqParams p;
  p.f0 = f0(rng);
  p.gain_db = g(rng);
  p.q = q(rng);
  return p;
}

/// Draw order is fixed: alpha, beta, psi1 (f0, g, Q), psi2 (f0, g, Q).
inline EmdaParams draw_emda_params(Rng& rng, std::optional<double> max_delay_sec = std::nullopt) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  EmdaParams p;
  p.alpha = unit(rng);
  p.beta = unit(rng);
  p.psi1 = draw_eq_params(rng);
  p.psi2 = draw_eq_params(rng);
  p.max_delay_sec = max_delay_sec;
  return p;
}

/// Deterministic mix for fixed parameters. Output is re-peak-normalised.
inline dsp::Waveform emda_mix(const dsp::Waveform& s1, const dsp::Waveform& s2,
                              const EmdaParams& p, bool normalize_sources = true) {
  if (s1.empty() || s2.empty()) throw DomainError("emda: empty source");
  if (s1.sample_rate != s2.sample_rate) throw DomainError("emda: sample-rate mismatch");
  const double fs = s1.sample_rate;
  const dsp::Waveform a = normalize_sources ? dsp::normalize_peak(s1) : s1;
  const dsp::Waveform b = normalize_sources ? dsp::normalize_peak(s2) : s2;
  const dsp::Waveform ea = apply_eq(a, design_peaking_eq(p.psi1, fs));
  const dsp::Waveform eb = apply_eq(b, design_peaking_eq(p.psi2, fs));

  const double t_max = p.max_delay_sec.value_or(s1.duration());
  const auto delay = static_cast<std::size_t>(std::llround(p.beta * t_max * fs));
  const std::size_t len = std::max(s1.size(), delay + s2.size());
  dsp::Waveform out{std::vector<double>(len, 0.0), s1.sample_rate};
  for (std::size_t i = 0; i < ea.size(); ++i) out.samples[i] += p.alpha * ea.samples[i];
  for (std::size_t i = 0; i < eb.size(); ++i) out.samples[delay + i] += (1.0 - p.alpha) * eb.samples[i];
  return dsp::normalize_peak(std::move(out));
}

/// Draws parameters from `rng` and mixes two same-class sources.
inline dsp::Waveform emda_sample(const dsp::Waveform& s1, const dsp::Waveform& s2, Rng& rng,
                                 const EmdaOptions& opt = {}) {
  if (s1.sample_rate != s2.sample_rate) throw DomainError("emda: sample-rate mismatch");
  return emda_mix(s1, s2, draw_emda_params(rng, opt.max_delay_sec), opt.normalize_sources);
}

}  // namespace aenet::augment
