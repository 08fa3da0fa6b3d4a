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

#include <cmath>
#include <complex>
#include <numbers>

#include "aenet/common.hpp"
#include "aenet/dsp/wav.hpp"

namespace aenet::augment {

/// Parametric equaliser setting psi = (f0, g, Q).
struct EqParams {
  double f0 = 1000.0;  // Hz, [100, 6000]
  double gain_db = 0.0;  // [-8, 8]
  double q = 1.0;  // [1, 9]

  static constexpr double kMinF0 = 100.0, kMaxF0 = 6000.0;
  static constexpr double kMinGain = -8.0, kMaxGain = 8.0;
  static constexpr double kMinQ = 1.0, kMaxQ = 9.0;

  bool in_box() const {
    return f0 >= kMinF0 && f0 <= kMaxF0 && gain_db >= kMinGain && gain_db <= kMaxGain &&
           q >= kMinQ && q <= kMaxQ;
  }
  friend bool operator==(const EqParams&, const EqParams&) = default;
};

/// Normalised biquad (a0 == 1).
struct BiquadCoeffs {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0, a1 = 0.0, a2 = 0.0;

  /// H(e^{jw}) at frequency `hz`.
  std::complex<double> response(double hz, double sample_rate) const {
    const auto z1 = std::polar(1.0, -2.0 * std::numbers::pi * hz / sample_rate);
    const auto z2 = z1 * z1;
    return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
  }
  double gain_db(double hz, double sample_rate) const {
    return 20.0 * std::log10(std::abs(response(hz, sample_rate)));
  }
  /// Both poles strictly inside the unit circle (Jury conditions for order 2).
  bool stable() const { return std::abs(a2) < 1.0 && std::abs(a1) < 1.0 + a2; }
};

/// Constant-Q peaking equaliser ("audio EQ cookbook" form).
inline BiquadCoeffs design_peaking_eq(const EqParams& p, double sample_rate) {
  if (!(p.f0 > 0.0 && p.f0 < sample_rate / 2.0))
    throw DomainError("peaking EQ: f0 must lie in (0, Nyquist)");
  if (!(p.q > 0.0)) throw DomainError("peaking EQ: Q must be positive");
  const double a = std::pow(10.0, p.gain_db / 40.0);
  const double w = 2.0 * std::numbers::pi * p.f0 / sample_rate;
  const double alpha = std::sin(w) / (2.0 * p.q);
  const double cw = std::cos(w);
  const double a0 = 1.0 + alpha / a;
  return {(1.0 + alpha * a) / a0, -2.0 * cw / a0, (1.0 - alpha * a) / a0, -2.0 * cw / a0,
          (1.0 - alpha / a) / a0};
}

/// Direct form II transposed, zero initial state.
inline dsp::Waveform apply_eq(const dsp::Waveform& w, const BiquadCoeffs& c) {
  dsp::Waveform out{std::vector<double>(w.size()), w.sample_rate};
  double z1 = 0.0, z2 = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double x = w.samples[i];
    const double y = c.b0 * x + z1;
    z1 = c.b1 * x - c.a1 * y + z2;
    z2 = c.b2 * x - c.a2 * y;
    out.samples[i] = y;
  }
  return out;
}

}  // namespace aenet::augment
