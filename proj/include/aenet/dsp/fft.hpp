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
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "aenet/common.hpp"

namespace aenet::dsp {

/// In-place iterative radix-2 FFT with precomputed twiddles and bit reversal.
class Fft {
 public:
  explicit Fft(std::size_t n) : n_(n), rev_(n), twiddle_(n / 2) {
    if (n < 2 || (n & (n - 1)) != 0) throw DomainError("Fft: size must be a power of two >= 2");
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < bits; ++b)
        if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
      rev_[i] = r;
    }
    for (std::size_t k = 0; k < n / 2; ++k)
      twiddle_[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / n);
  }

  std::size_t size() const { return n_; }

  void forward(std::span<std::complex<double>> x) const {
    if (x.size() != n_) throw DomainError("Fft: buffer length mismatch");
    for (std::size_t i = 0; i < n_; ++i)
      if (i < rev_[i]) std::swap(x[i], x[rev_[i]]);
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t half = len / 2, step = n_ / len;
      for (std::size_t start = 0; start < n_; start += len) {
        for (std::size_t j = 0; j < half; ++j) {
          const auto t = twiddle_[j * step] * x[start + j + half];
          x[start + j + half] = x[start + j] - t;
          x[start + j] += t;
        }
      }
    }
  }

  /// |X_k|^2 for k = 0..n/2 of a real frame zero-padded to n.
  void power_spectrum(std::span<const double> frame, std::span<double> out,
                      std::vector<std::complex<double>>& scratch) const {
    scratch.assign(n_, {});
    for (std::size_t i = 0; i < frame.size() && i < n_; ++i) scratch[i] = frame[i];
    forward(scratch);
    for (std::size_t k = 0; k <= n_ / 2; ++k) out[k] = std::norm(scratch[k]);
  }

 private:
  std::size_t n_;
  std::vector<std::size_t> rev_;
  std::vector<std::complex<double>> twiddle_;
};

}  // namespace aenet::dsp
