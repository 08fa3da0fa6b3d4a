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
#include <vector>

#include "aenet/common.hpp"
#include "aenet/dsp/filterbank.hpp"
#include "aenet/tensor.hpp"

namespace aenet::dsp {

inline constexpr std::size_t kNumMaps = 3;

/// [3 maps x 50 bands x L frames], map 0 static, 1 delta, 2 delta-delta.
struct FeaturePatch {
  Tensor<float> data;
  std::optional<int> label;
  std::size_t start_frame = 0;
};

namespace detail {

// Regression delta, N = 2, edges replicated.
inline void delta_row(const double* in, double* out, std::size_t n) {
  auto at = [&](std::ptrdiff_t t) {
    return in[std::clamp<std::ptrdiff_t>(t, 0, static_cast<std::ptrdiff_t>(n) - 1)];
  };
  for (std::size_t t = 0; t < n; ++t) {
    const auto i = static_cast<std::ptrdiff_t>(t);
    out[t] = ((at(i + 1) - at(i - 1)) + 2.0 * (at(i + 2) - at(i - 2))) / 10.0;
  }
}

}  // namespace detail

/// Frame features -> [3 x bands x frames] tensor with delta and delta-delta maps.
inline Tensor<double> add_deltas(const FrameFeatures& f) {
  if (f.rank() != 2) throw ShapeError("add_deltas expects a [frames x bands] matrix");
  const std::size_t n = f.dim(0), bands = f.dim(1);
  if (n < 5) throw DomainError("add_deltas needs at least 5 frames (got " + std::to_string(n) + ")");
  Tensor<double> out({kNumMaps, bands, n});
  for (std::size_t b = 0; b < bands; ++b) {
    double* s = &out.at(0, b, 0);
    for (std::size_t t = 0; t < n; ++t) s[t] = f.at(t, b);
    detail::delta_row(s, &out.at(1, b, 0), n);
    detail::delta_row(&out.at(1, b, 0), &out.at(2, b, 0), n);
  }
  return out;
}

/// Convenience: waveform -> full [3 x 50 x T] float feature stream.
inline Tensor<float> feature_stream(const FrameFeatures& f) { return add_deltas(f).cast<float>(); }

/// Start frames of the windows patch_stream would emit.
inline std::vector<std::size_t> patch_starts(std::size_t total, std::size_t length,
                                             double overlap = 0.5) {
  if (length == 0) throw DomainError("patch length must be positive");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw DomainError("overlap must lie in [0, 1)");
  if (total < length && 2 * total < length)
    throw DomainError("stream of " + std::to_string(total) + " frames is too short for " +
                      std::to_string(length) + "-frame patches");
  const auto hop = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(static_cast<double>(length) * (1.0 - overlap))));
  std::vector<std::size_t> starts;
  for (std::size_t s = 0;; s += hop) {
    starts.push_back(s);
    if (s + length >= total) break;
  }
  return starts;
}

/// Copy frames [start, start+length) of a [maps x bands x T] stream, repeating
/// the last frame where the window runs past the end.
template <typename T>
Tensor<float> crop_frames(const Tensor<T>& x, std::size_t start, std::size_t length) {
  const std::size_t maps = x.dim(0), bands = x.dim(1), total = x.dim(2);
  Tensor<float> out({maps, bands, length});
  for (std::size_t m = 0; m < maps; ++m)
    for (std::size_t b = 0; b < bands; ++b) {
      const T* src = &x.at(m, b, 0);
      float* dst = &out.at(m, b, 0);
      for (std::size_t t = 0; t < length; ++t)
        dst[t] = static_cast<float>(src[std::min(start + t, total - 1)]);
    }
  return out;
}

template <typename T>
std::vector<FeaturePatch> patch_stream(const Tensor<T>& x, std::size_t length,
                                       double overlap = 0.5) {
  if (x.rank() != 3) throw ShapeError("patch_stream expects a [maps x bands x frames] tensor");
  std::vector<FeaturePatch> out;
  for (std::size_t s : patch_starts(x.dim(2), length, overlap))
    out.push_back({crop_frames(x, s, length), std::nullopt, s});
  return out;
}

/// Network input conditioning: each map of a [maps x bands x frames] patch is
/// shifted to zero mean and scaled to unit variance (maps with no spread are
/// only centred). Depends on the patch alone, so features stay local.
inline Tensor<float> standardize_maps(Tensor<float> x) {
  if (x.rank() != 3) throw ShapeError("standardize_maps expects a [maps x bands x frames] patch");
  const std::size_t plane = x.dim(1) * x.dim(2);
  for (std::size_t m = 0; m < x.dim(0); ++m) {
    float* p = x.data() + m * plane;
    double mean = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < plane; ++i) mean += p[i];
    mean /= static_cast<double>(plane);
    for (std::size_t i = 0; i < plane; ++i) sq += (p[i] - mean) * (p[i] - mean);
    const double sd = std::sqrt(sq / static_cast<double>(plane));
    const double scale = sd > 1e-6 ? 1.0 / sd : 1.0;
    for (std::size_t i = 0; i < plane; ++i) p[i] = static_cast<float>((p[i] - mean) * scale);
  }
  return x;
}

/// The patch as the network sees it: cropped, padded and standardised.
template <typename T>
Tensor<float> model_input(const Tensor<T>& stream, std::size_t start, std::size_t length) {
  return standardize_maps(crop_frames(stream, start, length));
}

}  // namespace aenet::dsp
