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
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "aenet/common.hpp"
#include "aenet/dsp/filterbank.hpp"
#include "aenet/dsp/patches.hpp"
#include "aenet/dsp/signal.hpp"
#include "aenet/model_zoo.hpp"
#include "aenet/nnet/checkpoint.hpp"
#include "aenet/nnet/network.hpp"

namespace aenet::features {

inline constexpr double kFrameSeconds =
    static_cast<double>(dsp::kFrameShift) / static_cast<double>(dsp::kStandardRate);

template <typename T = float>
struct AenetFeature {
  std::vector<T> vector;  // penultimate FC activation, unit L2 norm (or all zero)
  double t_start = 0.0;
  double t_end = 0.0;
};

/// Scales to unit L2 norm; an all-zero vector stays zero.
template <typename T>
void l2_normalize(std::vector<T>& v) {
  double s = 0.0;
  for (T x : v) s += static_cast<double>(x) * static_cast<double>(x);
  if (s == 0.0) return;
  const double inv = 1.0 / std::sqrt(s);
  for (T& x : v) x = static_cast<T>(static_cast<double>(x) * inv);
}

/// Requires a (3, 50, patch_frames) input network with a penultimate FC layer.
template <typename T>
void check_geometry(const nnet::Network<T>& net, std::size_t patch_frames) {
  const Shape want{dsp::kNumMaps, dsp::kNumBands, patch_frames};
  if (net.input_shape != want)
    throw ShapeError("feature geometry mismatch: network takes " + shape_str(net.input_shape) + ", patches are " +
                     shape_str(want));
  (void)net.penultimate_activation_layer();
}

/// One feature per patch of a (3, 50, T) stream, forward in eval mode.
template <typename T>
std::vector<AenetFeature<T>> extract_stream(const nnet::Network<T>& net, const Tensor<float>& stream,
                                            std::size_t patch_frames = 200, double overlap = 0.5,
                                            std::size_t chunk = 16) {
  check_geometry(net, patch_frames);
  const std::size_t end = net.penultimate_activation_layer() + 1;
  const auto starts = dsp::patch_starts(stream.dim(2), patch_frames, overlap);
  std::vector<AenetFeature<T>> out;
  out.reserve(starts.size());
  for (std::size_t first = 0; first < starts.size(); first += chunk) {
    const std::size_t n = std::min(chunk, starts.size() - first);
    std::vector<Tensor<T>> items;
    for (std::size_t i = first; i < first + n; ++i)
      items.push_back(dsp::model_input(stream, starts[i], patch_frames).template cast<T>());
    const auto c = nnet::forward(net, stack<T>(items), nnet::Mode::kEval, nullptr, end);
    const auto& act = c.output();
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = act.row(i);
      AenetFeature<T> f{{row.begin(), row.end()},
                        static_cast<double>(starts[first + i]) * kFrameSeconds,
                        static_cast<double>(starts[first + i] + patch_frames) * kFrameSeconds};
      l2_normalize(f.vector);
      out.push_back(std::move(f));
    }
  }
  return out;
}

template <typename T>
std::vector<AenetFeature<T>> extract_features(const nnet::Network<T>& net, const dsp::Waveform& w,
                                              std::size_t patch_frames = 200, double overlap = 0.5) {
  check_geometry(net, patch_frames);
  const auto stream = dsp::feature_stream(dsp::log_mel_filterbank(dsp::standardize(w)));
  if (2 * stream.dim(2) < patch_frames)
    throw DomainError("audio of " + std::to_string(stream.dim(2)) + " frames is shorter than half a patch");
  return extract_stream(net, stream, patch_frames, overlap);
}

template <typename T = float>
std::vector<AenetFeature<T>> extract_features(const nnet::CheckpointData& ckpt, const dsp::Waveform& w,
                                              std::size_t patch_frames = 200, double overlap = 0.5) {
  return extract_features(zoo::network_from_checkpoint<T>(ckpt), w, patch_frames, overlap);
}

/// Elementwise mean, left un-normalised.
template <typename T>
std::vector<T> average_clip(const std::vector<AenetFeature<T>>& feats) {
  if (feats.empty()) throw DomainError("average_clip: no features");
  std::vector<double> acc(feats.front().vector.size(), 0.0);
  for (const auto& f : feats) {
    if (f.vector.size() != acc.size()) throw ShapeError("average_clip: feature widths differ");
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += static_cast<double>(f.vector[i]);
  }
  std::vector<T> out(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<T>(acc[i] / static_cast<double>(feats.size()));
  return out;
}

// ---------------------------------------------------------------------------
// Text encoding: each float32 as 8 hex digits of its IEEE bit pattern.

inline std::string to_hex(const std::vector<float>& v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  s.reserve(v.size() * 8);
  for (float f : v) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    for (int k = 7; k >= 0; --k) s += kDigits[(u >> (4 * k)) & 0xF];
  }
  return s;
}

inline std::vector<float> from_hex(std::string_view s) {
  if (s.size() % 8 != 0) throw ParseError("hex vector length " + std::to_string(s.size()) + " is not a multiple of 8");
  std::vector<float> v(s.size() / 8);
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::uint32_t u = 0;
    for (std::size_t k = 0; k < 8; ++k) {
      const char c = s[8 * i + k];
      std::uint32_t d;
      if (c >= '0' && c <= '9') d = static_cast<std::uint32_t>(c - '0');
      else if (c >= 'a' && c <= 'f') d = static_cast<std::uint32_t>(c - 'a' + 10);
      else if (c >= 'A' && c <= 'F') d = static_cast<std::uint32_t>(c - 'A' + 10);
      else throw ParseError(std::string("bad hex digit '") + c + "'");
      u = (u << 4) | d;
    }
    std::memcpy(&v[i], &u, 4);
  }
  return v;
}

// Feature file: clip_id <TAB> t_start <TAB> t_end <TAB> hex vector, one patch per line.
struct FeatureRecord {
  std::string clip_id;
  AenetFeature<float> feature;
};

inline std::string features_to_string(const std::vector<FeatureRecord>& rows) {
  std::string s;
  for (const auto& r : rows)
    s += r.clip_id + "\t" + format_double(r.feature.t_start) + "\t" + format_double(r.feature.t_end) + "\t" +
         to_hex(r.feature.vector) + "\n";
  return s;
}

inline std::vector<FeatureRecord> parse_features(std::string_view text) {
  std::vector<FeatureRecord> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0, width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t pos = 0;
    for (std::size_t tab; (tab = line.find('\t', pos)) != std::string::npos; pos = tab + 1)
      f.push_back(line.substr(pos, tab - pos));
    f.push_back(line.substr(pos));
    if (f.size() != 4) throw ParseError("feature line " + std::to_string(lineno) + ": expected 4 fields");
    FeatureRecord r{f[0], {from_hex(f[3]), parse_double(f[1]), parse_double(f[2])}};
    if (out.empty()) width = r.feature.vector.size();
    if (r.feature.vector.size() != width)
      throw ParseError("feature line " + std::to_string(lineno) + ": vector width differs");
    out.push_back(std::move(r));
  }
  return out;
}

inline void save_features(const std::filesystem::path& path, const std::vector<FeatureRecord>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << features_to_string(rows);
}

inline std::vector<FeatureRecord> load_features(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_features(ss.str());
}

}  // namespace aenet::features
