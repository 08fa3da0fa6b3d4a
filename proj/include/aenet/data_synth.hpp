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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "aenet/augment/manifest.hpp"
#include "aenet/common.hpp"
#include "aenet/dsp/wav.hpp"

namespace aenet::synth {

enum class GeneratorKind { kToneHarmonics, kChirp, kNoiseBurst, kAmNoise, kClickTrain, kSquare, kSurf, kImpulse };

inline const char* kind_name(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::kToneHarmonics: return "tone";
    case GeneratorKind::kChirp: return "chirp";
    case GeneratorKind::kNoiseBurst: return "noise_burst";
    case GeneratorKind::kAmNoise: return "am_noise";
    case GeneratorKind::kClickTrain: return "click_train";
    case GeneratorKind::kSquare: return "square";
    case GeneratorKind::kSurf: return "surf";
    case GeneratorKind::kImpulse: return "impulse";
  }
  return "?";
}

/// One synthetic event class. `lo`/`hi` bound the kind's main frequency
/// parameter (f0, sweep start, click rate, cutoff ...).
struct EventClassDef {
  int id = 0;
  GeneratorKind kind = GeneratorKind::kToneHarmonics;
  double lo = 0.0, hi = 0.0;
  double min_sec = 3.0, max_sec = 8.0;          // clip duration
  double min_cover = 0.6, max_cover = 0.95;     // event share of the clip
  double min_snr_db = 20.0, max_snr_db = 30.0;  // event vs background
};

inline std::vector<EventClassDef> default_classes() {
  using K = GeneratorKind;
  const std::vector<std::pair<K, std::pair<double, double>>> kinds = {
      {K::kToneHarmonics, {200, 400}}, {K::kChirp, {500, 1000}},  {K::kNoiseBurst, {1.5, 3.0}},
      {K::kAmNoise, {4, 8}},           {K::kClickTrain, {10, 30}}, {K::kSquare, {1000, 1500}},
      {K::kSurf, {0.25, 0.5}},         {K::kImpulse, {1, 3}}};
  std::vector<EventClassDef> out;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    EventClassDef c;
    c.id = static_cast<int>(i);
    c.kind = kinds[i].first;
    c.lo = kinds[i].second.first;
    c.hi = kinds[i].second.second;
    out.push_back(c);
  }
  return out;
}

namespace detail {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::vector<double> white(std::size_t n, Rng& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> x(n);
  for (double& v : x) v = d(rng);
  return x;
}

// One-pole low-pass, cutoff in Hz.
inline std::vector<double> lowpass(std::vector<double> x, double cutoff, double fs) {
  const double a = 1.0 - std::exp(-kTwoPi * cutoff / fs);
  double y = 0.0;
  for (double& v : x) v = (y += a * (v - y));
  return x;
}

inline std::vector<double> highpass(const std::vector<double>& x, double cutoff, double fs) {
  // Two cascaded one-pole sections for a steeper skirt.
  auto lp = lowpass(lowpass(x, cutoff, fs), cutoff, fs);
  for (std::size_t i = 0; i < lp.size(); ++i) lp[i] = x[i] - lp[i];
  return lp;
}

inline double rms(const std::vector<double>& x, std::size_t begin, std::size_t end) {
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += x[i] * x[i];
  return end > begin ? std::sqrt(s / static_cast<double>(end - begin)) : 0.0;
}

// Short fade so events do not start or stop with a step.
inline void fade(std::vector<double>& x, std::size_t ramp) {
  ramp = std::min(ramp, x.size() / 2);
  for (std::size_t i = 0; i < ramp; ++i) {
    const double g = static_cast<double>(i) / static_cast<double>(ramp);
    x[i] *= g;
    x[x.size() - 1 - i] *= g;
  }
}

}  // namespace detail

/// Event waveform of `n` samples for class `c`, before background is added.
inline std::vector<double> generate_event(const EventClassDef& c, std::size_t n, double fs, Rng& rng) {
  using namespace detail;
  std::vector<double> x(n, 0.0);
  const double p = uniform(rng, c.lo, c.hi);
  switch (c.kind) {
    case GeneratorKind::kToneHarmonics: {
      const double phase = uniform(rng, 0.0, kTwoPi);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        x[i] = std::sin(kTwoPi * p * t + phase) + 0.5 * std::sin(kTwoPi * 2 * p * t) +
               0.25 * std::sin(kTwoPi * 3 * p * t);
      }
      break;
    }
    case GeneratorKind::kChirp: {
      const double f1 = uniform(rng, 2500.0, 4000.0);
      const double dur = static_cast<double>(n) / fs;
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        x[i] = std::sin(kTwoPi * (p * t + 0.5 * (f1 - p) / dur * t * t));
      }
      break;
    }
    case GeneratorKind::kNoiseBurst: {
      // p bursts per second, each 50-200 ms with an exponential tail
      const auto noise = white(n, rng);
      double t = uniform(rng, 0.0, 1.0 / p);
      while (t * fs < static_cast<double>(n)) {
        const double len = uniform(rng, 0.05, 0.2);
        const auto b = static_cast<std::size_t>(t * fs);
        const auto e = std::min(n, b + static_cast<std::size_t>(len * fs));
        for (std::size_t i = b; i < e; ++i) x[i] = noise[i] * std::exp(-3.0 * static_cast<double>(i - b) / (len * fs));
        t += 1.0 / p * uniform(rng, 0.7, 1.3);
      }
      break;
    }
    case GeneratorKind::kAmNoise: {
      const auto noise = lowpass(lowpass(white(n, rng), uniform(rng, 500, 900), fs), 900, fs);
      const double phase = uniform(rng, 0.0, kTwoPi);
      for (std::size_t i = 0; i < n; ++i)
        x[i] = noise[i] * (0.5 + 0.5 * std::sin(kTwoPi * p * static_cast<double>(i) / fs + phase));
      break;
    }
    case GeneratorKind::kClickTrain: {
      const double ring = uniform(rng, 2000.0, 3000.0);
      const auto period = static_cast<std::size_t>(fs / p);
      for (std::size_t b = static_cast<std::size_t>(uniform(rng, 0.0, static_cast<double>(period))); b < n; b += period)
        for (std::size_t i = b; i < std::min(n, b + 80); ++i) {
          const double t = static_cast<double>(i - b) / fs;
          x[i] += std::exp(-t / 0.001) * std::cos(kTwoPi * ring * t);
        }
      break;
    }
    case GeneratorKind::kSquare: {
      const double phase = uniform(rng, 0.0, kTwoPi);
      for (std::size_t i = 0; i < n; ++i)
        x[i] = std::sin(kTwoPi * p * static_cast<double>(i) / fs + phase) >= 0.0 ? 0.5 : -0.5;
      break;
    }
    case GeneratorKind::kSurf: {
      // high-passed noise in slow swells of p Hz
      const auto noise = highpass(white(n, rng), uniform(rng, 2500, 3500), fs);
      const double phase = uniform(rng, 0.0, kTwoPi);
      for (std::size_t i = 0; i < n; ++i) {
        const double s = std::sin(kTwoPi * p * static_cast<double>(i) / fs + phase);
        x[i] = noise[i] * (0.2 + 0.8 * s * s);
      }
      break;
    }
    case GeneratorKind::kImpulse: {
      // p (rounded) short decaying noise hits, the rest stays silent
      const auto count = static_cast<std::size_t>(std::llround(p));
      const auto noise = white(n, rng);
      const auto len = static_cast<std::size_t>(0.03 * fs);
      for (std::size_t k = 0; k < count && n > len; ++k) {
        const auto b = static_cast<std::size_t>(uniform(rng, 0.0, static_cast<double>(n - len)));
        for (std::size_t i = 0; i < len; ++i)
          x[b + i] += noise[b + i] * std::exp(-static_cast<double>(i) / (0.005 * fs));
      }
      return x;
    }
  }
  detail::fade(x, static_cast<std::size_t>(0.01 * fs));
  return x;
}

/// Background-only audio of `n` samples at the given RMS.
inline std::vector<double> background(std::size_t n, double level_rms, double fs, Rng& rng) {
  auto b = detail::lowpass(detail::white(n, rng), 4000.0, fs);
  const double r = detail::rms(b, 0, b.size());
  for (double& v : b) v *= r > 0.0 ? level_rms / r : 0.0;
  return b;
}

/// One clip: background noise with the class event embedded at a random
/// onset, peak-scaled to 0.9.
inline dsp::Waveform synth_clip(const EventClassDef& c, Rng& rng, int rate = dsp::kStandardRate) {
  const double fs = rate;
  const double dur = detail::uniform(rng, c.min_sec, c.max_sec);
  const auto n = static_cast<std::size_t>(std::llround(dur * fs));
  const auto ev_len = static_cast<std::size_t>(std::llround(detail::uniform(rng, c.min_cover, c.max_cover) * static_cast<double>(n)));
  const auto onset = static_cast<std::size_t>(detail::uniform(rng, 0.0, static_cast<double>(n - ev_len)));
  const double snr = detail::uniform(rng, c.min_snr_db, c.max_snr_db);
  const auto ev = generate_event(c, ev_len, fs, rng);
  double ev_rms = detail::rms(ev, 0, ev.size());
  if (c.kind == GeneratorKind::kImpulse) ev_rms = std::max(ev_rms, 1e-3) * 10.0;  // sparse: judge level by the hits
  auto x = background(n, ev_rms / std::pow(10.0, snr / 20.0), fs, rng);
  for (std::size_t i = 0; i < ev_len; ++i) x[onset + i] += ev[i];
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  if (peak > 0.0)
    for (double& v : x) v *= 0.9 / peak;
  return {std::move(x), rate};
}

/// Writes clips/<clip_id>.wav under `dir` and returns the manifest (paths
/// relative to `dir`). Clip k of class c uses its own derived seed.
inline Manifest synth_corpus(const std::filesystem::path& dir, const std::vector<EventClassDef>& classes,
                                      std::size_t clips_per_class, std::uint64_t seed) {
  if (clips_per_class < 2) throw DomainError("synth_corpus: need at least 2 clips per class");
  if (classes.empty()) throw DomainError("synth_corpus: no classes");
  std::filesystem::create_directories(dir / "clips");
  Manifest m;
  m.base_dir = dir;
  for (const auto& c : classes) {
    if (!(c.lo <= c.hi) || !(c.min_sec <= c.max_sec) || c.min_sec <= 0.0)
      throw DomainError("synth_corpus: empty parameter range for class " + std::to_string(c.id));
    for (std::size_t k = 0; k < clips_per_class; ++k) {
      Rng rng(derive_seed(seed, "synth.class" + std::to_string(c.id), k));
      char id[48];
      std::snprintf(id, sizeof id, "c%02d_%04zu", c.id, k);
      ClipRecord r;
      r.clip_id = id;
      r.path = "clips/" + r.clip_id + ".wav";
      r.class_id = c.id;
      r.params.set("kind", kind_name(c.kind));
      dsp::write_wav16(dir / r.path, synth_clip(c, rng));
      m.records.push_back(std::move(r));
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Highlight set: "videos" are audio streams cut into equal moments.

struct HighlightSynthConfig {
  std::size_t videos = 20;
  std::size_t moments_per_video = 8;
  double positive_rate = 0.25;
  double moment_sec = 3.0;
  /// Event class designated as the highlight sound.
  EventClassDef event = default_classes()[0];
  double background_rms = 0.01;
  std::uint64_t seed = 0;
};

struct Segment {
  std::string video_id;
  std::size_t moment_id = 0;
  int label = 0;  // 1 = highlight
  double t_start = 0.0, t_end = 0.0;
  std::string path;  // video audio, relative to the segments file
  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Segments file: video_id, moment_id, label, t_start, t_end, path (tab-separated).
inline std::string segments_to_string(const std::vector<Segment>& segs) {
  std::string out;
  for (const auto& s : segs)
    out += s.video_id + '\t' + std::to_string(s.moment_id) + '\t' + std::to_string(s.label) + '\t' +
           format_double(s.t_start) + '\t' + format_double(s.t_end) + '\t' + s.path + '\n';
  return out;
}

inline std::vector<Segment> parse_segments(std::string_view text) {
  std::vector<Segment> out;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string_view> f;
    for (std::size_t p = 0;;) {
      const std::size_t tab = line.find('\t', p);
      f.push_back(line.substr(p, tab == std::string_view::npos ? std::string_view::npos : tab - p));
      if (tab == std::string_view::npos) break;
      p = tab + 1;
    }
    if (f.size() != 6) throw ParseError("segments line " + std::to_string(line_no) + ": expected 6 fields");
    out.push_back({std::string(f[0]), static_cast<std::size_t>(parse_int(f[1])), static_cast<int>(parse_int(f[2])),
                   parse_double(f[3]), parse_double(f[4]), std::string(f[5])});
  }
  return out;
}

inline std::vector<Segment> load_segments(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open segments file " + p.string());
  return parse_segments(std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()));
}

/// Writes videos/<video_id>.wav and segments.tsv under `dir`. Every video has
/// round(positive_rate * moments) positive moments (at least one) holding the
/// designated event over background; the other moments hold background only.
inline std::vector<Segment> synth_highlight_set(const std::filesystem::path& dir, const HighlightSynthConfig& cfg) {
  if (!(cfg.positive_rate > 0.0 && cfg.positive_rate < 1.0))
    throw DomainError("synth_highlight_set: positive_rate must lie in (0, 1)");
  if (cfg.moments_per_video < 2 || cfg.videos == 0) throw DomainError("synth_highlight_set: need videos with >= 2 moments");
  const double fs = dsp::kStandardRate;
  const auto moment_len = static_cast<std::size_t>(std::llround(cfg.moment_sec * fs));
  const std::size_t n_pos = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(cfg.positive_rate * static_cast<double>(cfg.moments_per_video))), 1,
      cfg.moments_per_video - 1);
  std::filesystem::create_directories(dir / "videos");
  std::vector<Segment> segs;
  for (std::size_t v = 0; v < cfg.videos; ++v) {
    Rng rng(derive_seed(cfg.seed, "synth.highlight", v));
    char vid[32];
    std::snprintf(vid, sizeof vid, "v%03zu", v);
    std::vector<int> labels(cfg.moments_per_video, 0);
    std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_pos), 1);
    std::shuffle(labels.begin(), labels.end(), rng);
    auto audio = background(moment_len * cfg.moments_per_video, cfg.background_rms, fs, rng);
    const std::string path = std::string("videos/") + vid + ".wav";
    for (std::size_t m = 0; m < cfg.moments_per_video; ++m) {
      if (labels[m]) {
        const auto ev_len = static_cast<std::size_t>(
            std::llround(detail::uniform(rng, cfg.event.min_cover, cfg.event.max_cover) * static_cast<double>(moment_len)));
        const auto onset = static_cast<std::size_t>(detail::uniform(rng, 0.0, static_cast<double>(moment_len - ev_len)));
        auto ev = generate_event(cfg.event, ev_len, fs, rng);
        const double snr = detail::uniform(rng, cfg.event.min_snr_db, cfg.event.max_snr_db);
        const double r = detail::rms(ev, 0, ev.size());
        const double gain = r > 0.0 ? cfg.background_rms * std::pow(10.0, snr / 20.0) / r : 0.0;
        for (std::size_t i = 0; i < ev_len; ++i) audio[m * moment_len + onset + i] += gain * ev[i];
      }
      segs.push_back({vid, m, labels[m], static_cast<double>(m) * cfg.moment_sec,
                      static_cast<double>(m + 1) * cfg.moment_sec, path});
    }
    double peak = 0.0;
    for (double s : audio) peak = std::max(peak, std::abs(s));
    for (double& s : audio) s *= 0.9 / peak;
    dsp::write_wav16(dir / path, {std::move(audio), dsp::kStandardRate});
  }
  std::ofstream out(dir / "segments.tsv", std::ios::binary);
  if (!out) throw IoError("cannot write " + (dir / "segments.tsv").string());
  out << segments_to_string(segs);
  return segs;
}

}  // namespace aenet::synth
