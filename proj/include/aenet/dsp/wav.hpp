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
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "aenet/common.hpp"

namespace aenet::dsp {

inline constexpr int kStandardRate = 16000;

/// Mono sample buffer. Amplitudes nominally in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = kStandardRate;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
  double peak() const {
    double p = 0.0;
    for (double s : samples) p = std::max(p, std::abs(s));
    return p;
  }
  friend bool operator==(const Waveform&, const Waveform&) = default;
};

namespace detail {

inline std::uint32_t read_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}
inline std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}
inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
inline void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

inline std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace detail

/// Decode a RIFF/WAVE byte image. Integer codes are divided by the positive
/// full scale so a full-scale code reads back as exactly 1.0; the most negative
/// code is clamped to -1.
inline Waveform decode_wav(const std::vector<unsigned char>& bytes) {
  using namespace detail;
  if (bytes.size() < 12) throw ParseError("wav: file shorter than RIFF header");
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw FormatError("wav: not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    const std::uint32_t len = read_u32(hdr + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (len < 16 || body + len > bytes.size()) throw ParseError("wav: truncated fmt chunk");
      format = read_u16(bytes.data() + body);
      channels = read_u16(bytes.data() + body + 2);
      rate = read_u32(bytes.data() + body + 4);
      bits = read_u16(bytes.data() + body + 14);
      if (format == kFormatExtensible) {
        if (len < 40) throw ParseError("wav: truncated WAVE_FORMAT_EXTENSIBLE chunk");
        format = read_u16(bytes.data() + body + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      if (body + len > bytes.size()) throw ParseError("wav: truncated data chunk");
      data = bytes.data() + body;
      data_len = len;
      break;
    }
    pos = body + len + (len & 1u);
  }
  if (!have_fmt) throw ParseError("wav: missing fmt chunk");
  if (data == nullptr) throw ParseError("wav: missing data chunk");
  if (channels < 1 || channels > 2)
    throw FormatError("wav: unsupported channel count " + std::to_string(channels));
  if (rate == 0) throw FormatError("wav: zero sample rate");
  const bool int_ok = format == kFormatPcm && (bits == 8 || bits == 16 || bits == 24);
  const bool float_ok = format == kFormatFloat && bits == 32;
  if (!int_ok && !float_ok)
    throw FormatError("wav: unsupported codec (format " + std::to_string(format) + ", " +
                      std::to_string(bits) + " bits)");

  const std::size_t bytes_per = bits / 8;
  const std::size_t frame_bytes = bytes_per * channels;
  if (data_len % frame_bytes != 0) throw ParseError("wav: data chunk ends mid-frame");
  const std::size_t n = data_len / frame_bytes;

  auto decode = [&](const unsigned char* p) -> double {
    switch (bits) {
      case 8:
        return std::max(-1.0, (static_cast<int>(p[0]) - 128) / 127.0);
      case 16: {
        const auto v = static_cast<std::int16_t>(read_u16(p));
        return std::max(-1.0, v / 32767.0);
      }
      case 24: {
        std::int32_t v = p[0] | p[1] << 8 | p[2] << 16;
        if (v & 0x800000) v -= 0x1000000;
        return std::max(-1.0, v / 8388607.0);
      }
      default: {
        float f;
        std::uint32_t u = read_u32(p);
        std::memcpy(&f, &u, 4);
        if (!std::isfinite(f)) throw FormatError("wav: non-finite float sample");
        return std::clamp(static_cast<double>(f), -1.0, 1.0);
      }
    }
  };

  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* frame = data + i * frame_bytes;
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) acc += decode(frame + c * bytes_per);
    w.samples[i] = acc / channels;
  }
  return w;
}

inline Waveform load_wav(const std::filesystem::path& path) {
  return decode_wav(detail::read_file(path));
}

/// 16-bit PCM mono encoding, round-to-nearest with clipping.
inline std::vector<unsigned char> encode_wav16(const Waveform& w) {
  using namespace detail;
  std::vector<unsigned char> out;
  const auto data_len = static_cast<std::uint32_t>(w.samples.size() * 2);
  out.reserve(44 + data_len);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_len);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_len);
  for (double s : w.samples) {
    const double q = std::round(std::clamp(s, -1.0, 1.0) * 32767.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  return out;
}

inline void write_wav16(const std::filesystem::path& path, const Waveform& w) {
  const auto bytes = encode_wav16(w);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace aenet::dsp
