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

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "aenet/common.hpp"
#include "aenet/dsp/wav.hpp"
#include "aenet/tensor.hpp"

namespace aenet::dsp {

// AEF1 container: "AEF1", u32 ndims, ndims x u32 dims, then float32 payload in
// row-major order (map-major, band-major, frame-minor for feature streams).
// All integers and floats little-endian.

inline std::vector<unsigned char> encode_tensor(const Tensor<float>& t) {
  std::vector<unsigned char> out{'A', 'E', 'F', '1'};
  detail::put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) detail::put_u32(out, static_cast<std::uint32_t>(d));
  for (float f : t.vec()) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    detail::put_u32(out, u);
  }
  return out;
}

inline Tensor<float> decode_tensor(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 8) throw ParseError("AEF1: truncated header");
  if (std::memcmp(bytes.data(), "AEF1", 4) != 0) throw FormatError("AEF1: bad magic");
  const std::uint32_t nd = detail::read_u32(bytes.data() + 4);
  if (bytes.size() < 8 + 4ull * nd) throw ParseError("AEF1: truncated dims");
  Shape shape(nd);
  for (std::uint32_t i = 0; i < nd; ++i) shape[i] = detail::read_u32(bytes.data() + 8 + 4 * i);
  const std::size_t n = shape_size(shape);
  const std::size_t off = 8 + 4ull * nd;
  if (bytes.size() != off + 4 * n) throw ParseError("AEF1: payload length mismatch");
  std::vector<float> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t u = detail::read_u32(bytes.data() + off + 4 * i);
    std::memcpy(&data[i], &u, 4);
  }
  return Tensor<float>(std::move(shape), std::move(data));
}

inline void write_tensor(const std::filesystem::path& path, const Tensor<float>& t) {
  const auto bytes = encode_tensor(t);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline Tensor<float> read_tensor(const std::filesystem::path& path) {
  return decode_tensor(detail::read_file(path));
}

}  // namespace aenet::dsp
