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
#include <iterator>
#include <string>
#include <vector>

#include "aenet/common.hpp"
#include "aenet/nnet/network.hpp"

namespace aenet::nnet {

// AEN1 checkpoint, little-endian:
//   "AEN1"
//   u32 len, arch id bytes
//   u32 class count
//   u32 ndims, ndims x u32 per-sample input shape
//   u32 record count
//   per record: u32 len, name bytes; u32 ndims, ndims x u32; float32 payload
// Records are named "layer<i>.weight" / "layer<i>.bias".

struct ParamRecord {
  std::string name;
  Shape dims;
  std::vector<float> values;
  friend bool operator==(const ParamRecord&, const ParamRecord&) = default;
};

struct CheckpointData {
  std::string arch;
  std::size_t n_classes = 0;
  Shape input_shape;
  std::vector<ParamRecord> params;
  friend bool operator==(const CheckpointData&, const CheckpointData&) = default;
};

namespace detail {

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes.insert(bytes.end(), s.begin(), s.end());
  }
  void shape(const Shape& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    for (auto d : s) u32(static_cast<std::uint32_t>(d));
  }
  void f32(float f) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    u32(u);
  }
  std::vector<unsigned char> bytes;
};

class Reader {
 public:
  Reader(const std::vector<unsigned char>& b, std::size_t pos) : b_(b), pos_(pos) {}
  std::uint32_t u32() {
    need(4);
    const unsigned char* p = b_.data() + pos_;
    pos_ += 4;
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
           std::uint32_t(p[3]) << 24;
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(b_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  b_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  Shape shape() {
    const std::uint32_t n = u32();
    if (n > 16) throw ParseError("AEN1: implausible rank " + std::to_string(n));
    Shape s(n);
    for (auto& d : s) d = u32();
    return s;
  }
  float f32() {
    const std::uint32_t u = u32();
    float f;
    std::memcpy(&f, &u, 4);
    return f;
  }
  bool at_end() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > b_.size()) throw ParseError("AEN1: truncated checkpoint");
  }
  const std::vector<unsigned char>& b_;
  std::size_t pos_ = 0;
};

}  // namespace detail

template <typename T>
CheckpointData to_checkpoint(const Network<T>& net) {
  CheckpointData c;
  c.arch = net.arch;
  c.n_classes = net.n_classes;
  c.input_shape = net.input_shape;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& l = net.layers[i];
    if (!l.has_params()) continue;
    c.params.push_back({"layer" + std::to_string(i) + ".weight", l.weight.shape(),
                        {l.weight.vec().begin(), l.weight.vec().end()}});
    c.params.push_back({"layer" + std::to_string(i) + ".bias", l.bias.shape(),
                        {l.bias.vec().begin(), l.bias.vec().end()}});
  }
  return c;
}

/// Copy checkpoint payloads into a network of identical structure.
template <typename T>
void assign_parameters(Network<T>& net, const CheckpointData& c) {
  if (c.input_shape != net.input_shape || c.n_classes != net.n_classes)
    throw ShapeError("checkpoint geometry " + shape_str(c.input_shape) + "/" +
                     std::to_string(c.n_classes) + " does not match network " +
                     shape_str(net.input_shape) + "/" + std::to_string(net.n_classes));
  std::size_t r = 0;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    auto& l = net.layers[i];
    if (!l.has_params()) continue;
    for (Tensor<T>* t : {&l.weight, &l.bias}) {
      if (r >= c.params.size()) throw ShapeError("checkpoint has too few parameter records");
      const auto& rec = c.params[r++];
      if (rec.dims != t->shape())
        throw ShapeError("checkpoint record " + rec.name + " has shape " + shape_str(rec.dims) +
                         ", network expects " + shape_str(t->shape()));
      std::copy(rec.values.begin(), rec.values.end(), t->vec().begin());
    }
  }
  if (r != c.params.size()) throw ShapeError("checkpoint has extra parameter records");
}

inline std::vector<unsigned char> encode_checkpoint(const CheckpointData& c) {
  detail::Writer w;
  w.bytes = {'A', 'E', 'N', '1'};
  w.str(c.arch);
  w.u32(static_cast<std::uint32_t>(c.n_classes));
  w.shape(c.input_shape);
  w.u32(static_cast<std::uint32_t>(c.params.size()));
  for (const auto& p : c.params) {
    w.str(p.name);
    w.shape(p.dims);
    for (float f : p.values) w.f32(f);
  }
  return std::move(w.bytes);
}

inline CheckpointData decode_checkpoint(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "AEN1", 4) != 0)
    throw FormatError("AEN1: bad magic");
  detail::Reader r(bytes, 4);
  CheckpointData c;
  c.arch = r.str();
  c.n_classes = r.u32();
  c.input_shape = r.shape();
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    ParamRecord p;
    p.name = r.str();
    p.dims = r.shape();
    p.values.resize(shape_size(p.dims));
    for (auto& v : p.values) v = r.f32();
    c.params.push_back(std::move(p));
  }
  if (!r.at_end()) throw ParseError("AEN1: trailing bytes after last record");
  return c;
}

inline void save_checkpoint(const std::filesystem::path& path, const CheckpointData& c) {
  const auto bytes = encode_checkpoint(c);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline CheckpointData read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  return decode_checkpoint({std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()});
}

}  // namespace aenet::nnet
