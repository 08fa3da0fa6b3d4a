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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aenet/common.hpp"
#include "aenet/dsp/filterbank.hpp"
#include "aenet/dsp/patches.hpp"
#include "aenet/nnet/checkpoint.hpp"
#include "aenet/nnet/network.hpp"

namespace aenet::zoo {

/// One block of an architecture description. Convolutions are 3x3 and carry a
/// ReLU; fully connected hidden blocks carry ReLU and dropout; the final
/// n_classes-way classifier and softmax are appended by build().
struct BlockSpec {
  enum class Kind { kConv, kPool, kFc };
  Kind kind = Kind::kConv;
  std::size_t width = 0;           // conv output maps / fc units
  std::size_t pool_time = 1, pool_freq = 1;
  friend bool operator==(const BlockSpec&, const BlockSpec&) = default;
};

struct ArchSpec {
  std::string id;  // "A", "B", "A-mini" or a block string
  std::vector<BlockSpec> blocks;
  Shape input_shape;
  std::size_t n_classes = 0;
  double keep_prob = 0.5;
};

inline BlockSpec conv(std::size_t w) { return {BlockSpec::Kind::kConv, w, 1, 1}; }
inline BlockSpec pool(std::size_t t, std::size_t f) { return {BlockSpec::Kind::kPool, 0, t, f}; }
inline BlockSpec fc(std::size_t w) { return {BlockSpec::Kind::kFc, w, 1, 1}; }

/// Block string form: "conv:64,conv:64,pool:1x2,fc:1024" (pools time x frequency).
inline std::string blocks_to_string(const std::vector<BlockSpec>& blocks) {
  std::string s;
  for (const auto& b : blocks) {
    if (!s.empty()) s += ',';
    switch (b.kind) {
      case BlockSpec::Kind::kConv: s += "conv:" + std::to_string(b.width); break;
      case BlockSpec::Kind::kFc: s += "fc:" + std::to_string(b.width); break;
      case BlockSpec::Kind::kPool:
        s += "pool:" + std::to_string(b.pool_time) + "x" + std::to_string(b.pool_freq);
        break;
    }
  }
  return s;
}

inline std::vector<BlockSpec> parse_blocks(std::string_view s) {
  std::vector<BlockSpec> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const std::size_t comma = std::min(s.find(',', pos), s.size());
    const std::string_view item = s.substr(pos, comma - pos);
    pos = comma + 1;
    const std::size_t colon = item.find(':');
    if (colon == std::string_view::npos)
      throw DomainError("architecture block '" + std::string(item) + "' lacks ':'");
    const std::string_view kind = item.substr(0, colon), arg = item.substr(colon + 1);
    if (kind == "conv") {
      out.push_back(conv(static_cast<std::size_t>(parse_int(arg))));
    } else if (kind == "fc") {
      out.push_back(fc(static_cast<std::size_t>(parse_int(arg))));
    } else if (kind == "pool") {
      const std::size_t x = arg.find('x');
      if (x == std::string_view::npos) throw DomainError("pool block needs TxF, got '" + std::string(arg) + "'");
      out.push_back(pool(static_cast<std::size_t>(parse_int(arg.substr(0, x))),
                         static_cast<std::size_t>(parse_int(arg.substr(x + 1)))));
    } else {
      throw DomainError("unknown architecture block kind '" + std::string(kind) + "'");
    }
    if (out.back().kind != BlockSpec::Kind::kPool && out.back().width == 0)
      throw DomainError("architecture block with zero width");
  }
  if (out.empty()) throw DomainError("empty architecture description");
  return out;
}

/// Reserved architectures. Pool sizes are time x frequency.
inline std::vector<BlockSpec> reserved_blocks(std::string_view id) {
  if (id == "A")
    return {conv(64), conv(64), pool(1, 2), conv(128), conv(128), pool(2, 2), fc(1024), fc(1024)};
  if (id == "B")
    return {conv(64),  conv(64),  pool(1, 2), conv(128), conv(128), pool(2, 2),
            conv(256), conv(256), pool(2, 1), fc(2048),  fc(2048)};
  if (id == "A-mini")
    return {conv(16), conv(16), pool(1, 2), conv(32), conv(32), pool(2, 2), fc(128), fc(128)};
  return {};
}

inline bool is_reserved(std::string_view id) { return id == "A" || id == "B" || id == "A-mini"; }

/// Spec for a reserved id or a block string on (3, 50, frames) input.
inline ArchSpec arch_spec(std::string_view id, std::size_t n_classes, std::size_t frames) {
  ArchSpec s;
  s.id = std::string(id);
  s.blocks = is_reserved(id) ? reserved_blocks(id) : parse_blocks(id);
  s.input_shape = {dsp::kNumMaps, dsp::kNumBands, frames};
  s.n_classes = n_classes;
  return s;
}

/// Layer chain with shapes checked, parameters allocated (zero-filled).
template <typename T>
nnet::Network<T> build_structure(const ArchSpec& spec) {
  using namespace nnet;
  if (spec.n_classes == 0) throw DomainError("architecture needs at least one class");
  Network<T> net;
  net.arch = spec.id;
  net.input_shape = spec.input_shape;
  net.n_classes = spec.n_classes;
  Shape cur = spec.input_shape;
  auto push = [&](Layer<T> l) {
    cur = layer_output_shape(l, cur, net.layers.size());
    net.layers.push_back(std::move(l));
  };
  bool flat = cur.size() == 1;
  for (const auto& b : spec.blocks) {
    switch (b.kind) {
      case BlockSpec::Kind::kConv:
        if (flat) throw ShapeError("convolution after a fully connected block");
        push(conv3x3<T>(cur[0], b.width));
        push(simple<T>(LayerKind::kRelu));
        break;
      case BlockSpec::Kind::kPool:
        if (flat) throw ShapeError("pooling after a fully connected block");
        push(maxpool<T>(b.pool_time, b.pool_freq));
        break;
      case BlockSpec::Kind::kFc:
        if (!flat) {
          push(simple<T>(LayerKind::kFlatten));
          flat = true;
        }
        push(linear<T>(cur[0], b.width));
        push(simple<T>(LayerKind::kRelu));
        push(dropout<T>(spec.keep_prob));
        break;
    }
  }
  if (!flat) push(simple<T>(LayerKind::kFlatten));
  push(linear<T>(cur[0], spec.n_classes));
  push(simple<T>(LayerKind::kSoftmax));
  return net;
}

/// Built and He-initialised network.
template <typename T>
nnet::Network<T> build(const ArchSpec& spec, std::uint64_t seed) {
  auto net = build_structure<T>(spec);
  nnet::he_init(net, seed);
  return net;
}

template <typename T>
std::size_t param_count(const nnet::Network<T>& net) {
  return net.param_count();
}

/// Parameter total from shape algebra alone, without allocating weights.
inline std::size_t param_count(const ArchSpec& spec) {
  Shape cur = spec.input_shape;
  std::size_t total = 0;
  for (const auto& b : spec.blocks) {
    switch (b.kind) {
      case BlockSpec::Kind::kConv:
        if (cur.size() != 3 || cur[1] < 3 || cur[2] < 3) throw ShapeError("conv block does not fit");
        total += b.width * cur[0] * 9 + b.width;
        cur = {b.width, cur[1] - 2, cur[2] - 2};
        break;
      case BlockSpec::Kind::kPool:
        if (cur.size() != 3 || cur[1] < b.pool_freq || cur[2] < b.pool_time)
          throw ShapeError("pool block does not fit");
        cur = {cur[0], cur[1] / b.pool_freq, cur[2] / b.pool_time};
        break;
      case BlockSpec::Kind::kFc:
        total += shape_size(cur) * b.width + b.width;
        cur = {b.width};
        break;
    }
  }
  return total + shape_size(cur) * spec.n_classes + spec.n_classes;
}

/// Rebuild the network a checkpoint was saved from and load its weights.
template <typename T = float>
nnet::Network<T> network_from_checkpoint(const nnet::CheckpointData& c) {
  if (c.input_shape.size() != 3) throw ShapeError("checkpoint input shape is not (maps, bands, frames)");
  ArchSpec spec = arch_spec(c.arch, c.n_classes, c.input_shape[2]);
  spec.input_shape = c.input_shape;
  auto net = build_structure<T>(spec);
  nnet::assign_parameters(net, c);
  return net;
}

}  // namespace aenet::zoo
