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
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "aenet/common.hpp"
#include "aenet/nnet/gemm.hpp"
#include "aenet/tensor.hpp"

namespace aenet::nnet {

enum class LayerKind { kConv3x3, kMaxPool, kRelu, kFlatten, kLinear, kDropout, kSoftmax };

inline const char* kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::kConv3x3: return "conv3x3";
    case LayerKind::kMaxPool: return "maxpool";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kFlatten: return "flatten";
    case LayerKind::kLinear: return "linear";
    case LayerKind::kDropout: return "dropout";
    case LayerKind::kSoftmax: return "softmax";
  }
  return "?";
}

enum class Mode { kTrain, kEval };

/// One stage of a sequential network. Feature maps are laid out
/// (channels, frequency, time); pooling sizes are given as time x frequency.
template <typename T>
struct Layer {
  LayerKind kind = LayerKind::kRelu;
  std::size_t in_channels = 0, out_channels = 0;  // conv3x3: stride 1, no padding
  std::size_t pool_time = 1, pool_freq = 1;       // maxpool: stride == size
  std::size_t in_features = 0, out_features = 0;  // linear
  double keep_prob = 0.5;                         // dropout
  Tensor<T> weight;  // conv (out, in, 3, 3); linear (out, in)
  Tensor<T> bias;

  bool has_params() const { return kind == LayerKind::kConv3x3 || kind == LayerKind::kLinear; }
  std::size_t param_count() const { return weight.size() + bias.size(); }

  template <typename U>
  Layer<U> cast() const {
    Layer<U> l;
    l.kind = kind;
    l.in_channels = in_channels;
    l.out_channels = out_channels;
    l.pool_time = pool_time;
    l.pool_freq = pool_freq;
    l.in_features = in_features;
    l.out_features = out_features;
    l.keep_prob = keep_prob;
    l.weight = weight.template cast<U>();
    l.bias = bias.template cast<U>();
    return l;
  }
};

template <typename T>
Layer<T> conv3x3(std::size_t in, std::size_t out) {
  Layer<T> l;
  l.kind = LayerKind::kConv3x3;
  l.in_channels = in;
  l.out_channels = out;
  l.weight = Tensor<T>({out, in, 3, 3});
  l.bias = Tensor<T>({out});
  return l;
}
template <typename T>
Layer<T> maxpool(std::size_t time, std::size_t freq) {
  Layer<T> l;
  l.kind = LayerKind::kMaxPool;
  l.pool_time = time;
  l.pool_freq = freq;
  return l;
}
template <typename T>
Layer<T> linear(std::size_t in, std::size_t out) {
  Layer<T> l;
  l.kind = LayerKind::kLinear;
  l.in_features = in;
  l.out_features = out;
  l.weight = Tensor<T>({out, in});
  l.bias = Tensor<T>({out});
  return l;
}
template <typename T>
Layer<T> simple(LayerKind kind) {
  Layer<T> l;
  l.kind = kind;
  return l;
}
template <typename T>
Layer<T> dropout(double keep = 0.5) {
  Layer<T> l;
  l.kind = LayerKind::kDropout;
  l.keep_prob = keep;
  return l;
}

/// Sequential chain of layers plus the per-sample input geometry.
template <typename T>
struct Network {
  std::string arch;
  Shape input_shape;  // per sample, e.g. (3, 50, 200)
  std::size_t n_classes = 0;
  std::vector<Layer<T>> layers;

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.param_count();
    return n;
  }

  template <typename U>
  Network<U> cast() const {
    Network<U> out;
    out.arch = arch;
    out.input_shape = input_shape;
    out.n_classes = n_classes;
    for (const auto& l : layers) out.layers.push_back(l.template cast<U>());
    return out;
  }

  /// Index of the last layer whose output is the penultimate fully connected
  /// activation (after its ReLU). Throws if the chain has < 2 linear layers.
  std::size_t penultimate_activation_layer() const {
    std::vector<std::size_t> lin;
    for (std::size_t i = 0; i < layers.size(); ++i)
      if (layers[i].kind == LayerKind::kLinear) lin.push_back(i);
    if (lin.size() < 2) throw ShapeError("network has fewer than two fully connected layers");
    std::size_t i = lin[lin.size() - 2];
    if (i + 1 < layers.size() && layers[i + 1].kind == LayerKind::kRelu) ++i;
    return i;
  }
};

/// Per-sample output shape of one layer, or ShapeError naming the layer.
template <typename T>
Shape layer_output_shape(const Layer<T>& l, const Shape& in, std::size_t index) {
  auto fail = [&](const std::string& why) {
    return ShapeError("layer " + std::to_string(index) + " (" + kind_name(l.kind) + "): " + why +
                      ", input " + shape_str(in));
  };
  switch (l.kind) {
    case LayerKind::kConv3x3:
      if (in.size() != 3 || in[0] != l.in_channels) throw fail("expects (C_in, F, T)");
      if (in[1] < 3 || in[2] < 3) throw fail("map smaller than the 3x3 kernel");
      return {l.out_channels, in[1] - 2, in[2] - 2};
    case LayerKind::kMaxPool:
      if (in.size() != 3) throw fail("expects (C, F, T)");
      if (in[1] < l.pool_freq || in[2] < l.pool_time) throw fail("map smaller than pool");
      return {in[0], in[1] / l.pool_freq, in[2] / l.pool_time};
    case LayerKind::kFlatten:
      return {shape_size(in)};
    case LayerKind::kLinear:
      if (in.size() != 1 || in[0] != l.in_features) throw fail("expects a flat vector of " +
                                                           std::to_string(l.in_features));
      return {l.out_features};
    case LayerKind::kSoftmax:
      if (in.size() != 1) throw fail("expects a flat vector");
      return in;
    case LayerKind::kRelu:
    case LayerKind::kDropout:
      return in;
  }
  return in;
}

template <typename T>
Shape output_shape(const Network<T>& net, std::size_t end = std::numeric_limits<std::size_t>::max()) {
  Shape s = net.input_shape;
  end = std::min(end, net.layers.size());
  for (std::size_t i = 0; i < end; ++i) s = layer_output_shape(net.layers[i], s, i);
  return s;
}

/// Zero-mean Gaussian weights with std sqrt(2 / fan_in); zero biases.
template <typename T>
void he_init(Network<T>& net, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& l : net.layers) {
    if (!l.has_params()) continue;
    const double fan_in = l.kind == LayerKind::kConv3x3 ? 9.0 * l.in_channels : 1.0 * l.in_features;
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
    for (auto& w : l.weight.vec()) w = static_cast<T>(dist(rng));
    l.bias.fill(T{0});
  }
}

/// Activations recorded by forward(); acts[i] is the input of layer i and
/// acts.back() the output of the last layer evaluated.
template <typename T>
struct ForwardCache {
  std::vector<Tensor<T>> acts;
  std::vector<Tensor<T>> masks;                      // dropout, per layer
  std::vector<std::vector<std::uint32_t>> argmax;    // maxpool, per layer
  const Tensor<T>& output() const { return acts.back(); }
  std::size_t layers_run() const { return acts.size() - 1; }
};

/// Parameter gradients, one (weight, bias) pair per layer; empty for
/// parameter-free layers.
template <typename T>
struct Gradients {
  std::vector<Tensor<T>> weight;
  std::vector<Tensor<T>> bias;
  Tensor<T> input;  // filled when requested

  static Gradients zeros_like(const Network<T>& net) {
    Gradients g;
    for (const auto& l : net.layers) {
      g.weight.push_back(l.has_params() ? Tensor<T>(l.weight.shape()) : Tensor<T>());
      g.bias.push_back(l.has_params() ? Tensor<T>(l.bias.shape()) : Tensor<T>());
    }
    return g;
  }
  void add(const Gradients& o) {
    for (std::size_t i = 0; i < weight.size(); ++i) {
      for (std::size_t j = 0; j < weight[i].size(); ++j) weight[i][j] += o.weight[i][j];
      for (std::size_t j = 0; j < bias[i].size(); ++j) bias[i][j] += o.bias[i][j];
    }
  }
  void scale(T s) {
    for (auto& t : weight)
      for (auto& v : t.vec()) v *= s;
    for (auto& t : bias)
      for (auto& v : t.vec()) v *= s;
  }
  bool all_finite() const {
    for (const auto& t : weight)
      if (!t.all_finite()) return false;
    for (const auto& t : bias)
      if (!t.all_finite()) return false;
    return true;
  }
};

namespace detail {

// cols (C*9, Ho*Wo) from one (C, H, W) sample.
template <typename T>
void im2col(const T* in, std::size_t c, std::size_t h, std::size_t w, T* cols) {
  const std::size_t ho = h - 2, wo = w - 2;
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t ky = 0; ky < 3; ++ky)
      for (std::size_t kx = 0; kx < 3; ++kx) {
        T* row = cols + ((ch * 3 + ky) * 3 + kx) * ho * wo;
        for (std::size_t y = 0; y < ho; ++y)
          std::memcpy(row + y * wo, in + (ch * h + y + ky) * w + kx, wo * sizeof(T));
      }
}

template <typename T>
void col2im_add(const T* cols, std::size_t c, std::size_t h, std::size_t w, T* out) {
  const std::size_t ho = h - 2, wo = w - 2;
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t ky = 0; ky < 3; ++ky)
      for (std::size_t kx = 0; kx < 3; ++kx) {
        const T* row = cols + ((ch * 3 + ky) * 3 + kx) * ho * wo;
        for (std::size_t y = 0; y < ho; ++y) {
          T* dst = out + (ch * h + y + ky) * w + kx;
          const T* src = row + y * wo;
          for (std::size_t x = 0; x < wo; ++x) dst[x] += src[x];
        }
      }
}

template <typename T>
Tensor<T> conv_forward(const Layer<T>& l, const Tensor<T>& x) {
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t ho = h - 2, wo = w - 2, co = l.out_channels;
  Tensor<T> y({n, co, ho, wo});
  std::vector<T> cols(c * 9 * ho * wo);
  for (std::size_t s = 0; s < n; ++s) {
    im2col(x.data() + s * c * h * w, c, h, w, cols.data());
    T* out = y.data() + s * co * ho * wo;
    gemm::nn(l.weight.data(), cols.data(), out, co, c * 9, ho * wo);
    for (std::size_t o = 0; o < co; ++o) {
      const T b = l.bias[o];
      T* row = out + o * ho * wo;
      for (std::size_t i = 0; i < ho * wo; ++i) row[i] += b;
    }
  }
  return y;
}

template <typename T>
void conv_backward(const Layer<T>& l, const Tensor<T>& x, const Tensor<T>& dy, Tensor<T>& dw,
                   Tensor<T>& db, Tensor<T>* dx) {
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t ho = h - 2, wo = w - 2, co = l.out_channels;
  std::vector<T> cols(c * 9 * ho * wo), dcols;
  if (dx) {
    *dx = Tensor<T>(x.shape());
    dcols.resize(cols.size());
  }
  for (std::size_t s = 0; s < n; ++s) {
    const T* g = dy.data() + s * co * ho * wo;
    im2col(x.data() + s * c * h * w, c, h, w, cols.data());
    gemm::nt(g, cols.data(), dw.data(), co, ho * wo, c * 9, true);
    for (std::size_t o = 0; o < co; ++o) {
      T acc{0};
      const T* row = g + o * ho * wo;
      for (std::size_t i = 0; i < ho * wo; ++i) acc += row[i];
      db[o] += acc;
    }
    if (dx) {
      gemm::tn(l.weight.data(), g, dcols.data(), c * 9, co, ho * wo);
      col2im_add(dcols.data(), c, h, w, dx->data() + s * c * h * w);
    }
  }
}

template <typename T>
Tensor<T> pool_forward(const Layer<T>& l, const Tensor<T>& x, std::vector<std::uint32_t>& arg) {
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t ph = l.pool_freq, pw = l.pool_time, ho = h / ph, wo = w / pw;
  Tensor<T> y({n, c, ho, wo});
  arg.resize(y.size());
  std::size_t o = 0;
  for (std::size_t s = 0; s < n * c; ++s) {
    const T* plane = x.data() + s * h * w;
    for (std::size_t i = 0; i < ho; ++i)
      for (std::size_t j = 0; j < wo; ++j, ++o) {
        std::size_t best = (i * ph) * w + j * pw;
        for (std::size_t a = 0; a < ph; ++a)
          for (std::size_t b = 0; b < pw; ++b) {
            const std::size_t idx = (i * ph + a) * w + j * pw + b;
            if (plane[idx] > plane[best]) best = idx;  // first maximum wins ties
          }
        y[o] = plane[best];
        arg[o] = static_cast<std::uint32_t>(best);
      }
  }
  return y;
}

}  // namespace detail

/// Evaluate layers [0, end) on a batch whose leading dimension is the sample
/// index. In train mode dropout draws masks from `rng` (inverted dropout, so
/// eval mode is a pass-through).
template <typename T>
ForwardCache<T> forward(const Network<T>& net, Tensor<T> x, Mode mode, Rng* rng = nullptr,
                        std::size_t end = std::numeric_limits<std::size_t>::max()) {
  end = std::min(end, net.layers.size());
  Shape sample(x.shape().begin() + (x.rank() ? 1 : 0), x.shape().end());
  if (x.rank() < 2 || sample != net.input_shape)
    throw ShapeError("network input: expected (N)" + shape_str(net.input_shape) + ", got " +
                     shape_str(x.shape()));
  const std::size_t n = x.dim(0);
  ForwardCache<T> cache;
  cache.masks.resize(end);
  cache.argmax.resize(end);
  cache.acts.reserve(end + 1);
  cache.acts.push_back(std::move(x));

  for (std::size_t i = 0; i < end; ++i) {
    const Layer<T>& l = net.layers[i];
    const Tensor<T>& in = cache.acts.back();
    const Shape out_sample = layer_output_shape(l, sample, i);
    Shape out_shape{n};
    out_shape.insert(out_shape.end(), out_sample.begin(), out_sample.end());
    Tensor<T> y;
    switch (l.kind) {
      case LayerKind::kConv3x3:
        y = detail::conv_forward(l, in);
        break;
      case LayerKind::kMaxPool:
        y = detail::pool_forward(l, in, cache.argmax[i]);
        break;
      case LayerKind::kRelu:
        y = in;
        for (auto& v : y.vec()) v = v > T{0} ? v : T{0};
        break;
      case LayerKind::kFlatten:
        y = in.reshaped(out_shape);
        break;
      case LayerKind::kLinear: {
        y = Tensor<T>(out_shape);
        gemm::nt(in.data(), l.weight.data(), y.data(), n, l.in_features, l.out_features);
        for (std::size_t s = 0; s < n; ++s)
          for (std::size_t o = 0; o < l.out_features; ++o) y.at(s, o) += l.bias[o];
        break;
      }
      case LayerKind::kDropout:
        y = in;
        if (mode == Mode::kTrain) {
          if (!rng) throw DomainError("dropout in train mode needs a random source");
          Tensor<T> mask(in.shape());
          std::bernoulli_distribution keep(l.keep_prob);
          const T scale = static_cast<T>(1.0 / l.keep_prob);
          for (std::size_t j = 0; j < mask.size(); ++j) {
            mask[j] = keep(*rng) ? scale : T{0};
            y[j] *= mask[j];
          }
          cache.masks[i] = std::move(mask);
        }
        break;
      case LayerKind::kSoftmax: {
        y = in;
        const std::size_t k = out_sample[0];
        for (std::size_t s = 0; s < n; ++s) {
          T* row = y.data() + s * k;
          const T mx = *std::max_element(row, row + k);
          T sum{0};
          for (std::size_t j = 0; j < k; ++j) sum += (row[j] = std::exp(row[j] - mx));
          for (std::size_t j = 0; j < k; ++j) row[j] /= sum;
        }
        break;
      }
    }
    sample = out_sample;
    cache.acts.push_back(std::move(y));
  }
  return cache;
}

/// Back-propagate `d_out` (gradient w.r.t. the last evaluated layer's output)
/// through the cached forward pass. Gradients are summed over the batch.
template <typename T>
Gradients<T> backward(const Network<T>& net, const ForwardCache<T>& cache, Tensor<T> d_out,
                      bool want_input_grad = false) {
  const std::size_t end = cache.layers_run();
  if (d_out.shape() != cache.output().shape())
    throw ShapeError("backward: upstream gradient shape " + shape_str(d_out.shape()) +
                     " does not match output " + shape_str(cache.output().shape()));
  Gradients<T> g = Gradients<T>::zeros_like(net);
  Tensor<T> dy = std::move(d_out);
  for (std::size_t ii = end; ii-- > 0;) {
    const Layer<T>& l = net.layers[ii];
    const Tensor<T>& x = cache.acts[ii];
    const Tensor<T>& y = cache.acts[ii + 1];
    const bool need_dx = ii > 0 || want_input_grad;
    Tensor<T> dx;
    switch (l.kind) {
      case LayerKind::kConv3x3:
        detail::conv_backward(l, x, dy, g.weight[ii], g.bias[ii], need_dx ? &dx : nullptr);
        break;
      case LayerKind::kMaxPool: {
        dx = Tensor<T>(x.shape());
        const std::size_t plane_in = x.dim(2) * x.dim(3), plane_out = y.dim(2) * y.dim(3);
        const auto& arg = cache.argmax[ii];
        for (std::size_t o = 0; o < dy.size(); ++o) dx[(o / plane_out) * plane_in + arg[o]] += dy[o];
        break;
      }
      case LayerKind::kRelu:
        dx = std::move(dy);
        for (std::size_t j = 0; j < dx.size(); ++j)
          if (!(y[j] > T{0})) dx[j] = T{0};
        break;
      case LayerKind::kFlatten:
        dx = std::move(dy).reshaped(x.shape());
        break;
      case LayerKind::kLinear: {
        const std::size_t n = x.dim(0);
        gemm::tn(dy.data(), x.data(), g.weight[ii].data(), l.out_features, n, l.in_features, true);
        for (std::size_t s = 0; s < n; ++s)
          for (std::size_t o = 0; o < l.out_features; ++o) g.bias[ii][o] += dy.at(s, o);
        if (need_dx) {
          dx = Tensor<T>(x.shape());
          gemm::nn(dy.data(), l.weight.data(), dx.data(), n, l.out_features, l.in_features);
        }
        break;
      }
      case LayerKind::kDropout:
        dx = std::move(dy);
        if (!cache.masks[ii].empty())
          for (std::size_t j = 0; j < dx.size(); ++j) dx[j] *= cache.masks[ii][j];
        break;
      case LayerKind::kSoftmax: {
        dx = Tensor<T>(x.shape());
        const std::size_t n = y.dim(0), k = y.dim(1);
        for (std::size_t s = 0; s < n; ++s) {
          T dot{0};
          for (std::size_t j = 0; j < k; ++j) dot += y.at(s, j) * dy.at(s, j);
          for (std::size_t j = 0; j < k; ++j) dx.at(s, j) = y.at(s, j) * (dy.at(s, j) - dot);
        }
        break;
      }
    }
    if (!need_dx) break;
    dy = std::move(dx);
  }
  if (want_input_grad) g.input = std::move(dy);
  return g;
}

}  // namespace aenet::nnet
