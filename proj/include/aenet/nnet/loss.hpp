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
#include <span>
#include <vector>

#include "aenet/common.hpp"
#include "aenet/nnet/network.hpp"

namespace aenet::nnet {

inline constexpr double kProbEpsilon = 1e-12;
inline constexpr double kDefaultL1Rho = 1e-6;

/// Softmax of one row, max-shifted.
template <typename T>
std::vector<T> softmax(std::span<const T> logits) {
  std::vector<T> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const T mx = *std::max_element(p.begin(), p.end());
  T sum{0};
  for (auto& v : p) sum += (v = std::exp(v - mx));
  for (auto& v : p) v /= sum;
  return p;
}

template <typename T>
T l1_norm(const Network<T>& net) {
  T s{0};
  for (const auto& l : net.layers) {
    for (T w : l.weight.vec()) s += std::abs(w);
    for (T b : l.bias.vec()) s += std::abs(b);
  }
  return s;
}

/// g += rho * sign(w), with sign(0) = 0.
template <typename T>
void add_l1_subgradient(const Network<T>& net, Gradients<T>& g, double rho) {
  if (rho == 0.0) return;
  const T r = static_cast<T>(rho);
  auto sgn = [](T v) { return static_cast<T>((v > T{0}) - (v < T{0})); };
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& l = net.layers[i];
    for (std::size_t j = 0; j < l.weight.size(); ++j) g.weight[i][j] += r * sgn(l.weight[j]);
    for (std::size_t j = 0; j < l.bias.size(); ++j) g.bias[i][j] += r * sgn(l.bias[j]);
  }
}

template <typename T>
struct LossResult {
  double loss = 0.0;         // data term + regulariser
  double data_loss = 0.0;    // mean -log p[y]
  double regulariser = 0.0;  // rho * ||W||_1
  Tensor<T> d_probs;         // d(data_loss)/d(input): probabilities, or scores for the logits form
  std::size_t clamped = 0;   // rows where p[y] was below the epsilon clamp
};

/// Mean negative log-likelihood over the batch plus rho * ||W||_1 over every
/// network parameter.
template <typename T>
LossResult<T> cross_entropy_l1(const Tensor<T>& probs, std::span<const int> labels,
                               const Network<T>& net, double rho = kDefaultL1Rho) {
  if (probs.rank() != 2 || probs.dim(0) != labels.size())
    throw ShapeError("cross_entropy: expected (N, K) probabilities for N labels");
  const std::size_t n = probs.dim(0), k = probs.dim(1);
  LossResult<T> r;
  r.d_probs = Tensor<T>(probs.shape());
  for (std::size_t s = 0; s < n; ++s) {
    const int y = labels[s];
    if (y < 0 || static_cast<std::size_t>(y) >= k) throw DomainError("label out of range");
    double p = static_cast<double>(probs.at(s, static_cast<std::size_t>(y)));
    if (p < kProbEpsilon) {
      p = kProbEpsilon;
      ++r.clamped;
    }
    r.data_loss -= std::log(p);
    r.d_probs.at(s, static_cast<std::size_t>(y)) = static_cast<T>(-1.0 / (p * static_cast<double>(n)));
  }
  r.data_loss /= static_cast<double>(n);
  r.regulariser = rho == 0.0 ? 0.0 : rho * static_cast<double>(l1_norm(net));
  r.loss = r.data_loss + r.regulariser;
  return r;
}

/// Same objective evaluated on pre-softmax scores through log-softmax, with
/// the fused gradient (p - onehot) / N. Stays informative when a wrong class
/// saturates the softmax, where the probability-space gradient vanishes.
template <typename T>
LossResult<T> cross_entropy_l1_logits(const Tensor<T>& logits, std::span<const int> labels,
                                      const Network<T>& net, double rho = kDefaultL1Rho) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size())
    throw ShapeError("cross_entropy: expected (N, K) scores for N labels");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  LossResult<T> r;
  r.d_probs = Tensor<T>(logits.shape());
  for (std::size_t s = 0; s < n; ++s) {
    const int y = labels[s];
    if (y < 0 || static_cast<std::size_t>(y) >= k) throw DomainError("label out of range");
    const auto row = logits.row(s);
    const double mx = static_cast<double>(*std::max_element(row.begin(), row.end()));
    double sum = 0.0;
    for (T v : row) sum += std::exp(static_cast<double>(v) - mx);
    const double lse = mx + std::log(sum);
    r.data_loss += lse - static_cast<double>(row[static_cast<std::size_t>(y)]);
    for (std::size_t j = 0; j < k; ++j) {
      const double p = std::exp(static_cast<double>(row[j]) - lse);
      r.d_probs.at(s, j) = static_cast<T>((p - (j == static_cast<std::size_t>(y) ? 1.0 : 0.0)) / static_cast<double>(n));
    }
  }
  r.data_loss /= static_cast<double>(n);
  r.regulariser = rho == 0.0 ? 0.0 : rho * static_cast<double>(l1_norm(net));
  r.loss = r.data_loss + r.regulariser;
  return r;
}

}  // namespace aenet::nnet
