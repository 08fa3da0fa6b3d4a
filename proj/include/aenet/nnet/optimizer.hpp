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
#include <limits>
#include <vector>

#include "aenet/common.hpp"
#include "aenet/nnet/network.hpp"

namespace aenet::nnet {

struct OptimizerConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  double l1_rho = 1e-6;
  double decay_factor = 0.5;
  int plateau_patience = 3;
};

/// Momentum buffers and schedule state for one network.
template <typename T>
struct TrainState {
  OptimizerConfig cfg;
  double learning_rate = 0.01;
  Gradients<T> velocity;
  std::uint64_t seed = 0;
  double best_monitored = std::numeric_limits<double>::infinity();
  int epochs_since_best = 0;

  static TrainState create(const Network<T>& net, const OptimizerConfig& cfg, std::uint64_t seed) {
    TrainState s;
    s.cfg = cfg;
    s.learning_rate = cfg.learning_rate;
    s.velocity = Gradients<T>::zeros_like(net);
    s.seed = seed;
    return s;
  }

  /// Halve the learning rate after `patience` epochs without improvement of
  /// the monitored loss. Returns true when a decay happened.
  bool observe_epoch(double monitored_loss) {
    if (monitored_loss < best_monitored) {
      best_monitored = monitored_loss;
      epochs_since_best = 0;
      return false;
    }
    if (++epochs_since_best >= cfg.plateau_patience) {
      learning_rate *= cfg.decay_factor;
      epochs_since_best = 0;
      return true;
    }
    return false;
  }
};

/// v <- mu v - lr g ; w <- w + v
template <typename T>
void sgd_momentum_step(Network<T>& net, TrainState<T>& state, const Gradients<T>& g) {
  if (state.velocity.weight.size() != net.layers.size())
    throw ShapeError("optimizer state does not match network");
  const T mu = static_cast<T>(state.cfg.momentum);
  const T lr = static_cast<T>(state.learning_rate);
  auto update = [&](Tensor<T>& w, Tensor<T>& v, const Tensor<T>& grad) {
    if (w.size() != v.size() || w.size() != grad.size())
      throw ShapeError("optimizer: gradient/parameter shape mismatch");
    for (std::size_t j = 0; j < w.size(); ++j) {
      v[j] = mu * v[j] - lr * grad[j];
      w[j] += v[j];
    }
  };
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    update(net.layers[i].weight, state.velocity.weight[i], g.weight[i]);
    update(net.layers[i].bias, state.velocity.bias[i], g.bias[i]);
  }
}

}  // namespace aenet::nnet
