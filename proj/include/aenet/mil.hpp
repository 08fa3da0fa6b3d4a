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
#include <map>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aenet/common.hpp"
#include "aenet/dsp/patches.hpp"
#include "aenet/nnet/gradcheck.hpp"
#include "aenet/nnet/loss.hpp"
#include "aenet/nnet/network.hpp"
#include "aenet/nnet/optimizer.hpp"

namespace aenet::mil {

enum class Aggregation { kMax, kNoisyOr };

inline std::string to_string(Aggregation a) { return a == Aggregation::kMax ? "max" : "noisy_or"; }

inline Aggregation parse_aggregation(std::string_view s) {
  if (s == "max") return Aggregation::kMax;
  if (s == "noisy_or" || s == "noisy-or") return Aggregation::kNoisyOr;
  throw DomainError("unknown MIL aggregation '" + std::string(s) + "' (max | noisy_or)");
}

/// Scores h(i, j) for class i and instance j, shape (M, N).
template <typename T>
using BagActivation = Tensor<T>;

template <typename T>
void check_activation(const BagActivation<T>& h) {
  if (h.rank() != 2 || h.dim(0) == 0 || h.dim(1) == 0) throw ShapeError("bag activation must be (M, N), non-empty");
  if (!h.all_finite()) throw NumericalError("bag activation is not finite");
}

/// Softmax over classes of the per-class maximum across instances.
template <typename T>
std::vector<T> aggregate_max(const BagActivation<T>& h) {
  check_activation(h);
  const std::size_t m = h.dim(0), n = h.dim(1);
  std::vector<T> top(m);
  for (std::size_t i = 0; i < m; ++i) top[i] = *std::max_element(h.data() + i * n, h.data() + (i + 1) * n);
  return nnet::softmax<T>(top);
}

template <typename T>
struct NoisyOr {
  Tensor<T> instance_probs;  // (M, N), each column a softmax over classes
  std::vector<T> raw;        // 1 - prod_j (1 - p_ij), before renormalisation
  std::vector<T> probs;      // raw / sum(raw)
};

/// Per-instance class posteriors combined as "at least one instance is
/// positive", then renormalised across classes.
template <typename T>
NoisyOr<T> noisy_or(const BagActivation<T>& h) {
  check_activation(h);
  const std::size_t m = h.dim(0), n = h.dim(1);
  NoisyOr<T> r;
  r.instance_probs = Tensor<T>({m, n});
  std::vector<T> col(m);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) col[i] = h.at(i, j);
    const auto p = nnet::softmax<T>(col);
    for (std::size_t i = 0; i < m; ++i) r.instance_probs.at(i, j) = p[i];
  }
  r.raw.assign(m, T{0});
  T sum{0};
  for (std::size_t i = 0; i < m; ++i) {
    // 1 - prod(1 - p) without cancellation when every p is small
    T log_miss{0};
    for (std::size_t j = 0; j < n; ++j) log_miss += std::log1p(-r.instance_probs.at(i, j));
    sum += (r.raw[i] = -std::expm1(log_miss));
  }
  r.probs = r.raw;
  for (auto& v : r.probs) v /= sum;
  return r;
}

template <typename T>
std::vector<T> aggregate_noisy_or(const BagActivation<T>& h) {
  return noisy_or(h).probs;
}

template <typename T>
struct BagLoss {
  double loss = 0.0;
  Tensor<T> d_h;  // (M, N)
};

/// -log p[label] of the aggregated distribution and its gradient w.r.t. h.
/// Max aggregation routes the gradient to the first maximising instance.
template <typename T>
BagLoss<T> bag_loss(const BagActivation<T>& h, int label, Aggregation agg) {
  check_activation(h);
  const std::size_t m = h.dim(0), n = h.dim(1);
  if (label < 0 || static_cast<std::size_t>(label) >= m) throw DomainError("bag label out of range");
  const auto y = static_cast<std::size_t>(label);
  BagLoss<T> out;
  out.d_h = Tensor<T>({m, n});
  if (agg == Aggregation::kMax) {
    const auto p = aggregate_max(h);
    out.loss = -std::log(std::max(static_cast<double>(p[y]), nnet::kProbEpsilon));
    for (std::size_t i = 0; i < m; ++i) {
      const T* row = h.data() + i * n;
      const std::size_t j = static_cast<std::size_t>(std::max_element(row, row + n) - row);
      out.d_h.at(i, j) = p[i] - (i == y ? T{1} : T{0});
    }
    return out;
  }
  const auto r = noisy_or(h);
  T sum{0};
  for (T v : r.raw) sum += v;
  out.loss = -std::log(std::max(static_cast<double>(r.probs[y]), nnet::kProbEpsilon));
  // loss = -log raw[y] + log sum(raw)
  std::vector<T> d_raw(m, T{1} / sum);
  d_raw[y] -= T{1} / r.raw[y];
  // d raw_i / d p_ij = prod_{k != j} (1 - p_ik); then softmax Jacobian per column.
  Tensor<T> d_p({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      T prod{1};
      for (std::size_t k = 0; k < n; ++k)
        if (k != j) prod *= T{1} - r.instance_probs.at(i, k);
      d_p.at(i, j) = d_raw[i] * prod;
    }
  for (std::size_t j = 0; j < n; ++j) {
    T dot{0};
    for (std::size_t i = 0; i < m; ++i) dot += r.instance_probs.at(i, j) * d_p.at(i, j);
    for (std::size_t i = 0; i < m; ++i) out.d_h.at(i, j) = r.instance_probs.at(i, j) * (d_p.at(i, j) - dot);
  }
  return out;
}

/// Index of the layer that produces class logits: everything before the
/// trailing softmax.
template <typename T>
std::size_t trunk_end(const nnet::Network<T>& net) {
  if (net.layers.empty() || net.layers.back().kind != nnet::LayerKind::kSoftmax)
    throw ShapeError("MIL needs a network ending in softmax");
  return net.layers.size() - 1;
}

template <typename T>
struct MilStep {
  double loss = 0.0;       // mean bag loss + regulariser
  double data_loss = 0.0;
  nnet::Gradients<T> grad; // includes the L1 subgradient
};

/// Forward/backward for a batch of bags. `x` stacks bag b's instances at rows
/// b*n .. b*n+n-1; the same parameters serve every instance.
template <typename T>
MilStep<T> mil_step(const nnet::Network<T>& net, const Tensor<T>& x, std::span<const int> labels,
                    std::size_t bag_size, Aggregation agg, nnet::Mode mode, Rng* rng, double rho,
                    bool want_input_grad = false) {
  if (bag_size == 0 || x.rank() < 2 || x.dim(0) != labels.size() * bag_size)
    throw ShapeError("MIL batch holds " + std::to_string(x.rank() ? x.dim(0) : 0) + " instances, expected " +
                     std::to_string(labels.size()) + " bags x " + std::to_string(bag_size));
  const auto cache = nnet::forward(net, x, mode, rng, trunk_end(net));
  const Tensor<T>& logits = cache.output();
  const std::size_t m = logits.dim(1), n = bag_size, bags = labels.size();
  Tensor<T> d_logits(logits.shape());
  MilStep<T> out;
  for (std::size_t b = 0; b < bags; ++b) {
    BagActivation<T> h({m, n});
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < m; ++i) h.at(i, j) = logits.at(b * n + j, i);
    const auto bl = bag_loss(h, labels[b], agg);
    out.data_loss += bl.loss;
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < m; ++i) d_logits.at(b * n + j, i) = bl.d_h.at(i, j) / static_cast<T>(bags);
  }
  out.data_loss /= static_cast<double>(bags);
  out.loss = out.data_loss + (rho == 0.0 ? 0.0 : rho * static_cast<double>(nnet::l1_norm(net)));
  out.grad = nnet::backward(net, cache, std::move(d_logits), want_input_grad);
  nnet::add_l1_subgradient(net, out.grad, rho);
  return out;
}

/// Finite-difference verification of mil_step, parameters and inputs.
inline nnet::GradCheckReport mil_grad_check(nnet::Network<double>& net, const Tensor<double>& x,
                                            const std::vector<int>& labels, std::size_t bag_size,
                                            Aggregation agg, const nnet::GradCheckOptions& opt = {}) {
  const nnet::Mode mode = opt.dropout_seed ? nnet::Mode::kTrain : nnet::Mode::kEval;
  const nnet::Objective objective = [&](const nnet::Network<double>& n, const Tensor<double>& in) {
    Rng r(opt.dropout_seed.value_or(0));
    return mil_step(n, in, labels, bag_size, agg, mode, &r, opt.rho).loss;
  };
  const nnet::ForwardFn run = [&](const nnet::Network<double>& n, const Tensor<double>& in) {
    Rng r(opt.dropout_seed.value_or(0));
    return nnet::forward(n, in, mode, &r);
  };
  const nnet::PatternFn pattern = [&](const nnet::Network<double>& n, const Tensor<double>& in) {
    return nnet::kink_pattern(n, run(n, in));
  };
  const Tensor<double> xn = nnet::nudge_off_ties(net, x, run, opt);
  Rng r(opt.dropout_seed.value_or(0));
  const auto step = mil_step(net, xn, labels, bag_size, agg, mode, &r, opt.rho, opt.input_samples > 0);
  return nnet::check_gradients(net, xn, objective, pattern, step.grad, opt);
}

/// Clip indices of one bag; `with_replacement` flags classes that had fewer
/// clips than the bag size.
struct Bag {
  std::vector<std::size_t> clips;
  int label = 0;
  bool with_replacement = false;
  friend bool operator==(const Bag&, const Bag&) = default;
};

/// One epoch of bags: per class, clips are shuffled and grouped N at a time;
/// a short final group is topped up with other clips of the class. Bag order
/// is shuffled across classes.
inline std::vector<Bag> draw_bags(std::span<const int> clip_labels, std::size_t bag_size, Rng& rng) {
  if (bag_size == 0) throw DomainError("bag size must be at least 1");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < clip_labels.size(); ++i) by_class[clip_labels[i]].push_back(i);
  std::vector<Bag> bags;
  for (auto& [label, clips] : by_class) {
    std::shuffle(clips.begin(), clips.end(), rng);
    const bool short_class = clips.size() < bag_size;
    for (std::size_t start = 0; start < clips.size(); start += bag_size) {
      Bag b;
      b.label = label;
      b.with_replacement = short_class;
      for (std::size_t k = start; k < std::min(start + bag_size, clips.size()); ++k) b.clips.push_back(clips[k]);
      while (b.clips.size() < bag_size) {
        std::vector<std::size_t> unused;
        for (std::size_t c : clips)
          if (std::find(b.clips.begin(), b.clips.end(), c) == b.clips.end()) unused.push_back(c);
        const auto& pool = unused.empty() ? clips : unused;
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        b.clips.push_back(pool[pick(rng)]);
      }
      bags.push_back(std::move(b));
    }
  }
  std::shuffle(bags.begin(), bags.end(), rng);
  return bags;
}

struct MilEpochStats {
  double mean_loss = 0.0;
  std::size_t bags = 0;
  std::size_t with_replacement = 0;
};

/// One MIL training epoch over clip feature streams (3, 50, T): bags are
/// drawn, each instance is a random `patch_frames` crop of its clip, and
/// minibatches of `bags_per_batch` bags update the shared parameters.
inline MilEpochStats mil_train_epoch(nnet::Network<float>& net, nnet::TrainState<float>& state,
                                     std::span<const Tensor<float>> streams, std::span<const int> labels,
                                     std::size_t bag_size, Aggregation agg, std::size_t patch_frames,
                                     std::size_t bags_per_batch, Rng& rng) {
  if (streams.size() != labels.size()) throw ShapeError("one label per clip stream required");
  if (bags_per_batch == 0) throw DomainError("batch size must be at least 1");
  const auto bags = draw_bags(labels, bag_size, rng);
  MilEpochStats st;
  st.bags = bags.size();
  double total = 0.0;
  for (std::size_t start = 0; start < bags.size(); start += bags_per_batch) {
    const std::size_t nb = std::min(bags_per_batch, bags.size() - start);
    std::vector<Tensor<float>> inst;
    std::vector<int> y;
    for (std::size_t b = start; b < start + nb; ++b) {
      if (bags[b].with_replacement) ++st.with_replacement;
      y.push_back(bags[b].label);
      for (std::size_t c : bags[b].clips) {
        const auto& s = streams[c];
        const std::size_t t = s.dim(2);
        std::size_t off = 0;
        if (t > patch_frames) off = std::uniform_int_distribution<std::size_t>(0, t - patch_frames)(rng);
        inst.push_back(dsp::model_input(s, off, patch_frames));
      }
    }
    const auto x = stack<float>(inst);
    const auto step = mil_step(net, x, y, bag_size, agg, nnet::Mode::kTrain, &rng, state.cfg.l1_rho);
    if (!std::isfinite(step.loss) || !step.grad.all_finite())
      throw NumericalError("MIL training diverged (non-finite loss or gradient)");
    nnet::sgd_momentum_step(net, state, step.grad);
    total += step.data_loss * static_cast<double>(nb);
  }
  st.mean_loss = bags.empty() ? 0.0 : total / static_cast<double>(bags.size());
  return st;
}

}  // namespace aenet::mil
