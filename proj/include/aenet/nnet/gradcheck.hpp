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
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "aenet/common.hpp"
#include "aenet/nnet/loss.hpp"
#include "aenet/nnet/network.hpp"

namespace aenet::nnet {

struct GradCheckOptions {
  double eps = 1e-5;
  std::size_t samples_per_layer = 200;
  std::size_t input_samples = 200;
  std::uint64_t seed = 1;
  /// Before checking, the input is nudged with small noise until every ReLU
  /// input and every max-pool lead over the runner-up is at least this far
  /// from a tie (0 disables).
  double tie_margin = 1e-5;
  /// Probes at a tie are replaced by fresh ones until this many times the
  /// sample count have been skipped.
  std::size_t max_skips_factor = 10;
  /// Multiplies the analytic gradient before comparison (negative control).
  double corrupt_factor = 1.0;
  double rho = 0.0;
  /// Denominator floor of the relative error, per unit of loss. Central
  /// differences carry roundoff proportional to |loss| (about 1e-11 per unit
  /// at eps 1e-5), so gradients below floor * max(1, |loss|) are compared in
  /// absolute terms instead.
  double floor = 1e-6;
  /// When set, dropout runs in train mode with a mask re-drawn from this seed
  /// on every evaluation, so the objective stays a fixed smooth function.
  std::optional<std::uint64_t> dropout_seed;
};

struct LayerCheck {
  std::size_t layer = 0;
  std::string kind;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // probes straddling a ReLU or pool tie
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<LayerCheck> layers;  // parameterised layers, plus "input" if checked
  double max_rel_error = 0.0;
  bool passed(double tol) const { return max_rel_error < tol; }
};

inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

namespace detail {

inline std::vector<std::size_t> sample_indices(std::size_t count, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), 0);
  if (k >= count) return idx;
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

// Candidate probe order: a random permutation of [0, count).
inline std::vector<std::size_t> probe_order(std::size_t count, Rng& rng) {
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

}  // namespace detail

/// ReLU sign bits and max-pool winners of one forward pass. A central
/// difference is only meaningful when both probes keep this pattern.
using KinkPattern = std::vector<std::uint32_t>;

template <typename T>
KinkPattern kink_pattern(const Network<T>& net, const ForwardCache<T>& cache) {
  KinkPattern p;
  for (std::size_t i = 0; i < cache.layers_run(); ++i) {
    if (net.layers[i].kind == LayerKind::kRelu) {
      for (T v : cache.acts[i].vec()) p.push_back(v > T(0));
    } else if (net.layers[i].kind == LayerKind::kMaxPool) {
      p.insert(p.end(), cache.argmax[i].begin(), cache.argmax[i].end());
    }
  }
  return p;
}

/// Distance of a forward pass from its nearest kink: the smallest |ReLU
/// input| and the smallest gap between the two largest entries of a pool
/// window whose maximum is positive (all-zero windows only move through a
/// ReLU crossing, which the first term covers).
template <typename T>
double tie_distance(const Network<T>& net, const ForwardCache<T>& cache) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cache.layers_run(); ++i) {
    const auto& l = net.layers[i];
    const Tensor<T>& in = cache.acts[i];
    if (l.kind == LayerKind::kRelu) {
      for (T v : in.vec()) d = std::min(d, static_cast<double>(std::abs(v)));
    } else if (l.kind == LayerKind::kMaxPool) {
      const std::size_t h = in.dim(2), w = in.dim(3), ph = l.pool_freq, pw = l.pool_time;
      for (std::size_t s = 0; s < in.dim(0) * in.dim(1); ++s) {
        const T* plane = in.data() + s * h * w;
        for (std::size_t r = 0; r + ph <= h; r += ph)
          for (std::size_t c = 0; c + pw <= w; c += pw) {
            T top = -std::numeric_limits<T>::infinity(), second = top;
            for (std::size_t a = 0; a < ph; ++a)
              for (std::size_t b = 0; b < pw; ++b) {
                const T v = plane[(r + a) * w + c + b];
                if (v > top) {
                  second = top;
                  top = v;
                } else if (v > second) {
                  second = v;
                }
              }
            if (top > T(0) && ph * pw > 1) d = std::min(d, static_cast<double>(top - second));
          }
      }
    }
  }
  return d;
}

using ForwardFn = std::function<ForwardCache<double>(const Network<double>&, const Tensor<double>&)>;

/// Adds N(0, 0.01^2) noise to `x` until the forward pass sits at least
/// opt.tie_margin from every kink, within `tries` attempts.
inline Tensor<double> nudge_off_ties(const Network<double>& net, Tensor<double> x, const ForwardFn& run,
                                     const GradCheckOptions& opt, int tries = 100) {
  if (opt.tie_margin <= 0.0) return x;
  Rng rng(opt.seed ^ 0x7135ULL);
  std::normal_distribution<double> nd(0.0, 0.01);
  for (int t = 0; t < tries && tie_distance(net, run(net, x)) < opt.tie_margin; ++t)
    for (auto& v : x.vec()) v += nd(rng);
  return x;
}

using Objective = std::function<double(const Network<double>&, const Tensor<double>&)>;
using PatternFn = std::function<KinkPattern(const Network<double>&, const Tensor<double>&)>;

/// Compare `analytic` against central differences of `objective` for a random
/// subsample of every parameterised layer's weights and biases, then of the
/// input when analytic.input is filled. Probes whose +-eps evaluations change
/// the kink pattern straddle a ReLU or pool tie, and parameters within eps of
/// zero straddle the L1 kink; they are skipped and counted,
/// and the next candidate is drawn instead. `net` is perturbed in place and
/// restored.
inline GradCheckReport check_gradients(Network<double>& net, const Tensor<double>& batch,
                                       const Objective& objective, const PatternFn& pattern,
                                       const Gradients<double>& analytic, const GradCheckOptions& opt) {
  GradCheckReport rep;
  const KinkPattern base = pattern ? pattern(net, batch) : KinkPattern{};
  Tensor<double> x = batch;
  auto probe = [&](double& p, double g, LayerCheck& lc, bool l1_kink) {
    const double saved = p;
    if (l1_kink && opt.rho > 0 && std::abs(saved) <= opt.eps) {
      ++lc.skipped;
      return;
    }
    p = saved + opt.eps;
    const double up = objective(net, x);
    const bool kink_up = pattern && pattern(net, x) != base;
    p = saved - opt.eps;
    const double down = objective(net, x);
    const bool kink_down = pattern && pattern(net, x) != base;
    p = saved;
    if (kink_up || kink_down) {
      ++lc.skipped;
      return;
    }
    const double fd = (up - down) / (2.0 * opt.eps);
    const double floor = opt.floor * std::max({1.0, std::abs(up), std::abs(down)});
    lc.max_rel_error = std::max(lc.max_rel_error, relative_error(g * opt.corrupt_factor, fd, floor));
    ++lc.checked;
  };
  auto finish = [&](const LayerCheck& lc) {
    rep.max_rel_error = std::max(rep.max_rel_error, lc.max_rel_error);
    rep.layers.push_back(lc);
  };

  Rng rng(opt.seed);
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    auto& l = net.layers[i];
    if (!l.has_params()) continue;
    LayerCheck lc{i, kind_name(l.kind), 0, 0, 0.0};
    const std::size_t nw = l.weight.size();
    for (std::size_t j : detail::probe_order(l.param_count(), rng)) {
      if (lc.checked >= opt.samples_per_layer || lc.skipped >= opt.max_skips_factor * opt.samples_per_layer) break;
      if (j < nw)
        probe(l.weight[j], analytic.weight[i][j], lc, true);
      else
        probe(l.bias[j - nw], analytic.bias[i][j - nw], lc, true);
    }
    finish(lc);
  }

  if (opt.input_samples > 0 && analytic.input.size() == x.size()) {
    Rng irng(opt.seed ^ 0x5eedULL);
    LayerCheck lc{net.layers.size(), "input", 0, 0, 0.0};
    for (std::size_t j : detail::probe_order(x.size(), irng)) {
      if (lc.checked >= opt.input_samples || lc.skipped >= opt.max_skips_factor * opt.input_samples) break;
      probe(x[j], analytic.input[j], lc, false);
    }
    finish(lc);
  }
  return rep;
}

/// Full check for a classifier ending in softmax: loss = cross entropy (+ L1),
/// parameters and the network input both checked.
inline GradCheckReport grad_check(Network<double>& net, const Tensor<double>& batch,
                                  const std::vector<int>& labels, const GradCheckOptions& opt = {}) {
  const Mode mode = opt.dropout_seed ? Mode::kTrain : Mode::kEval;
  auto run = [&](const Network<double>& n, const Tensor<double>& x) {
    Rng r(opt.dropout_seed.value_or(0));
    return forward(n, x, mode, &r);
  };
  const Objective objective = [&](const Network<double>& n, const Tensor<double>& x) {
    return cross_entropy_l1(run(n, x).output(), labels, n, opt.rho).loss;
  };
  const PatternFn pattern = [&](const Network<double>& n, const Tensor<double>& x) {
    return kink_pattern(n, run(n, x));
  };

  const Tensor<double> x = nudge_off_ties(net, batch, run, opt);
  const auto cache = run(net, x);
  const auto lr = cross_entropy_l1(cache.output(), labels, net, opt.rho);
  Gradients<double> g = backward(net, cache, lr.d_probs, opt.input_samples > 0);
  add_l1_subgradient(net, g, opt.rho);
  return check_gradients(net, x, objective, pattern, g, opt);
}

}  // namespace aenet::nnet
