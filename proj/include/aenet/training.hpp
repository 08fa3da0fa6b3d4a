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
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "aenet/augment/augment.hpp"
#include "aenet/augment/manifest.hpp"
#include "aenet/augment/vtlp.hpp"
#include "aenet/common.hpp"
#include "aenet/dsp/filterbank.hpp"
#include "aenet/dsp/patches.hpp"
#include "aenet/dsp/signal.hpp"
#include "aenet/dsp/wav.hpp"
#include "aenet/mil.hpp"
#include "aenet/model_zoo.hpp"
#include "aenet/nnet/checkpoint.hpp"
#include "aenet/nnet/loss.hpp"
#include "aenet/nnet/network.hpp"
#include "aenet/nnet/optimizer.hpp"

namespace aenet::train {

// ---------------------------------------------------------------------------
// Splitting

/// Stratified split: per class, round(fraction * n) clips (at least one on
/// each side) go to training. Record order is preserved on both sides.
inline std::pair<Manifest, Manifest> split_dataset(const Manifest& m, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw DomainError("train fraction must lie in (0, 1)");
  std::vector<bool> to_train(m.size(), false);
  for (auto& [c, idx] : m.by_class()) {
    if (idx.size() < 2) throw DomainError("class " + std::to_string(c) + " has a single clip; cannot split");
    Rng rng(derive_seed(seed, "split.class" + std::to_string(c), 0));
    auto perm = idx;
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto n_train = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(idx.size()))), 1, idx.size() - 1);
    for (std::size_t k = 0; k < n_train; ++k) to_train[perm[k]] = true;
  }
  Manifest tr, te;
  tr.base_dir = te.base_dir = m.base_dir;
  for (std::size_t i = 0; i < m.size(); ++i) (to_train[i] ? tr : te).records.push_back(m.records[i]);
  return {tr, te};
}

/// Per-class random subset holding round(fraction * n) clips (at least one).
inline Manifest subset_per_class(const Manifest& m, double fraction, std::uint64_t seed) {
  std::vector<bool> keep(m.size(), false);
  for (auto& [c, idx] : m.by_class()) {
    Rng rng(derive_seed(seed, "subset.class" + std::to_string(c), 0));
    auto perm = idx;
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto n = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size()))), 1, idx.size());
    for (std::size_t k = 0; k < n; ++k) keep[perm[k]] = true;
  }
  Manifest out;
  out.base_dir = m.base_dir;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (keep[i]) out.records.push_back(m.records[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Feature streams

/// (3, 50, T) static/delta/delta-delta stream of a standardised waveform.
inline Tensor<float> clip_stream(const dsp::Waveform& w) { return dsp::feature_stream(dsp::log_mel_filterbank(w)); }

/// Feature stream for any manifest record: raw clips are read, EMDA clips are
/// read when materialised and rendered from their sources otherwise, VTLP
/// clips re-run the filterbank on warped centres.
inline Tensor<float> load_clip_stream(const Manifest& m, const ClipRecord& r) {
  switch (r.origin) {
    case Origin::kRaw:
      return clip_stream(dsp::standardize(dsp::load_wav(m.resolve(r))));
    case Origin::kEmda: {
      const auto p = m.resolve(r);
      return clip_stream(std::filesystem::exists(p) ? dsp::standardize(dsp::load_wav(p)) : augment::render_emda(m, r));
    }
    case Origin::kVtlp: {
      const auto w = dsp::standardize(dsp::load_wav(m.resolve(r)));
      return dsp::feature_stream(augment::vtlp_warp(dsp::power_spectra(w), r.params.get_double("warp")));
    }
  }
  throw DomainError("unknown clip origin");
}

struct LabeledStream {
  std::string clip_id;
  int label = 0;
  Tensor<float> stream;  // (3, 50, T)
};

inline std::vector<LabeledStream> load_streams(const Manifest& m) {
  std::vector<LabeledStream> out;
  out.reserve(m.size());
  for (const auto& r : m.records) out.push_back({r.clip_id, r.class_id, load_clip_stream(m, r)});
  return out;
}

// ---------------------------------------------------------------------------
// Configuration

enum class Voting { kMean, kMajority };

struct RunConfig {
  std::string arch = "A-mini";
  std::size_t n_classes = 0;  // 0: one more than the largest training label
  std::size_t batch_size = 32;
  std::size_t epochs = 30;
  std::size_t patch_frames = 200;
  double eval_overlap = 0.5;
  /// Desk learning rate 0.003: at 0.01 the A-mini flatten layer (fan-in
  /// ~27k) overshoots and training collapses.
  nnet::OptimizerConfig optimizer{0.003, 0.9, 1e-6, 0.5, 3};
  Voting voting = Voting::kMean;
  bool mil_enabled = false;
  std::size_t mil_bag_size = 2;
  mil::Aggregation mil_aggregation = mil::Aggregation::kMax;
  std::uint64_t seed = 0;

  void validate() const {
    if (batch_size == 0) throw DomainError("batch_size must be at least 1");
    if (patch_frames != 200 && patch_frames != 400) throw DomainError("patch length must be 200 or 400 frames");
    if (!(eval_overlap >= 0.0 && eval_overlap < 1.0)) throw DomainError("eval overlap must lie in [0, 1)");
    if (!(optimizer.learning_rate > 0.0)) throw DomainError("learning rate must be positive");
    if (mil_enabled && mil_bag_size == 0) throw DomainError("mil.bag_size must be at least 1");
  }
};

// ---------------------------------------------------------------------------
// Evaluation

struct ClipPosterior {
  std::string clip_id;
  int label = 0;
  int predicted = 0;
  std::vector<double> posterior;
};

struct EvalReport {
  std::size_t n_classes = 0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::vector<ClipPosterior> clips;
  std::vector<std::string> skipped;  // clips too short even to pad
  double mean_loss = 0.0;            // mean -log posterior[label]

  std::size_t total() const {
    std::size_t t = 0;
    for (const auto& row : confusion) t = std::accumulate(row.begin(), row.end(), t);
    return t;
  }
  std::size_t correct() const {
    std::size_t t = 0;
    for (std::size_t i = 0; i < confusion.size(); ++i) t += confusion[i][i];
    return t;
  }
  double accuracy() const { return total() ? static_cast<double>(correct()) / static_cast<double>(total()) : 0.0; }

  /// "accuracy <value>" then one whitespace-separated confusion row per class.
  std::string to_text() const {
    std::string s = "accuracy " + format_double(accuracy()) + "\n";
    for (const auto& row : confusion) {
      for (std::size_t j = 0; j < row.size(); ++j) s += (j ? " " : "") + std::to_string(row[j]);
      s += "\n";
    }
    return s;
  }
};

/// Combine per-patch posteriors (rows) into one clip decision.
inline std::pair<int, std::vector<double>> vote(const Tensor<float>& patch_probs, Voting v) {
  const std::size_t n = patch_probs.dim(0), k = patch_probs.dim(1);
  std::vector<double> post(k, 0.0);
  if (v == Voting::kMean) {
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t j = 0; j < k; ++j) post[j] += patch_probs.at(s, j) / static_cast<double>(n);
  } else {
    for (std::size_t s = 0; s < n; ++s) {
      const auto row = patch_probs.row(s);
      post[static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin())] += 1.0 / static_cast<double>(n);
    }
  }
  return {static_cast<int>(std::max_element(post.begin(), post.end()) - post.begin()), post};
}

/// Posterior rows for every patch of a stream, evaluated in chunks.
inline Tensor<float> patch_posteriors(const nnet::Network<float>& net, const Tensor<float>& stream,
                                      std::size_t patch_frames, double overlap, std::size_t chunk = 32) {
  const auto starts = dsp::patch_starts(stream.dim(2), patch_frames, overlap);
  Tensor<float> out({starts.size(), net.n_classes});
  for (std::size_t start = 0; start < starts.size(); start += chunk) {
    const std::size_t n = std::min(chunk, starts.size() - start);
    std::vector<Tensor<float>> items;
    for (std::size_t i = start; i < start + n; ++i) items.push_back(dsp::model_input(stream, starts[i], patch_frames));
    const auto c = nnet::forward(net, stack<float>(items), nnet::Mode::kEval);
    std::copy(c.output().data(), c.output().data() + c.output().size(), out.data() + start * net.n_classes);
  }
  return out;
}

inline EvalReport evaluate(const nnet::Network<float>& net, const std::vector<LabeledStream>& clips,
                           std::size_t patch_frames, double overlap = 0.5, Voting voting = Voting::kMean) {
  if (net.input_shape.size() != 3 || net.input_shape[2] != patch_frames)
    throw ShapeError("network expects " + shape_str(net.input_shape) + " input, evaluation uses " +
                     std::to_string(patch_frames) + "-frame patches");
  EvalReport r;
  r.n_classes = net.n_classes;
  r.confusion.assign(r.n_classes, std::vector<std::size_t>(r.n_classes, 0));
  double loss = 0.0;
  for (const auto& c : clips) {
    if (c.label < 0 || static_cast<std::size_t>(c.label) >= r.n_classes)
      throw DomainError("clip " + c.clip_id + " has label outside the network's classes");
    if (2 * c.stream.dim(2) < patch_frames) {
      r.skipped.push_back(c.clip_id);
      continue;
    }
    auto [pred, post] = vote(patch_posteriors(net, c.stream, patch_frames, overlap), voting);
    loss -= std::log(std::max(post[static_cast<std::size_t>(c.label)], nnet::kProbEpsilon));
    ++r.confusion[static_cast<std::size_t>(c.label)][static_cast<std::size_t>(pred)];
    r.clips.push_back({c.clip_id, c.label, pred, std::move(post)});
  }
  r.mean_loss = r.clips.empty() ? 0.0 : loss / static_cast<double>(r.clips.size());
  return r;
}

/// Row-normalised confusion of `a` minus that of `b`.
inline std::vector<std::vector<double>> confusion_difference(const EvalReport& a, const EvalReport& b) {
  if (a.n_classes != b.n_classes) throw DomainError("confusion_difference: class sets differ");
  auto norm = [](const std::vector<std::size_t>& row) {
    const double s = static_cast<double>(std::accumulate(row.begin(), row.end(), std::size_t{0}));
    std::vector<double> out(row.size(), 0.0);
    if (s > 0)
      for (std::size_t j = 0; j < row.size(); ++j) out[j] = static_cast<double>(row[j]) / s;
    return out;
  };
  std::vector<std::vector<double>> d(a.n_classes);
  for (std::size_t i = 0; i < a.n_classes; ++i) {
    const auto ra = norm(a.confusion[i]), rb = norm(b.confusion[i]);
    d[i].resize(a.n_classes);
    for (std::size_t j = 0; j < a.n_classes; ++j) d[i][j] = ra[j] - rb[j];
  }
  return d;
}

// ---------------------------------------------------------------------------
// Training loop

struct EpochMetrics {
  std::size_t epoch = 0;
  std::string split;  // "train" or "test"
  double loss = 0.0;
  double accuracy = 0.0;
};

inline std::string metrics_csv(const std::vector<EpochMetrics>& rows) {
  std::string s = "epoch,split,loss,accuracy\n";
  for (const auto& r : rows)
    s += std::to_string(r.epoch) + "," + r.split + "," + format_double(r.loss) + "," + format_double(r.accuracy) + "\n";
  return s;
}

struct TrainResult {
  nnet::Network<float> net;
  std::vector<EpochMetrics> metrics;
  std::optional<EvalReport> final_eval;
};

using EpochLogger = std::function<void(const EpochMetrics&)>;

/// Trains from He initialisation. Every epoch visits each training clip once
/// through a fresh random crop (or, with MIL, through bags of crops). The
/// learning rate halves when the training loss stalls; `heldout`, when given,
/// is only evaluated and logged.
inline TrainResult train(const RunConfig& cfg, const std::vector<LabeledStream>& data,
                         const std::vector<LabeledStream>* heldout = nullptr, const EpochLogger& log = {}) {
  cfg.validate();
  if (data.empty()) throw DomainError("training set is empty");
  std::size_t k = cfg.n_classes;
  if (k == 0)
    for (const auto& c : data) k = std::max(k, static_cast<std::size_t>(c.label) + 1);
  TrainResult res;
  res.net = zoo::build<float>(zoo::arch_spec(cfg.arch, k, cfg.patch_frames), derive_seed(cfg.seed, "train.init", 0));
  auto state = nnet::TrainState<float>::create(res.net, cfg.optimizer, cfg.seed);
  const std::size_t trunk = mil::trunk_end(res.net);

  std::vector<Tensor<float>> streams;
  std::vector<int> labels;
  for (const auto& c : data) {
    if (c.label < 0 || static_cast<std::size_t>(c.label) >= k) throw DomainError("label out of range: " + c.clip_id);
    if (2 * c.stream.dim(2) < cfg.patch_frames) throw DomainError("clip " + c.clip_id + " is too short for a patch");
    streams.push_back(c.stream);
    labels.push_back(c.label);
  }

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng rng(derive_seed(cfg.seed, "train.epoch", epoch));
    double loss_sum = 0.0;
    std::size_t correct = 0, seen = 0;
    if (cfg.mil_enabled) {
      const auto st = mil::mil_train_epoch(res.net, state, streams, labels, cfg.mil_bag_size, cfg.mil_aggregation,
                                           cfg.patch_frames, cfg.batch_size, rng);
      loss_sum = st.mean_loss;
      seen = 1;
    } else {
      std::vector<std::size_t> order(streams.size());
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
        const std::size_t n = std::min(cfg.batch_size, order.size() - start);
        std::vector<Tensor<float>> items;
        std::vector<int> y;
        for (std::size_t i = start; i < start + n; ++i) {
          const auto& s = streams[order[i]];
          std::size_t off = 0;
          if (s.dim(2) > cfg.patch_frames)
            off = std::uniform_int_distribution<std::size_t>(0, s.dim(2) - cfg.patch_frames)(rng);
          items.push_back(dsp::model_input(s, off, cfg.patch_frames));
          y.push_back(labels[order[i]]);
        }
        // Scores stop before the softmax; the loss applies it in log space.
        const auto cache = nnet::forward(res.net, stack<float>(items), nnet::Mode::kTrain, &rng, trunk);
        const auto lr = nnet::cross_entropy_l1_logits(cache.output(), y, res.net, cfg.optimizer.l1_rho);
        if (!std::isfinite(lr.loss))
          throw NumericalError("training diverged at epoch " + std::to_string(epoch) + ": loss is not finite");
        auto g = nnet::backward(res.net, cache, lr.d_probs);
        nnet::add_l1_subgradient(res.net, g, cfg.optimizer.l1_rho);
        if (!g.all_finite())
          throw NumericalError("training diverged at epoch " + std::to_string(epoch) + ": gradient is not finite");
        nnet::sgd_momentum_step(res.net, state, g);
        loss_sum += lr.data_loss * static_cast<double>(n);
        for (std::size_t s = 0; s < n; ++s) {
          const auto row = cache.output().row(s);
          correct += static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin()) == y[s];
        }
        seen += n;
      }
    }
    EpochMetrics m{epoch, "train", loss_sum / static_cast<double>(seen),
                   cfg.mil_enabled ? std::nan("") : static_cast<double>(correct) / static_cast<double>(seen)};
    if (!std::isfinite(m.loss)) throw NumericalError("training diverged at epoch " + std::to_string(epoch));
    res.metrics.push_back(m);
    if (log) log(m);
    state.observe_epoch(m.loss);
    if (heldout) {
      const auto rep = evaluate(res.net, *heldout, cfg.patch_frames, cfg.eval_overlap, cfg.voting);
      EpochMetrics t{epoch, "test", rep.mean_loss, rep.accuracy()};
      res.metrics.push_back(t);
      if (log) log(t);
      if (epoch == cfg.epochs) res.final_eval = rep;
    }
  }
  return res;
}

}  // namespace aenet::train
