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
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "aenet/common.hpp"
#include "aenet/data_synth.hpp"
#include "aenet/dsp/wav.hpp"
#include "aenet/features.hpp"
#include "aenet/nnet/network.hpp"
#include "aenet/nnet/optimizer.hpp"

namespace aenet::highlight {

// ---------------------------------------------------------------------------
// Losses on scalar scores. Each returns the loss and its score gradients.

enum class LossKind { kRanking, kHuber, kMiRank };

inline std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::kRanking: return "ranking";
    case LossKind::kHuber: return "huber";
    case LossKind::kMiRank: return "mirank";
  }
  return "?";
}

inline LossKind parse_loss(std::string_view s) {
  if (s == "ranking") return LossKind::kRanking;
  if (s == "huber") return LossKind::kHuber;
  if (s == "mirank") return LossKind::kMiRank;
  throw DomainError("unknown ranking loss '" + std::string(s) + "' (ranking, huber, mirank)");
}

struct LossSpec {
  LossKind kind = LossKind::kRanking;
  double delta = 1.0;         // Huber threshold
  std::size_t instances = 2;  // positives per MIRank group
  bool printed_forms = false;  // unclamped hinge and negative Huber tail, for study only

  void validate() const {
    if (!(delta > 0.0)) throw DomainError("huber delta must be positive");
    if (instances == 0) throw DomainError("mirank instances must be at least 1");
  }
};

struct PairLoss {
  double loss = 0.0;
  std::vector<double> d_pos;  // one per positive in the group
  double d_neg = 0.0;
};

/// max(0, 1 - y_pos + y_neg); the printed form drops the clamp.
inline PairLoss ranking_loss(double y_pos, double y_neg, bool printed = false) {
  const double m = 1.0 - y_pos + y_neg;
  if (!printed && m <= 0.0) return {0.0, {0.0}, 0.0};
  return {m, {-1.0}, 1.0};
}

/// Huber on the hinge: L^2/2 below delta, delta (L - delta/2) above. The
/// printed form's tail is delta (-L + delta/2).
inline PairLoss huber_ranking_loss(double y_pos, double y_neg, double delta, bool printed = false) {
  auto r = ranking_loss(y_pos, y_neg, printed);
  const double l = r.loss;
  double v, dl;
  if (l < delta) {
    v = 0.5 * l * l;
    dl = l;
  } else if (!printed) {
    v = delta * (l - 0.5 * delta);
    dl = delta;
  } else {
    v = delta * (-l + 0.5 * delta);
    dl = -delta;
  }
  return {v, {r.d_pos[0] * dl}, r.d_neg * dl};
}

/// Hinge on the best positive; the gradient reaches only the first argmax.
inline PairLoss mi_ranking_loss(const std::vector<double>& y_pos, double y_neg, bool printed = false) {
  if (y_pos.empty()) throw DomainError("mi_ranking_loss: no positives");
  const auto best = static_cast<std::size_t>(std::max_element(y_pos.begin(), y_pos.end()) - y_pos.begin());
  const auto r = ranking_loss(y_pos[best], y_neg, printed);
  PairLoss out{r.loss, std::vector<double>(y_pos.size(), 0.0), r.d_neg};
  out.d_pos[best] = r.d_pos[0];
  return out;
}

inline PairLoss group_loss(const LossSpec& spec, const std::vector<double>& y_pos, double y_neg) {
  switch (spec.kind) {
    case LossKind::kRanking: return ranking_loss(y_pos.at(0), y_neg, spec.printed_forms);
    case LossKind::kHuber: return huber_ranking_loss(y_pos.at(0), y_neg, spec.delta, spec.printed_forms);
    case LossKind::kMiRank: return mi_ranking_loss(y_pos, y_neg, spec.printed_forms);
  }
  throw DomainError("unknown loss kind");
}

// ---------------------------------------------------------------------------
// Moments

struct MomentRecord {
  std::string video_id;
  std::size_t moment_id = 0;
  int label = 0;  // 1 = highlight
  std::vector<float> feature;
};

/// Moments file: video_id <TAB> moment_id <TAB> label <TAB> hex feature vector.
inline std::string moments_to_string(const std::vector<MomentRecord>& ms) {
  std::string s;
  for (const auto& m : ms)
    s += m.video_id + "\t" + std::to_string(m.moment_id) + "\t" + std::to_string(m.label) + "\t" +
         features::to_hex(m.feature) + "\n";
  return s;
}

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> f;
  std::size_t pos = 0;
  for (std::size_t tab; (tab = line.find('\t', pos)) != std::string::npos; pos = tab + 1)
    f.push_back(line.substr(pos, tab - pos));
  f.push_back(line.substr(pos));
  return f;
}

inline std::vector<MomentRecord> parse_moments(std::string_view text) {
  std::vector<MomentRecord> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    const auto where = "moments line " + std::to_string(lineno);
    if (f.size() != 4) throw ParseError(where + ": expected 4 fields");
    const auto label = parse_int(f[2]);
    if (label != 0 && label != 1) throw ParseError(where + ": label must be 0 or 1");
    MomentRecord m{f[0], static_cast<std::size_t>(parse_int(f[1])), static_cast<int>(label), features::from_hex(f[3])};
    for (float v : m.feature)
      if (!std::isfinite(v)) throw ParseError(where + ": non-finite feature value");
    if (!out.empty() && m.feature.size() != out.front().feature.size())
      throw ParseError(where + ": feature width differs");
    out.push_back(std::move(m));
  }
  return out;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  out << s;
}

inline std::vector<MomentRecord> load_moments(const std::filesystem::path& p) { return parse_moments(read_text(p)); }

/// Clip-averaged AENet feature of every segment's audio window.
inline std::vector<MomentRecord> moment_features(const nnet::Network<float>& net,
                                                 const std::vector<synth::Segment>& segs,
                                                 const std::filesystem::path& base_dir,
                                                 std::size_t patch_frames = 200, double overlap = 0.5) {
  std::map<std::string, dsp::Waveform> audio;
  std::vector<MomentRecord> out;
  for (const auto& s : segs) {
    auto it = audio.find(s.path);
    if (it == audio.end()) it = audio.emplace(s.path, dsp::load_wav(base_dir / s.path)).first;
    const auto& w = it->second;
    const auto a = static_cast<std::size_t>(std::llround(s.t_start * w.sample_rate));
    const auto b = std::min(w.size(), static_cast<std::size_t>(std::llround(s.t_end * w.sample_rate)));
    if (b <= a) throw DomainError("segment " + s.video_id + "/" + std::to_string(s.moment_id) + " is empty");
    dsp::Waveform cut;
    cut.sample_rate = w.sample_rate;
    cut.samples.assign(w.samples.begin() + static_cast<std::ptrdiff_t>(a), w.samples.begin() + static_cast<std::ptrdiff_t>(b));
    out.push_back({s.video_id, s.moment_id, s.label,
                   features::average_clip(features::extract_features(net, cut, patch_frames, overlap))});
  }
  return out;
}

/// Indices per video, in first-appearance order of the videos.
inline std::vector<std::pair<std::string, std::vector<std::size_t>>> group_by_video(
    const std::vector<MomentRecord>& ms) {
  std::vector<std::pair<std::string, std::vector<std::size_t>>> out;
  std::map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    auto [it, fresh] = slot.emplace(ms[i].video_id, out.size());
    if (fresh) out.push_back({ms[i].video_id, {}});
    out[it->second].second.push_back(i);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ranker: MLP D -> h1 -> h2 -> 1, trained R times and averaged.

struct RankerConfig {
  LossSpec loss;
  std::vector<std::size_t> hidden{64, 16};
  std::size_t runs = 5;
  std::size_t epochs = 100;
  std::size_t groups_per_batch = 16;
  nnet::OptimizerConfig optimizer{0.01, 0.9, 0.0, 0.5, 1000000};
  std::uint64_t seed = 0;

  void validate() const {
    loss.validate();
    if (runs == 0) throw DomainError("ranker runs must be at least 1");
    if (groups_per_batch == 0) throw DomainError("ranker batch must be at least 1");
    if (!(optimizer.learning_rate > 0.0)) throw DomainError("ranker learning rate must be positive");
  }
};

struct RankerModel {
  std::size_t dim = 0;
  std::vector<nnet::Network<double>> replicas;
};

inline nnet::Network<double> ranker_network(std::size_t dim, const std::vector<std::size_t>& hidden) {
  nnet::Network<double> net;
  net.input_shape = {dim};
  net.n_classes = 1;
  std::size_t in = dim;
  for (std::size_t h : hidden) {
    net.layers.push_back(nnet::linear<double>(in, h));
    net.layers.push_back(nnet::simple<double>(nnet::LayerKind::kRelu));
    in = h;
  }
  net.layers.push_back(nnet::linear<double>(in, 1));
  return net;
}

inline Tensor<double> feature_matrix(const std::vector<MomentRecord>& ms, const std::vector<std::size_t>& idx,
                                     std::size_t dim) {
  Tensor<double> x({idx.size(), dim});
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto& f = ms[idx[r]].feature;
    if (f.size() != dim)
      throw ShapeError("moment feature has " + std::to_string(f.size()) + " values, ranker expects " +
                       std::to_string(dim));
    std::copy(f.begin(), f.end(), x.data() + r * dim);
  }
  return x;
}

/// One training group: positives of a video (one, or up to I for MIRank)
/// against one negative of the same video.
struct RankGroup {
  std::vector<std::size_t> pos;
  std::size_t neg = 0;
};

/// Per video: every positive paired with one random negative. For MIRank the
/// shuffled positives are cut into groups of I instead.
inline std::vector<RankGroup> draw_groups(const std::vector<MomentRecord>& ms, const LossSpec& spec, Rng& rng) {
  std::vector<RankGroup> out;
  for (const auto& [vid, idx] : group_by_video(ms)) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i : idx) (ms[i].label ? pos : neg).push_back(i);
    if (pos.empty() || neg.empty()) continue;
    std::shuffle(pos.begin(), pos.end(), rng);
    const std::size_t step = spec.kind == LossKind::kMiRank ? spec.instances : 1;
    std::uniform_int_distribution<std::size_t> pick(0, neg.size() - 1);
    for (std::size_t k = 0; k < pos.size(); k += step) {
      RankGroup g;
      g.pos.assign(pos.begin() + static_cast<std::ptrdiff_t>(k),
                   pos.begin() + static_cast<std::ptrdiff_t>(std::min(pos.size(), k + step)));
      g.neg = neg[pick(rng)];
      out.push_back(std::move(g));
    }
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

/// Videos lacking a positive or a negative; they contribute no pairs.
inline std::vector<std::string> unpairable_videos(const std::vector<MomentRecord>& ms) {
  std::vector<std::string> out;
  for (const auto& [vid, idx] : group_by_video(ms)) {
    bool p = false, n = false;
    for (std::size_t i : idx) (ms[i].label ? p : n) = true;
    if (!p || !n) out.push_back(vid);
  }
  return out;
}

/// Mean group loss over a batch and its gradient step. Returns the loss.
inline double ranker_step(nnet::Network<double>& net, nnet::TrainState<double>& state,
                          const std::vector<MomentRecord>& ms, const std::vector<RankGroup>& batch,
                          const LossSpec& spec) {
  std::vector<std::size_t> rows;
  for (const auto& g : batch) {
    rows.insert(rows.end(), g.pos.begin(), g.pos.end());
    rows.push_back(g.neg);
  }
  const auto cache = nnet::forward(net, feature_matrix(ms, rows, net.input_shape[0]), nnet::Mode::kTrain);
  const auto& y = cache.output();
  Tensor<double> dy(y.shape());
  double total = 0.0;
  const double inv = 1.0 / static_cast<double>(batch.size());
  std::size_t r = 0;
  for (const auto& g : batch) {
    std::vector<double> yp(g.pos.size());
    for (std::size_t k = 0; k < yp.size(); ++k) yp[k] = y[r + k];
    const auto l = group_loss(spec, yp, y[r + yp.size()]);
    total += l.loss;
    for (std::size_t k = 0; k < yp.size(); ++k) dy[r + k] = l.d_pos[k] * inv;
    dy[r + yp.size()] = l.d_neg * inv;
    r += yp.size() + 1;
  }
  nnet::sgd_momentum_step(net, state, nnet::backward(net, cache, std::move(dy)));
  return total * inv;
}

/// Optional per-epoch log: run, epoch, mean group loss.
using RankerLogger = std::function<void(std::size_t, std::size_t, double)>;

inline RankerModel train_ranker(const std::vector<MomentRecord>& ms, const RankerConfig& cfg,
                                const RankerLogger& log = {}) {
  cfg.validate();
  if (ms.empty()) throw DomainError("no moments to train on");
  RankerModel model;
  model.dim = ms.front().feature.size();
  for (std::size_t run = 0; run < cfg.runs; ++run) {
    auto net = ranker_network(model.dim, cfg.hidden);
    nnet::he_init(net, derive_seed(cfg.seed, "rank.init", run));
    auto state = nnet::TrainState<double>::create(net, cfg.optimizer, derive_seed(cfg.seed, "rank.state", run));
    Rng rng(derive_seed(cfg.seed, "rank.pairs", run));
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
      const auto groups = draw_groups(ms, cfg.loss, rng);
      if (groups.empty()) throw DomainError("no video has both positive and negative moments");
      double sum = 0.0;
      std::size_t steps = 0;
      for (std::size_t k = 0; k < groups.size(); k += cfg.groups_per_batch) {
        const std::vector<RankGroup> batch(groups.begin() + static_cast<std::ptrdiff_t>(k),
                                           groups.begin() + static_cast<std::ptrdiff_t>(
                                                                std::min(groups.size(), k + cfg.groups_per_batch)));
        const double l = ranker_step(net, state, ms, batch, cfg.loss);
        if (!std::isfinite(l)) throw NumericalError("ranker loss is not finite");
        sum += l;
        ++steps;
      }
      if (log) log(run, epoch, sum / static_cast<double>(steps));
    }
    model.replicas.push_back(std::move(net));
  }
  return model;
}

/// H-factor per moment: mean of the replicas' outputs.
inline std::vector<double> score_moments(const RankerModel& model, const std::vector<MomentRecord>& ms) {
  if (model.replicas.empty()) throw DomainError("ranker has no replicas");
  std::vector<std::size_t> idx(ms.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<double> out(ms.size(), 0.0);
  if (ms.empty()) return out;
  const auto x = feature_matrix(ms, idx, model.dim);
  for (const auto& net : model.replicas) {
    const auto c = nnet::forward(net, x, nnet::Mode::kEval);
    for (std::size_t i = 0; i < ms.size(); ++i) out[i] += c.output()[i];
  }
  for (auto& v : out) v /= static_cast<double>(model.replicas.size());
  return out;
}

// ---------------------------------------------------------------------------
// Average precision

/// AP of one ranking: scores descending, ties by ascending moment id.
inline double average_precision(const std::vector<double>& scores, const std::vector<int>& labels,
                                const std::vector<std::size_t>& moment_ids) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return moment_ids[a] < moment_ids[b];
  });
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < order.size(); ++r)
    if (labels[order[r]]) sum += static_cast<double>(++hits) / static_cast<double>(r + 1);
  if (hits == 0) throw DomainError("average_precision: no positives");
  return sum / static_cast<double>(hits);
}

struct MapReport {
  double map = 0.0;
  std::vector<std::pair<std::string, double>> per_video;
  std::vector<std::string> excluded;  // videos without positives
};

inline MapReport mean_average_precision(const std::vector<MomentRecord>& ms, const std::vector<double>& scores) {
  if (scores.size() != ms.size()) throw ShapeError("one score per moment expected");
  MapReport rep;
  double sum = 0.0;
  for (const auto& [vid, idx] : group_by_video(ms)) {
    std::vector<double> s;
    std::vector<int> l;
    std::vector<std::size_t> id;
    for (std::size_t i : idx) {
      s.push_back(scores[i]);
      l.push_back(ms[i].label);
      id.push_back(ms[i].moment_id);
    }
    if (std::find(l.begin(), l.end(), 1) == l.end()) {
      rep.excluded.push_back(vid);
      continue;
    }
    const double ap = average_precision(s, l, id);
    rep.per_video.push_back({vid, ap});
    sum += ap;
  }
  if (rep.per_video.empty()) throw DomainError("no video has a positive moment");
  rep.map = sum / static_cast<double>(rep.per_video.size());
  return rep;
}

// Scores file: video_id <TAB> moment_id <TAB> h_factor.
inline std::string scores_to_string(const std::vector<MomentRecord>& ms, const std::vector<double>& scores) {
  std::string s;
  for (std::size_t i = 0; i < ms.size(); ++i)
    s += ms[i].video_id + "\t" + std::to_string(ms[i].moment_id) + "\t" + format_double(scores[i]) + "\n";
  return s;
}

/// Scores aligned to `ms` by (video_id, moment_id).
inline std::vector<double> parse_scores(std::string_view text, const std::vector<MomentRecord>& ms) {
  std::map<std::pair<std::string, std::size_t>, double> by_key;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (f.size() != 3) throw ParseError("scores line " + std::to_string(lineno) + ": expected 3 fields");
    by_key[{f[0], static_cast<std::size_t>(parse_int(f[1]))}] = parse_double(f[2]);
  }
  std::vector<double> out;
  for (const auto& m : ms) {
    auto it = by_key.find({m.video_id, m.moment_id});
    if (it == by_key.end())
      throw FormatError("no score for moment " + m.video_id + "/" + std::to_string(m.moment_id));
    out.push_back(it->second);
  }
  return out;
}

/// Moments whose video id is in `videos`.
inline std::vector<MomentRecord> select_videos(const std::vector<MomentRecord>& ms, const std::set<std::string>& videos) {
  std::vector<MomentRecord> out;
  for (const auto& m : ms)
    if (videos.count(m.video_id)) out.push_back(m);
  return out;
}

/// Seeded split of the video ids: round(fraction * n) go to training.
inline std::pair<std::set<std::string>, std::set<std::string>> split_videos(const std::vector<MomentRecord>& ms,
                                                                            double fraction, std::uint64_t seed) {
  std::vector<std::string> ids;
  for (const auto& [vid, idx] : group_by_video(ms)) ids.push_back(vid);
  if (ids.size() < 2) throw DomainError("need at least two videos to split");
  Rng rng(derive_seed(seed, "rank.split", 0));
  std::shuffle(ids.begin(), ids.end(), rng);
  const auto n = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(ids.size()))), 1, ids.size() - 1);
  return {{ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n)},
          {ids.begin() + static_cast<std::ptrdiff_t>(n), ids.end()}};
}

}  // namespace aenet::highlight
