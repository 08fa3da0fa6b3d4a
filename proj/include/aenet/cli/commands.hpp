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

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "aenet/augment/augment.hpp"
#include "aenet/cli/config.hpp"
#include "aenet/common.hpp"
#include "aenet/data_synth.hpp"
#include "aenet/features.hpp"
#include "aenet/highlight.hpp"
#include "aenet/mil.hpp"
#include "aenet/model_zoo.hpp"
#include "aenet/nnet/checkpoint.hpp"
#include "aenet/nnet/gradcheck.hpp"
#include "aenet/training.hpp"

namespace aenet::cli {

/// Where a command writes: results to `out`, progress to `log`.
struct Io {
  std::ostream& out;
  std::ostream& log;
  int verbosity = 0;
};

struct Command {
  std::string name;
  std::string help;
  std::vector<KeySpec> keys;
  std::function<int(const Config&, Io&)> run;
};

namespace detail {

inline std::uint64_t seed_of(const Config& c) {
  const auto v = c.integer("seed");
  if (v < 0) throw UsageError("seed must be non-negative");
  return static_cast<std::uint64_t>(v);
}

inline std::vector<std::size_t> parse_widths(const std::string& s) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto comma = s.find(',', pos);
    if (comma == std::string::npos) comma = s.size();
    const auto tok = Config::trim(std::string_view(s).substr(pos, comma - pos));
    long long v = 0;
    try {
      v = parse_int(tok);
    } catch (const Error&) {
      throw UsageError("bad layer width list '" + s + "'");
    }
    if (v <= 0) throw UsageError("layer widths must be positive");
    out.push_back(static_cast<std::size_t>(v));
    pos = comma + 1;
  }
  return out;
}

inline train::Voting parse_voting(const std::string& s) {
  if (s == "mean") return train::Voting::kMean;
  if (s == "majority") return train::Voting::kMajority;
  throw UsageError("eval.voting must be mean or majority");
}

inline mil::Aggregation parse_agg(const std::string& s) {
  try {
    return mil::parse_aggregation(s);
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  highlight::write_text(p, text);
}

inline nnet::OptimizerConfig optimizer_from(const Config& c) {
  nnet::OptimizerConfig o;
  o.learning_rate = c.real("optim.lr");
  o.momentum = c.real("optim.momentum");
  o.l1_rho = c.real("optim.l1_rho");
  o.decay_factor = c.real("optim.decay");
  o.plateau_patience = static_cast<int>(c.integer("optim.patience"));
  return o;
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline int cmd_synth(const Config& c, Io& io) {
  const std::filesystem::path out = c.required("out");
  const auto seed = detail::seed_of(c);
  const auto kind = c.str("kind");
  if (kind == "corpus") {
    auto classes = synth::default_classes();
    const auto k = c.count("classes");
    if (k == 0 || k > classes.size())
      throw UsageError("classes must lie in 1.." + std::to_string(classes.size()));
    classes.resize(k);
    const auto m = synth::synth_corpus(out, classes, c.count("clips_per_class"), seed);
    m.save(out / "manifest.tsv");
    io.out << "wrote " << m.size() << " clips to " << (out / "manifest.tsv").string() << "\n";
  } else if (kind == "highlight") {
    synth::HighlightSynthConfig h;
    h.videos = c.count("highlight.videos");
    h.moments_per_video = c.count("highlight.moments");
    h.positive_rate = c.real("highlight.positive_rate");
    h.moment_sec = c.real("highlight.moment_sec");
    const auto classes = synth::default_classes();
    const auto ev = c.count("highlight.event_class");
    if (ev >= classes.size()) throw UsageError("highlight.event_class out of range");
    h.event = classes[ev];
    h.seed = seed;
    const auto segs = synth::synth_highlight_set(out, h);
    io.out << "wrote " << segs.size() << " moments to " << (out / "segments.tsv").string() << "\n";
  } else {
    throw UsageError("kind must be corpus or highlight");
  }
  return 0;
}

inline int cmd_augment(const Config& c, Io& io) {
  const auto in = Manifest::load(c.required("manifest"));
  const std::filesystem::path out = c.required("out");
  augment::AugmentConfig a;
  a.n_total = c.count("augment.n_total");
  a.emda_fraction = c.real("augment.emda_fraction");
  if (!c.str("augment.max_delay_sec").empty()) a.max_delay_sec = c.real("augment.max_delay_sec");
  a.audio_dir = c.required("augment.audio_dir");
  a.seed = derive_seed(detail::seed_of(c), "cli.augment", 0);
  const auto dir = out.has_parent_path() ? out.parent_path() : std::filesystem::path(".");
  std::filesystem::create_directories(dir);
  const auto m = augment::augment_dataset(in.rebased(dir), a);
  if (c.flag("augment.materialize")) augment::materialize_emda(m);
  m.save(out);
  io.out << "wrote " << m.size() << " records (" << m.size() - in.size() << " augmented) to " << out.string() << "\n";
  return 0;
}

inline int cmd_train(const Config& c, Io& io) {
  const auto seed = detail::seed_of(c);
  const std::filesystem::path out = c.required("out");
  std::filesystem::create_directories(out);
  auto all = Manifest::load(c.required("manifest"));
  Manifest tr = all, te;
  const bool have_test = !c.str("test_manifest").empty();
  if (have_test) {
    te = Manifest::load(c.str("test_manifest"));
  } else if (c.real("split.fraction") < 1.0) {
    std::tie(tr, te) = train::split_dataset(all, c.real("split.fraction"), derive_seed(seed, "cli.split", 0));
  }
  if (c.real("subset.fraction") < 1.0)
    tr = train::subset_per_class(tr, c.real("subset.fraction"), derive_seed(seed, "cli.subset", 0));
  tr.rebased(out).save(out / "train.tsv");
  if (!te.empty()) te.rebased(out).save(out / "test.tsv");

  train::RunConfig rc;
  rc.arch = c.str("arch");
  rc.n_classes = c.count("classes");
  rc.batch_size = c.count("batch_size");
  rc.epochs = c.count("epochs");
  rc.patch_frames = c.count("patch_frames");
  rc.eval_overlap = c.real("eval.overlap");
  rc.voting = detail::parse_voting(c.str("eval.voting"));
  rc.optimizer = detail::optimizer_from(c);
  rc.mil_enabled = c.flag("mil.enabled");
  rc.mil_bag_size = c.count("mil.bag_size");
  rc.mil_aggregation = detail::parse_agg(c.str("mil.aggregation"));
  rc.seed = derive_seed(seed, "cli.train", 0);
  try {
    rc.validate();
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }

  const auto train_streams = train::load_streams(tr);
  std::vector<train::LabeledStream> test_streams;
  if (!te.empty()) test_streams = train::load_streams(te);
  if (io.verbosity > 0)
    io.log << "training on " << train_streams.size() << " clips, " << test_streams.size() << " held out\n";
  const auto res = train::train(rc, train_streams, te.empty() ? nullptr : &test_streams,
                                [&](const train::EpochMetrics& m) {
                                  if (io.verbosity > 0)
                                    io.log << "epoch " << m.epoch << " " << m.split << " loss " << format_double(m.loss)
                                           << " accuracy " << format_double(m.accuracy) << "\n";
                                });
  nnet::save_checkpoint(out / "model.aen1", nnet::to_checkpoint(res.net));
  detail::write_file(out / "metrics.csv", train::metrics_csv(res.metrics));
  if (res.final_eval) {
    detail::write_file(out / "report.txt", res.final_eval->to_text());
    io.out << res.final_eval->to_text();
  } else {
    io.out << "trained " << rc.epochs << " epochs\n";
  }
  return 0;
}

inline int cmd_eval(const Config& c, Io& io) {
  const auto net = zoo::network_from_checkpoint<float>(nnet::read_checkpoint(c.required("checkpoint")));
  const auto m = Manifest::load(c.required("manifest"));
  const auto frames = net.input_shape.at(2);
  const auto rep = train::evaluate(net, train::load_streams(m), frames, c.real("eval.overlap"),
                                   detail::parse_voting(c.str("eval.voting")));
  for (const auto& s : rep.skipped) io.log << "skipped " << s << ": shorter than half a patch\n";
  if (!c.str("out").empty()) detail::write_file(c.str("out"), rep.to_text());
  io.out << rep.to_text();
  return 0;
}

inline int cmd_extract(const Config& c, Io& io) {
  const auto net = zoo::network_from_checkpoint<float>(nnet::read_checkpoint(c.required("checkpoint")));
  const std::filesystem::path out = c.required("out");
  const auto frames = c.count("patch_frames");
  const auto overlap = c.real("overlap");
  const bool by_segments = !c.str("segments").empty(), by_manifest = !c.str("manifest").empty();
  if (by_segments == by_manifest) throw UsageError("give exactly one of segments= or manifest=");
  if (by_segments) {
    const std::filesystem::path seg_path = c.str("segments");
    const auto segs = synth::load_segments(seg_path);
    const auto ms = highlight::moment_features(net, segs, seg_path.parent_path(), frames, overlap);
    detail::write_file(out, highlight::moments_to_string(ms));
    io.out << "wrote " << ms.size() << " moments to " << out.string() << "\n";
  } else {
    const auto m = Manifest::load(c.str("manifest"));
    std::vector<features::FeatureRecord> rows;
    for (const auto& r : m.records)
      for (auto& f : features::extract_stream(net, train::load_clip_stream(m, r), frames, overlap))
        rows.push_back({r.clip_id, std::move(f)});
    detail::write_file(out, features::features_to_string(rows));
    io.out << "wrote " << rows.size() << " features to " << out.string() << "\n";
  }
  return 0;
}

inline highlight::RankerConfig ranker_config(const Config& c) {
  highlight::RankerConfig r;
  try {
    r.loss.kind = highlight::parse_loss(c.str("loss"));
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  r.loss.delta = c.real("delta");
  r.loss.instances = c.count("instances");
  r.loss.printed_forms = c.flag("printed_forms");
  r.hidden = detail::parse_widths(c.str("hidden"));
  r.runs = c.count("runs");
  r.epochs = c.count("epochs");
  r.groups_per_batch = c.count("batch_size");
  r.optimizer.learning_rate = c.real("optim.lr");
  r.optimizer.momentum = c.real("optim.momentum");
  r.seed = derive_seed(detail::seed_of(c), "cli.rank", 0);
  try {
    r.validate();
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  return r;
}

inline int cmd_rank(const Config& c, Io& io) {
  const auto ms = highlight::load_moments(c.required("moments"));
  const auto cfg = ranker_config(c);
  std::vector<highlight::MomentRecord> tr = ms, te = ms;
  const double frac = c.real("split.fraction");
  if (frac < 1.0) {
    auto [a, b] = highlight::split_videos(ms, frac, derive_seed(detail::seed_of(c), "cli.rank.split", 0));
    tr = highlight::select_videos(ms, a);
    te = highlight::select_videos(ms, b);
  }
  for (const auto& v : highlight::unpairable_videos(tr)) io.log << "video " << v << " has no pairs; excluded\n";
  const auto model = highlight::train_ranker(tr, cfg, [&](std::size_t run, std::size_t epoch, double loss) {
    if (io.verbosity > 1) io.log << "run " << run << " epoch " << epoch << " loss " << format_double(loss) << "\n";
  });
  const auto scores = highlight::score_moments(model, te);
  detail::write_file(c.required("out"), highlight::scores_to_string(te, scores));
  const auto rep = highlight::mean_average_precision(te, scores);
  for (const auto& v : rep.excluded) io.log << "video " << v << " has no positives; excluded from mAP\n";
  io.out << "mAP " << format_double(rep.map) << "\n";
  return 0;
}

inline int cmd_map(const Config& c, Io& io) {
  const auto ms = highlight::load_moments(c.required("moments"));
  const auto text = highlight::read_text(c.required("scores"));
  // Only moments present in the scores file take part.
  std::set<std::pair<std::string, std::size_t>> keys;
  for (const auto& line : [&] {
         std::vector<std::string> lines;
         std::istringstream in(text);
         for (std::string l; std::getline(in, l);)
           if (!l.empty()) lines.push_back(l);
         return lines;
       }()) {
    const auto f = highlight::split_tabs(line);
    if (f.size() != 3) throw ParseError("scores file: expected 3 fields per line");
    keys.insert({f[0], static_cast<std::size_t>(parse_int(f[1]))});
  }
  std::vector<highlight::MomentRecord> scored;
  for (const auto& m : ms)
    if (keys.count({m.video_id, m.moment_id})) scored.push_back(m);
  if (scored.size() != keys.size()) throw FormatError("scores file names moments missing from the moments file");
  const auto rep = highlight::mean_average_precision(scored, highlight::parse_scores(text, scored));
  for (const auto& v : rep.excluded) io.log << "video " << v << " has no positives; excluded\n";
  for (const auto& [vid, ap] : rep.per_video) io.out << vid << "\t" << format_double(ap) << "\n";
  io.out << "mAP " << format_double(rep.map) << "\n";
  return 0;
}

inline int cmd_gradcheck(const Config& c, Io& io) {
  const auto seed = detail::seed_of(c);
  const auto frames = c.count("frames"), batch = c.count("batch"), classes = c.count("classes");
  if (batch == 0 || classes < 2) throw UsageError("gradcheck needs batch >= 1 and classes >= 2");
  const double tol = c.real("tolerance");
  zoo::ArchSpec spec;
  try {
    spec = zoo::arch_spec(c.str("arch"), classes, frames);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  auto net = zoo::build<double>(spec, derive_seed(seed, "gradcheck.init", 0));
  for (auto& l : net.layers)
    for (auto& b : l.bias.vec()) b = 0.01;  // keeps pre-activations off exact ReLU/pool ties
  nnet::GradCheckOptions opt;
  opt.samples_per_layer = c.count("samples");
  opt.input_samples = c.count("samples");
  opt.eps = c.real("eps");
  opt.floor = c.real("floor");
  opt.seed = derive_seed(seed, "gradcheck.sample", 0);
  opt.dropout_seed = derive_seed(seed, "gradcheck.dropout", 0);
  opt.rho = c.real("optim.l1_rho");
  const auto agg = c.str("mil.aggregation");
  if (agg != "none") detail::parse_agg(agg);
  const std::size_t bag = agg == "none" ? 1 : c.count("mil.bag_size");
  if (bag == 0) throw UsageError("mil.bag_size must be at least 1");
  Rng rng(derive_seed(seed, "gradcheck.data", 0));
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<int> lab(0, static_cast<int>(classes) - 1);
  Shape shape{batch * bag};
  shape.insert(shape.end(), net.input_shape.begin(), net.input_shape.end());
  Tensor<double> x(shape);
  for (auto& v : x.vec()) v = nd(rng);
  std::vector<int> labels(batch);
  for (auto& y : labels) y = lab(rng);
  const auto rep = agg == "none" ? nnet::grad_check(net, x, labels, opt)
                                 : mil::mil_grad_check(net, x, labels, bag, detail::parse_agg(agg), opt);
  for (const auto& l : rep.layers)
    io.out << "layer " << l.layer << " " << l.kind << " checked " << l.checked << " at_tie " << l.skipped << " max_rel_error "
           << format_double(l.max_rel_error) << "\n";
  io.out << "max_rel_error " << format_double(rep.max_rel_error) << "\n";
  if (!rep.passed(tol)) {
    io.log << "gradient check failed: " << format_double(rep.max_rel_error) << " >= " << format_double(tol) << "\n";
    return 3;
  }
  return 0;
}

// ---------------------------------------------------------------------------

inline std::vector<KeySpec> optimizer_keys() {
  return {{"optim.lr", "0.003", "SGD learning rate"},
          {"optim.momentum", "0.9", "momentum coefficient"},
          {"optim.l1_rho", "1e-06", "L1 penalty weight"},
          {"optim.decay", "0.5", "learning-rate factor on plateau"},
          {"optim.patience", "3", "epochs without improvement before decay"}};
}

inline std::vector<Command> commands() {
  std::vector<Command> cmds;
  cmds.push_back({"synth",
                  "write a synthetic event corpus or highlight set",
                  {{"out", "", "output directory"},
                   {"kind", "corpus", "corpus or highlight"},
                   {"classes", "8", "number of event classes"},
                   {"clips_per_class", "20", "clips per class"},
                   {"highlight.videos", "20", "highlight set: videos"},
                   {"highlight.moments", "8", "highlight set: moments per video"},
                   {"highlight.positive_rate", "0.25", "highlight set: share of highlight moments"},
                   {"highlight.moment_sec", "3", "highlight set: moment length in seconds"},
                   {"highlight.event_class", "0", "highlight set: event class of highlight moments"}},
                  cmd_synth});
  cmds.push_back({"augment",
                  "expand a manifest with EMDA and VTLP records",
                  {{"manifest", "", "input manifest"},
                   {"out", "", "output manifest path"},
                   {"augment.n_total", "0", "number of augmented records"},
                   {"augment.emda_fraction", "0.5", "share of EMDA records"},
                   {"augment.max_delay_sec", "", "EMDA delay bound (empty: default)"},
                   {"augment.audio_dir", "aug", "EMDA audio directory relative to the output"},
                   {"augment.materialize", "true", "write EMDA audio"}},
                  cmd_augment});
  std::vector<KeySpec> train_keys{{"manifest", "", "training manifest"},
                                  {"test_manifest", "", "held-out manifest (empty: split the training one)"},
                                  {"split.fraction", "0.75", "training share per class when splitting"},
                                  {"subset.fraction", "1", "per-class share of the training split to keep"},
                                  {"out", "", "output directory"},
                                  {"arch", "A-mini", "A, B, A-mini or a block string"},
                                  {"classes", "0", "class count (0: from labels)"},
                                  {"batch_size", "32", "minibatch size"},
                                  {"epochs", "30", "training epochs"},
                                  {"patch_frames", "200", "patch length L (200 or 400)"},
                                  {"eval.overlap", "0.5", "patch overlap at evaluation"},
                                  {"eval.voting", "mean", "mean or majority"},
                                  {"mil.enabled", "false", "train on bags"},
                                  {"mil.bag_size", "2", "instances per bag"},
                                  {"mil.aggregation", "max", "max or noisy_or"}};
  for (auto& k : optimizer_keys()) train_keys.push_back(k);
  cmds.push_back({"train", "train a classifier and write model.aen1, metrics.csv", train_keys, cmd_train});
  cmds.push_back({"eval",
                  "evaluate a checkpoint on a manifest",
                  {{"checkpoint", "", "model checkpoint"},
                   {"manifest", "", "clips to evaluate"},
                   {"out", "", "report path (optional)"},
                   {"eval.overlap", "0.5", "patch overlap"},
                   {"eval.voting", "mean", "mean or majority"}},
                  cmd_eval});
  cmds.push_back({"extract",
                  "extract AENet features for a manifest or highlight moments",
                  {{"checkpoint", "", "model checkpoint trained at the patch length"},
                   {"manifest", "", "clips: write a feature file"},
                   {"segments", "", "highlight segments: write a moments file"},
                   {"out", "", "output path"},
                   {"patch_frames", "200", "patch length"},
                   {"overlap", "0.5", "patch overlap"}},
                  cmd_extract});
  cmds.push_back({"rank",
                  "train the highlight ranker and score held-out videos",
                  {{"moments", "", "moments file"},
                   {"out", "", "scores file"},
                   {"loss", "ranking", "ranking, huber or mirank"},
                   {"delta", "1", "Huber threshold"},
                   {"instances", "2", "positives per MIRank group"},
                   {"printed_forms", "false", "use the literal printed loss forms"},
                   {"hidden", "64,16", "hidden layer widths"},
                   {"runs", "5", "ensemble size"},
                   {"epochs", "100", "epochs per run"},
                   {"batch_size", "16", "pair groups per step"},
                   {"optim.lr", "0.01", "SGD learning rate"},
                   {"optim.momentum", "0.9", "momentum coefficient"},
                   {"split.fraction", "0.5", "share of videos used for training (1: train and score all)"}},
                  cmd_rank});
  cmds.push_back({"map",
                  "mean average precision of a scores file",
                  {{"moments", "", "moments file with labels"}, {"scores", "", "scores file"}},
                  cmd_map});
  cmds.push_back({"gradcheck",
                  "compare analytic and finite-difference gradients",
                  {{"arch", "A-mini", "architecture"},
                   {"classes", "8", "class count"},
                   {"frames", "12", "input frames (small keeps the check fast)"},
                   {"batch", "2", "samples (bags with MIL)"},
                   {"samples", "200", "sampled entries per layer"},
                   {"eps", "1e-05", "finite-difference step"},
                   {"floor", "1e-06", "relative-error denominator floor"},
                   {"tolerance", "0.0001", "maximum relative error"},
                   {"optim.l1_rho", "1e-06", "L1 penalty weight"},
                   {"mil.aggregation", "none", "none, max or noisy_or"},
                   {"mil.bag_size", "2", "instances per bag"}},
                  cmd_gradcheck});
  for (auto& c : cmds) c.keys.push_back({"seed", "0", "global seed"});
  return cmds;
}

}  // namespace aenet::cli
