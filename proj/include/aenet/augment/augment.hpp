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

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "aenet/augment/emda.hpp"
#include "aenet/augment/manifest.hpp"
#include "aenet/augment/vtlp.hpp"
#include "aenet/common.hpp"
#include "aenet/dsp/signal.hpp"
#include "aenet/dsp/wav.hpp"

namespace aenet::augment {

struct AugmentConfig {
  std::size_t n_total = 0;
  double emda_fraction = 0.5;
  std::uint64_t seed = 0;
  std::optional<double> max_delay_sec;
  /// Directory (relative to the output manifest) for materialised EMDA clips.
  std::string audio_dir = "aug";
};

/// Per-class output counts: n_total spread over classes, differing by at most
/// one, the extra units going to the lowest class ids.
inline std::map<int, std::size_t> balanced_counts(const std::vector<int>& class_ids,
                                                  std::size_t n_total) {
  std::map<int, std::size_t> out;
  if (class_ids.empty()) return out;
  const std::size_t k = class_ids.size(), base = n_total / k, extra = n_total % k;
  for (std::size_t i = 0; i < k; ++i) out[class_ids[i]] = base + (i < extra ? 1 : 0);
  return out;
}

inline ParamBlob emda_params_blob(const std::string& src1, const std::string& src2,
                                  const EmdaParams& p) {
  ParamBlob b;
  b.set("src1", src1);
  b.set("src2", src2);
  b.set("alpha", p.alpha);
  b.set("beta", p.beta);
  b.set("f0a", p.psi1.f0);
  b.set("ga", p.psi1.gain_db);
  b.set("qa", p.psi1.q);
  b.set("f0b", p.psi2.f0);
  b.set("gb", p.psi2.gain_db);
  b.set("qb", p.psi2.q);
  if (p.max_delay_sec) b.set("maxdelay", *p.max_delay_sec);
  return b;
}

inline EmdaParams emda_params_from_blob(const ParamBlob& b) {
  EmdaParams p;
  p.alpha = b.get_double("alpha");
  p.beta = b.get_double("beta");
  p.psi1 = {b.get_double("f0a"), b.get_double("ga"), b.get_double("qa")};
  p.psi2 = {b.get_double("f0b"), b.get_double("gb"), b.get_double("qb")};
  if (b.has("maxdelay")) p.max_delay_sec = b.get_double("maxdelay");
  return p;
}

/// Class-balanced expansion of a manifest with EMDA and VTLP records. Only
/// the parameter draws happen here; EMDA audio is produced by materialize_emda.
/// The result is a pure function of (manifest, cfg).
inline Manifest augment_dataset(const Manifest& in, const AugmentConfig& cfg) {
  if (in.empty()) throw DomainError("augment_dataset: empty manifest");
  if (!(cfg.emda_fraction >= 0.0 && cfg.emda_fraction <= 1.0))
    throw DomainError("augment_dataset: emda_fraction must lie in [0, 1]");
  Manifest out = in;
  if (cfg.n_total == 0) return out;

  std::map<int, std::vector<std::size_t>> sources;
  for (std::size_t i = 0; i < in.records.size(); ++i)
    if (in.records[i].origin == Origin::kRaw) sources[in.records[i].class_id].push_back(i);
  if (sources.empty()) throw DomainError("augment_dataset: manifest has no raw clips");
  std::vector<int> class_ids;
  for (auto& [c, _] : sources) class_ids.push_back(c);
  const auto counts = balanced_counts(class_ids, cfg.n_total);

  std::size_t index = 0;
  for (int c : class_ids) {
    const auto& src = sources.at(c);
    const std::size_t count = counts.at(c);
    const auto n_emda = static_cast<std::size_t>(std::llround(count * cfg.emda_fraction));
    for (std::size_t j = 0; j < count; ++j, ++index) {
      Rng rng(derive_seed(cfg.seed, "augment", index));
      char id[32];
      ClipRecord r;
      r.class_id = c;
      if (j < n_emda) {
        std::uniform_int_distribution<std::size_t> pick(0, src.size() - 1);
        const std::size_t a = pick(rng);
        std::size_t b = a;
        if (src.size() > 1) {
          std::uniform_int_distribution<std::size_t> pick_other(0, src.size() - 2);
          b = pick_other(rng);
          if (b >= a) ++b;
        }
        const EmdaParams p = draw_emda_params(rng, cfg.max_delay_sec);
        std::snprintf(id, sizeof id, "aug%06zu_emda", index);
        r.clip_id = id;
        r.path = cfg.audio_dir + "/" + r.clip_id + ".wav";
        r.origin = Origin::kEmda;
        r.params = emda_params_blob(in.records[src[a]].clip_id, in.records[src[b]].clip_id, p);
      } else {
        std::uniform_int_distribution<std::size_t> pick(0, src.size() - 1);
        const std::size_t a = pick(rng);
        std::uniform_real_distribution<double> warp(kVtlpMinWarp, kVtlpMaxWarp);
        std::snprintf(id, sizeof id, "aug%06zu_vtlp", index);
        r.clip_id = id;
        r.path = in.records[src[a]].path;
        r.origin = Origin::kVtlp;
        r.params.set("src", in.records[src[a]].clip_id);
        r.params.set("warp", warp(rng));
      }
      out.records.push_back(std::move(r));
    }
  }
  return out;
}

/// Render one EMDA record from its recorded sources and parameters.
inline dsp::Waveform render_emda(const Manifest& m, const ClipRecord& r) {
  if (r.origin != Origin::kEmda) throw DomainError("render_emda: record is not an EMDA clip");
  const auto s1 = dsp::standardize(dsp::load_wav(m.resolve(m.find(r.params.get("src1")))));
  const auto s2 = dsp::standardize(dsp::load_wav(m.resolve(m.find(r.params.get("src2")))));
  return emda_mix(s1, s2, emda_params_from_blob(r.params));
}

/// Write every EMDA record's audio under the manifest's base directory.
inline void materialize_emda(const Manifest& m) {
  for (const auto& r : m.records) {
    if (r.origin != Origin::kEmda) continue;
    const auto path = m.resolve(r);
    std::filesystem::create_directories(path.parent_path());
    dsp::write_wav16(path, render_emda(m, r));
  }
}

}  // namespace aenet::augment
