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
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "aenet/common.hpp"

namespace aenet {

enum class Origin { kRaw, kEmda, kVtlp };

inline std::string to_string(Origin o) {
  switch (o) {
    case Origin::kRaw: return "raw";
    case Origin::kEmda: return "emda";
    case Origin::kVtlp: return "vtlp";
  }
  return "raw";
}

inline Origin parse_origin(std::string_view s) {
  if (s == "raw") return Origin::kRaw;
  if (s == "emda") return Origin::kEmda;
  if (s == "vtlp") return Origin::kVtlp;
  throw ParseError("unknown clip origin '" + std::string(s) + "'");
}

/// Ordered key=value list, serialised as "k1=v1,k2=v2" ("-" when empty).
class ParamBlob {
 public:
  void set(std::string key, std::string value) {
    for (auto& [k, v] : items_)
      if (k == key) {
        v = std::move(value);
        return;
      }
    items_.emplace_back(std::move(key), std::move(value));
  }
  void set(std::string key, double value) { set(std::move(key), format_double(value)); }

  bool has(std::string_view key) const {
    return std::any_of(items_.begin(), items_.end(), [&](auto& kv) { return kv.first == key; });
  }
  const std::string& get(std::string_view key) const {
    for (auto& [k, v] : items_)
      if (k == key) return v;
    throw ParseError("param blob has no key '" + std::string(key) + "'");
  }
  double get_double(std::string_view key) const { return parse_double(get(key)); }

  const std::vector<std::pair<std::string, std::string>>& items() const { return items_; }

  std::string str() const {
    if (items_.empty()) return "-";
    std::string out;
    for (std::size_t i = 0; i < items_.size(); ++i) {
      if (i) out += ',';
      out += items_[i].first + '=' + items_[i].second;
    }
    return out;
  }

  static ParamBlob parse(std::string_view s) {
    ParamBlob b;
    if (s == "-" || s.empty()) return b;
    std::size_t pos = 0;
    while (pos <= s.size()) {
      const std::size_t comma = std::min(s.find(',', pos), s.size());
      const std::string_view item = s.substr(pos, comma - pos);
      const std::size_t eq = item.find('=');
      if (eq == std::string_view::npos || eq == 0)
        throw ParseError("malformed param item '" + std::string(item) + "'");
      b.set(std::string(item.substr(0, eq)), std::string(item.substr(eq + 1)));
      pos = comma + 1;
    }
    return b;
  }

  friend bool operator==(const ParamBlob&, const ParamBlob&) = default;

 private:
  std::vector<std::pair<std::string, std::string>> items_;
};

struct ClipRecord {
  std::string clip_id;
  std::string path;  // relative paths resolve against the manifest's directory
  int class_id = 0;
  Origin origin = Origin::kRaw;
  ParamBlob params;
  friend bool operator==(const ClipRecord&, const ClipRecord&) = default;
};

/// Dataset manifest: one tab-separated record per line.
///   clip_id <TAB> path <TAB> class_id <TAB> origin <TAB> param-blob
struct Manifest {
  std::vector<ClipRecord> records;
  std::filesystem::path base_dir;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }

  std::filesystem::path resolve(const ClipRecord& r) const {
    const std::filesystem::path p(r.path);
    return p.is_absolute() ? p : base_dir / p;
  }

  /// Records grouped by class id (ascending), preserving manifest order inside a class.
  std::map<int, std::vector<std::size_t>> by_class() const {
    std::map<int, std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < records.size(); ++i) out[records[i].class_id].push_back(i);
    return out;
  }

  const ClipRecord& find(std::string_view clip_id) const {
    for (const auto& r : records)
      if (r.clip_id == clip_id) return r;
    throw DomainError("manifest has no clip '" + std::string(clip_id) + "'");
  }

  /// Same records with relative paths re-expressed against `dir`.
  Manifest rebased(const std::filesystem::path& dir) const {
    Manifest out = *this;
    out.base_dir = dir;
    const auto target = std::filesystem::absolute(dir).lexically_normal();
    for (auto& r : out.records) {
      const std::filesystem::path p(r.path);
      if (p.is_absolute()) continue;
      const auto abs = std::filesystem::absolute(base_dir / p).lexically_normal();
      r.path = abs.lexically_relative(target).generic_string();
    }
    return out;
  }

  std::string str() const {
    std::string out;
    for (const auto& r : records)
      out += r.clip_id + '\t' + r.path + '\t' + std::to_string(r.class_id) + '\t' +
             to_string(r.origin) + '\t' + r.params.str() + '\n';
    return out;
  }

  static Manifest parse(std::string_view text, std::filesystem::path base_dir = {}) {
    Manifest m;
    m.base_dir = std::move(base_dir);
    std::size_t line_no = 0, pos = 0;
    while (pos < text.size()) {
      std::size_t nl = text.find('\n', pos);
      if (nl == std::string_view::npos) nl = text.size();
      std::string_view line = text.substr(pos, nl - pos);
      pos = nl + 1;
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line.empty() || line.front() == '#') continue;
      std::vector<std::string_view> f;
      std::size_t p = 0;
      while (true) {
        const std::size_t tab = line.find('\t', p);
        f.push_back(line.substr(p, tab == std::string_view::npos ? std::string_view::npos : tab - p));
        if (tab == std::string_view::npos) break;
        p = tab + 1;
      }
      if (f.size() != 5)
        throw ParseError("manifest line " + std::to_string(line_no) + ": expected 5 fields, got " +
                         std::to_string(f.size()));
      ClipRecord r;
      r.clip_id = std::string(f[0]);
      r.path = std::string(f[1]);
      r.class_id = static_cast<int>(parse_int(f[2]));
      r.origin = parse_origin(f[3]);
      r.params = ParamBlob::parse(f[4]);
      m.records.push_back(std::move(r));
    }
    return m;
  }

  static Manifest load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open manifest " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.parent_path());
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write manifest " + path.string());
    out << str();
  }
};

}  // namespace aenet
