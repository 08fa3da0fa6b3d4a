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
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "aenet/common.hpp"

namespace aenet::cli {

/// Bad invocation: unknown key, malformed value, missing argument. Exit 1.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct KeySpec {
  std::string key;
  std::string default_value;
  std::string help;
};

/// Flat key=value configuration checked against a subcommand's key list.
/// Later sources win: defaults, config file, overrides.
class Config {
 public:
  explicit Config(std::vector<KeySpec> schema) : schema_(std::move(schema)) {
    for (const auto& k : schema_) values_[k.key] = k.default_value;
  }

  const std::vector<KeySpec>& schema() const { return schema_; }

  bool known(const std::string& key) const { return values_.count(key) > 0; }

  void set(const std::string& key, const std::string& value) {
    if (!known(key)) throw UsageError("unknown config key '" + key + "'");
    values_[key] = value;
  }

  /// "key=value"; surrounding blanks trimmed.
  void set_assignment(std::string_view text) {
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw UsageError("expected key=value, got '" + std::string(text) + "'");
    set(trim(text.substr(0, eq)), trim(text.substr(eq + 1)));
  }

  /// Config file text: key=value lines; '#' starts a comment line.
  void merge_text(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
      const auto t = trim(line);
      if (t.empty() || t.front() == '#') continue;
      set_assignment(t);
    }
  }

  void merge_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw UsageError("cannot open config file " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    merge_text(ss.str());
  }

  const std::string& str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw UsageError("unknown config key '" + key + "'");
    return it->second;
  }

  std::string required(const std::string& key) const {
    const auto& v = str(key);
    if (v.empty()) throw UsageError("missing required setting '" + key + "'");
    return v;
  }

  double real(const std::string& key) const {
    try {
      return parse_double(str(key));
    } catch (const Error&) {
      throw UsageError("setting '" + key + "' is not a number: '" + str(key) + "'");
    }
  }

  long long integer(const std::string& key) const {
    try {
      return parse_int(str(key));
    } catch (const Error&) {
      throw UsageError("setting '" + key + "' is not an integer: '" + str(key) + "'");
    }
  }

  std::size_t count(const std::string& key) const {
    const auto v = integer(key);
    if (v < 0) throw UsageError("setting '" + key + "' must be non-negative");
    return static_cast<std::size_t>(v);
  }

  bool flag(const std::string& key) const {
    const auto& v = str(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw UsageError("setting '" + key + "' is not a boolean: '" + v + "'");
  }

  /// Every key in schema order, as a config file that reproduces this run.
  std::string echo() const {
    std::string s;
    for (const auto& k : schema_) s += k.key + "=" + values_.at(k.key) + "\n";
    return s;
  }

  static std::string trim(std::string_view s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string_view::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return std::string(s.substr(a, b - a + 1));
  }

 private:
  std::vector<KeySpec> schema_;
  std::map<std::string, std::string> values_;
};

}  // namespace aenet::cli
