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

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "aenet/cli/commands.hpp"
#include "aenet/cli/config.hpp"
#include "aenet/common.hpp"

namespace aenet::cli {

inline std::string usage(const std::vector<Command>& cmds) {
  std::string s =
      "usage: aenet <command> [--config FILE] [--set key=value]... [--key value]... [key=value]...\n"
      "             [--seed N] [--jobs N] [-v]\n\ncommands:\n";
  for (const auto& c : cmds) s += "  " + c.name + std::string(12 - std::min<std::size_t>(11, c.name.size()), ' ') + c.help + "\n";
  s += "\nrun 'aenet <command> --help' for its keys\n";
  return s;
}

inline std::string command_help(const Command& c) {
  std::string s = "aenet " + c.name + ": " + c.help + "\n\nkeys (default):\n";
  for (const auto& k : c.keys) s += "  " + k.key + " (" + k.default_value + ")  " + k.help + "\n";
  return s;
}

/// Leftover tokens: "key=value", "--key=value" or "--key value".
inline void apply_extras(Config& cfg, const std::vector<std::string>& extras) {
  for (std::size_t i = 0; i < extras.size(); ++i) {
    std::string t = extras[i];
    if (t.rfind("--", 0) == 0) {
      t = t.substr(2);
      if (t.find('=') == std::string::npos) {
        if (!cfg.known(t)) throw UsageError("unknown option '--" + t + "'");
        if (i + 1 >= extras.size()) throw UsageError("option '--" + t + "' needs a value");
        cfg.set(t, extras[++i]);
        continue;
      }
    } else if (!t.empty() && t.front() == '-') {
      throw UsageError("unknown option '" + t + "'");
    }
    cfg.set_assignment(t);
  }
}

/// Exit codes: 0 success, 1 usage, 2 data or format, 3 numerical failure.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  const auto cmds = commands();
  if (args.empty() || args[0] == "-h" || args[0] == "--help") {
    (args.empty() ? err : out) << usage(cmds);
    return args.empty() ? 1 : 0;
  }
  const Command* cmd = nullptr;
  for (const auto& c : cmds)
    if (c.name == args[0]) cmd = &c;
  if (!cmd) {
    err << "aenet: unknown command '" << args[0] << "'\n" << usage(cmds);
    return 1;
  }

  CLI::App app{cmd->help, "aenet " + cmd->name};
  app.allow_extras();
  app.set_help_flag();
  bool help = false;
  std::string config_file;
  std::vector<std::string> sets;
  std::string seed;
  int jobs = 1;
  int verbosity = 0;
  app.add_flag("-h,--help", help);
  app.add_option("--config", config_file);
  app.add_option("--set", sets)->allow_extra_args(false);
  app.add_option("--seed", seed);
  app.add_option("--jobs", jobs);
  app.add_flag("-v,--verbose", verbosity);
  try {
    std::vector<std::string> rest(args.rbegin(), args.rend() - 1);  // CLI11 consumes a reversed list
    app.parse(rest);
    if (help) {
      out << command_help(*cmd);
      return 0;
    }
    if (jobs < 1) throw UsageError("--jobs must be at least 1");
    Config cfg(cmd->keys);
    if (!config_file.empty()) cfg.merge_file(config_file);
    for (const auto& s : sets) cfg.set_assignment(s);
    apply_extras(cfg, app.remaining());
    if (!seed.empty()) cfg.set("seed", seed);
    err << "# aenet " << cmd->name << " effective config\n" << cfg.echo();
    Io io{out, err, verbosity};
    return cmd->run(cfg, io);
  } catch (const CLI::ParseError& e) {
    err << "aenet " << cmd->name << ": " << e.what() << "\n" << command_help(*cmd);
    return 1;
  } catch (const UsageError& e) {
    err << "aenet " << cmd->name << ": " << e.what() << "\n" << command_help(*cmd);
    return 1;
  } catch (const NumericalError& e) {
    err << "aenet " << cmd->name << ": numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "aenet " << cmd->name << ": " << e.what() << "\n";
    return 2;
  }
}

inline int run(int argc, char** argv) {
  return run(std::vector<std::string>(argv + 1, argv + argc));
}

}  // namespace aenet::cli
