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

#include <gtest/gtest.h>

#include <sstream>

#include "aenet/cli/app.hpp"
#include "test_util.hpp"

namespace aenet::cli {
namespace {

struct Result {
  int code;
  std::string out, err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

TEST(Cli, NoArgumentsPrintsUsageAndFails) {
  const auto r = call({});
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(contains(r.err, "usage: aenet"));
  for (const auto& c : commands()) EXPECT_TRUE(contains(r.err, c.name)) << c.name;
}

TEST(Cli, HelpSucceeds) {
  EXPECT_EQ(call({"--help"}).code, 0);
  const auto r = call({"train", "--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(contains(r.out, "optim.lr (0.003)"));
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(call({"frobnicate"}).code, 1);
  EXPECT_EQ(call({"map", "--bogus", "1"}).code, 1);
  EXPECT_EQ(call({"map", "bogus=1"}).code, 1);
  EXPECT_EQ(call({"map", "-x"}).code, 1);
  EXPECT_EQ(call({"map", "justaword"}).code, 1);
  EXPECT_EQ(call({"map", "--jobs", "0"}).code, 1);
  EXPECT_EQ(call({"map", "--config", "/nonexistent/cfg"}).code, 1);
  const auto r = call({"map", "--set", "nokey=3"});
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(contains(r.err, "unknown config key 'nokey'"));
  EXPECT_EQ(call({"map"}).code, 1);  // required moments missing
  EXPECT_EQ(call({"gradcheck", "tolerance=abc"}).code, 1);
  EXPECT_EQ(call({"gradcheck", "arch=zzz"}).code, 1);
}

TEST(Cli, MissingDataExitsTwo) {
  const auto r = call({"map", "moments=/nonexistent/m.tsv", "scores=/nonexistent/s.tsv"});
  EXPECT_EQ(r.code, 2);
}

// Later sources win: defaults < config file < --set < key=value < --seed.
TEST(Cli, ConfigPrecedenceAndEcho) {
  testing::TempDir dir("cli_cfg");
  {
    std::ofstream f(dir / "run.cfg");
    f << "# comment\nmoments = /from/file\nscores=/file/scores\nseed=4\n";
  }
  auto r = call({"map", "--config", (dir / "run.cfg").string()});
  EXPECT_TRUE(contains(r.err, "moments=/from/file\n"));
  EXPECT_TRUE(contains(r.err, "seed=4\n"));

  r = call({"map", "--config", (dir / "run.cfg").string(), "--set", "moments=/from/set", "scores=/from/extra",
            "--seed", "9"});
  EXPECT_TRUE(contains(r.err, "moments=/from/set\n"));
  EXPECT_TRUE(contains(r.err, "scores=/from/extra\n"));
  EXPECT_TRUE(contains(r.err, "seed=9\n"));

  r = call({"map", "--moments", "/dash/form", "--scores=/eq/form"});
  EXPECT_TRUE(contains(r.err, "moments=/dash/form\n"));
  EXPECT_TRUE(contains(r.err, "scores=/eq/form\n"));
}

TEST(Cli, ConfigParsing) {
  Config c({{"a", "1", ""}, {"b", "yes", ""}, {"c", "", ""}});
  c.merge_text("  a = 7 \n\n# c=2\n");
  EXPECT_EQ(c.integer("a"), 7);
  EXPECT_TRUE(c.flag("b"));
  EXPECT_THROW(c.required("c"), UsageError);
  EXPECT_THROW(c.merge_text("a 3\n"), UsageError);
  c.set("b", "maybe");
  EXPECT_THROW(c.flag("b"), UsageError);
  c.set("a", "-2");
  EXPECT_THROW(c.count("a"), UsageError);
  EXPECT_EQ(c.echo(), "a=-2\nb=maybe\nc=\n");
}

TEST(Cli, GradcheckPassesAndStrictToleranceExitsThree) {
  const std::vector<std::string> base{"gradcheck", "arch=conv:4,pool:2x2,fc:8", "classes=3", "samples=40"};
  auto r = call(base);
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(contains(r.out, "max_rel_error"));
  EXPECT_TRUE(contains(r.out, " input "));
  auto mil = base;
  mil.push_back("mil.aggregation=noisy_or");
  EXPECT_EQ(call(mil).code, 0);
  auto strict = base;
  strict.push_back("tolerance=0");
  r = call(strict);
  EXPECT_EQ(r.code, 3);
  EXPECT_TRUE(contains(r.err, "gradient check failed"));
}

TEST(Cli, PipelineRunsEndToEnd) {
  testing::TempDir dir("cli_pipe");
  const auto d = [&](const std::string& s) { return (dir / s).string(); };
  ASSERT_EQ(call({"synth", "out=" + d("corpus"), "classes=2", "clips_per_class=4"}).code, 0);
  ASSERT_TRUE(std::filesystem::exists(dir / "corpus" / "manifest.tsv"));
  auto r = call({"augment", "manifest=" + d("corpus/manifest.tsv"), "out=" + d("aug/manifest.tsv"),
                 "augment.n_total=2"});
  ASSERT_EQ(r.code, 0) << r.err;
  r = call({"train", "manifest=" + d("aug/manifest.tsv"), "out=" + d("run"), "arch=conv:4,pool:4x4,fc:16,fc:8",
            "epochs=1", "batch_size=4"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(contains(r.out, "accuracy"));
  for (const char* f : {"model.aen1", "metrics.csv", "report.txt", "train.tsv", "test.tsv"})
    EXPECT_TRUE(std::filesystem::exists(dir / "run" / f)) << f;
  r = call({"eval", "checkpoint=" + d("run/model.aen1"), "manifest=" + d("run/test.tsv")});
  EXPECT_EQ(r.code, 0) << r.err;
  const auto report = testing::slurp(dir / "run" / "report.txt");
  EXPECT_EQ(r.out, std::string(report.begin(), report.end()));
  r = call({"extract", "checkpoint=" + d("run/model.aen1"), "manifest=" + d("run/test.tsv"),
            "out=" + d("feat.txt")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "feat.txt"));
  // both or neither of manifest= and segments=: usage error
  EXPECT_EQ(call({"extract", "checkpoint=" + d("run/model.aen1"), "out=" + d("x")}).code, 1);

  ASSERT_EQ(call({"synth", "kind=highlight", "out=" + d("hl"), "highlight.videos=4", "highlight.moments=4"}).code, 0);
  r = call({"extract", "checkpoint=" + d("run/model.aen1"), "segments=" + d("hl/segments.tsv"),
            "out=" + d("moments.tsv")});
  ASSERT_EQ(r.code, 0) << r.err;
  r = call({"rank", "moments=" + d("moments.tsv"), "out=" + d("scores.tsv"), "runs=1", "epochs=3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(contains(r.out, "mAP "));
  r = call({"map", "moments=" + d("moments.tsv"), "scores=" + d("scores.tsv")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(contains(r.out, "mAP "));
}

}  // namespace
}  // namespace aenet::cli
