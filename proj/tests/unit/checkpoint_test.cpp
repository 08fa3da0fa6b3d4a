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

#include "aenet/model_zoo.hpp"
#include "aenet/nnet/checkpoint.hpp"
#include "test_util.hpp"

namespace aenet::nnet {
namespace {

TEST(Checkpoint, RoundTripRestoresIdenticalOutputs) {
  aenet::testing::TempDir dir("ckpt");
  const auto spec = zoo::arch_spec("conv:4,pool:2x2,fc:8", 3, 12);
  const auto net = zoo::build<float>(spec, 5);
  save_checkpoint(dir / "m.aen", to_checkpoint(net));
  const auto loaded = zoo::network_from_checkpoint<float>(read_checkpoint(dir / "m.aen"));
  EXPECT_EQ(loaded.arch, net.arch);
  Tensor<float> x({2, 3, 50, 12});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(std::sin(0.37 * i));
  EXPECT_EQ(forward(loaded, x, Mode::kEval).output(), forward(net, x, Mode::kEval).output());
  EXPECT_EQ(to_checkpoint(loaded), to_checkpoint(net));
}

TEST(Checkpoint, RecordNamesAndMagic) {
  const auto net = zoo::build<float>(zoo::arch_spec("fc:4", 2, 5), 1);
  const auto c = to_checkpoint(net);
  ASSERT_EQ(c.params.size(), 4u);
  EXPECT_EQ(c.params[0].name, "layer1.weight");
  EXPECT_EQ(c.params[1].name, "layer1.bias");
  const auto bytes = encode_checkpoint(c);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "AEN1");
  EXPECT_EQ(decode_checkpoint(bytes), c);
}

TEST(Checkpoint, CorruptInputIsReported) {
  const auto bytes = encode_checkpoint(to_checkpoint(zoo::build<float>(zoo::arch_spec("fc:4", 2, 5), 1)));
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  EXPECT_THROW(decode_checkpoint(truncated), ParseError);
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad), FormatError);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(decode_checkpoint(trailing), ParseError);
  aenet::testing::TempDir dir("ckpt");
  EXPECT_THROW(read_checkpoint(dir / "missing.aen"), IoError);
}

TEST(Checkpoint, GeometryMismatchIsShapeError) {
  const auto c = to_checkpoint(zoo::build<float>(zoo::arch_spec("fc:4", 2, 5), 1));
  auto other = zoo::build_structure<float>(zoo::arch_spec("fc:4", 2, 6));
  EXPECT_THROW(assign_parameters(other, c), ShapeError);
  auto wider = zoo::build_structure<float>(zoo::arch_spec("fc:5", 2, 5));
  EXPECT_THROW(assign_parameters(wider, c), ShapeError);
}

}  // namespace
}  // namespace aenet::nnet
