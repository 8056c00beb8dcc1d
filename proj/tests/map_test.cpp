// Copyright 2025 The namopush Authors
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

#include "namo/map.hpp"

#include <gtest/gtest.h>

#include "namo/rng.hpp"

namespace namo {
namespace {

const char* kTinyMap =
    "resolution 0.05\n"
    "#####\n"
    "#S.G#\n"
    "#####\n";

TEST(MapTest, ParseAndQuery) {
  StaticMap m = StaticMap::parse(kTinyMap);
  EXPECT_EQ(m.width(), 5);
  EXPECT_EQ(m.height(), 3);
  EXPECT_TRUE(m.wall(0, 0));
  EXPECT_FALSE(m.wall(1, 1));
  EXPECT_FALSE(m.occupied_at(m.start()));
  EXPECT_FALSE(m.occupied_at(m.goal()));
  EXPECT_LT(m.start().x(), m.goal().x());
}

TEST(MapTest, SerializeRoundTrip) {
  StaticMap m = StaticMap::parse(kTinyMap);
  StaticMap m2 = StaticMap::parse(m.serialize());
  EXPECT_EQ(m.serialize(), m2.serialize());
}

TEST(MapTest, WorldCellRoundTripWithinOneCell) {
  StaticMap m(40, 30, 0.05);
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const Vec2 p(rng.uniform(0.0, 2.0), rng.uniform(0.0, 1.5));
    int cx, cy;
    m.world_to_cell(p, &cx, &cy);
    const Vec2 back = m.cell_to_world(cx, cy);
    EXPECT_LE((back - p).lpNorm<Eigen::Infinity>(), 0.5 * m.resolution() + 1e-12);
  }
}

TEST(MapTest, RejectsBadInput) {
  EXPECT_THROW(StaticMap::parse(""), std::runtime_error);
  EXPECT_THROW(StaticMap::parse("resolution 0.05\n##\n#\n"), std::runtime_error);
  EXPECT_THROW(StaticMap::parse("resolution 0.05\n...\n"), std::runtime_error);
  EXPECT_THROW(StaticMap::parse("nonsense\n#S G#\n"), std::runtime_error);
}

TEST(MapTest, InflateGrowsWalls) {
  StaticMap m(20, 20, 0.05);
  m.set_wall(10, 10);
  StaticMap inf = m.inflate(0.1);
  EXPECT_TRUE(inf.wall(10, 12));
  EXPECT_TRUE(inf.wall(8, 10));
  EXPECT_FALSE(inf.wall(10, 14));
}

}  // namespace
}  // namespace namo
