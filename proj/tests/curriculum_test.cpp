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

#include "namo/curriculum.hpp"

#include <gtest/gtest.h>

namespace namo {
namespace {

TEST(CurriculumTest, InitialRegion) {
  CommandGrid grid;
  EXPECT_NEAR(grid.p_extent(), 0.1, 1e-12);
  EXPECT_NEAR(grid.theta_extent(), 0.2, 1e-12);
  Rng rng(73);
  for (int i = 0; i < 5000; ++i) {
    const PushingCommand c = grid.sample(rng);
    EXPECT_GE(c.p, -0.1);
    EXPECT_LE(c.p, 0.1);
    EXPECT_GE(c.theta, -0.2);
    EXPECT_LE(c.theta, 0.2);
    EXPECT_GE(c.v, 0.1);
    EXPECT_LE(c.v, 0.4);
  }
}

TEST(CurriculumTest, SingleExpansionStep) {
  CommandGrid grid;
  EXPECT_TRUE(grid.update(0.7, 0.7, 0.6));
  EXPECT_NEAR(grid.p_extent(), 0.15, 1e-12);
  EXPECT_NEAR(grid.theta_extent(), 0.3, 1e-12);
  Rng rng(79);
  for (int i = 0; i < 5000; ++i) {
    const PushingCommand c = grid.sample(rng);
    EXPECT_GE(c.p, -0.15);
    EXPECT_LE(c.p, 0.15);
    EXPECT_GE(c.theta, -0.3);
    EXPECT_LE(c.theta, 0.3);
  }
}

TEST(CurriculumTest, BelowThresholdIsNoOp) {
  CommandGrid grid;
  // every single-threshold violation blocks the expansion
  EXPECT_FALSE(grid.update(0.59, 0.9, 0.9));
  EXPECT_FALSE(grid.update(0.9, 0.59, 0.9));
  EXPECT_FALSE(grid.update(0.9, 0.9, 0.49));
  EXPECT_FALSE(grid.update(0.6, 0.6, 0.5));  // strict inequality
  EXPECT_NEAR(grid.p_extent(), 0.1, 1e-12);
  EXPECT_NEAR(grid.theta_extent(), 0.2, 1e-12);
}

TEST(CurriculumTest, GrowsMonotonicallyToHardBounds) {
  CommandGrid grid;
  double prev_p = grid.p_extent(), prev_t = grid.theta_extent();
  int updates = 0;
  while (!grid.at_bounds() && updates < 20) {
    grid.update(1.0, 1.0, 1.0);
    EXPECT_GE(grid.p_extent(), prev_p);
    EXPECT_GE(grid.theta_extent(), prev_t);
    prev_p = grid.p_extent();
    prev_t = grid.theta_extent();
    ++updates;
  }
  EXPECT_TRUE(grid.at_bounds());
  EXPECT_NEAR(grid.p_extent(), 0.5, 1e-12);
  EXPECT_NEAR(grid.theta_extent(), kPi / 2, 1e-12);
  // saturated: further successes change nothing
  EXPECT_FALSE(grid.update(1.0, 1.0, 1.0));
}

TEST(CurriculumTest, SamplesRespectHardBoundsAtSaturation) {
  CommandGrid grid;
  for (int i = 0; i < 20; ++i) grid.update(1.0, 1.0, 1.0);
  Rng rng(83);
  for (int i = 0; i < 20000; ++i) {
    const PushingCommand c = grid.sample(rng);
    EXPECT_GE(c.p, -0.5);
    EXPECT_LE(c.p, 0.5);
    EXPECT_GE(c.theta, -kPi / 2);
    EXPECT_LE(c.theta, kPi / 2);
  }
}

TEST(CurriculumTest, MarginalsAreRoughlyUniform) {
  CommandGrid grid;
  grid.set_bins(4, 3);
  Rng rng(89);
  const int n = 80000;
  std::array<int, 8> p_hist{};
  std::array<int, 6> t_hist{};
  for (int i = 0; i < n; ++i) {
    const PushingCommand c = grid.sample(rng);
    const int pb = static_cast<int>(std::floor(c.p / CommandGrid::kPBin)) + 4;
    const int tb = static_cast<int>(std::floor(c.theta / CommandGrid::kThetaBin)) + 3;
    ASSERT_GE(pb, 0);
    ASSERT_LT(pb, 8);
    p_hist[std::min(pb, 7)] += 1;
    t_hist[std::clamp(tb, 0, 5)] += 1;
  }
  for (int cnt : p_hist) EXPECT_NEAR(cnt, n / 8.0, 0.05 * n / 8.0);
  for (int cnt : t_hist) EXPECT_NEAR(cnt, n / 6.0, 0.05 * n / 6.0);
}

TEST(CurriculumTest, SetBinsRestoresState) {
  CommandGrid a;
  a.update(1.0, 1.0, 1.0);
  a.update(1.0, 1.0, 1.0);
  CommandGrid b;
  b.set_bins(a.p_bins(), a.theta_bins());
  EXPECT_DOUBLE_EQ(a.p_extent(), b.p_extent());
  EXPECT_DOUBLE_EQ(a.theta_extent(), b.theta_extent());
  Rng r1(97), r2(97);
  for (int i = 0; i < 100; ++i) {
    const PushingCommand ca = a.sample(r1), cb = b.sample(r2);
    EXPECT_EQ(ca.p, cb.p);
    EXPECT_EQ(ca.theta, cb.theta);
    EXPECT_EQ(ca.v, cb.v);
  }
}

}  // namespace
}  // namespace namo
