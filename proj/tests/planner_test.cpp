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

#include "namo/planner.hpp"

#include <gtest/gtest.h>

#include <queue>

#include "namo/rng.hpp"

namespace namo {
namespace {

// Plain Dijkstra oracle on the same 8-connected grid (no heuristic, no
// corner-cutting), independent of the A* implementation.
double dijkstra_cost(const StaticMap& grid, int sx, int sy, int gx, int gy) {
  const int w = grid.width(), h = grid.height();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(w * h, inf);
  using QN = std::pair<double, int>;
  std::priority_queue<QN, std::vector<QN>, std::greater<QN>> pq;
  dist[sy * w + sx] = 0.0;
  pq.push({0.0, sy * w + sx});
  const int dx8[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  const int dy8[8] = {0, 0, 1, -1, 1, -1, 1, -1};
  while (!pq.empty()) {
    auto [d, idx] = pq.top();
    pq.pop();
    if (d > dist[idx] + 1e-15) continue;
    const int cx = idx % w, cy = idx / w;
    for (int k = 0; k < 8; ++k) {
      const int nx = cx + dx8[k], ny = cy + dy8[k];
      if (nx < 0 || nx >= w || ny < 0 || ny >= h || grid.wall(nx, ny)) continue;
      if (k >= 4 && (grid.wall(cx + dx8[k], cy) || grid.wall(cx, cy + dy8[k])))
        continue;
      const double nd = d + (k < 4 ? 1.0 : std::sqrt(2.0)) * grid.resolution();
      if (nd < dist[ny * w + nx] - 1e-15) {
        dist[ny * w + nx] = nd;
        pq.push({nd, ny * w + nx});
      }
    }
  }
  return dist[gy * w + gx];
}

StaticMap empty_map(int w, int h, double res = 0.05) {
  StaticMap m(w, h, res);
  m.set_start(m.cell_to_world(0, 0));
  m.set_goal(m.cell_to_world(w - 1, h - 1));
  return m;
}

TEST(PlannerTest, EmptyMapDiagonalCost) {
  StaticMap m = empty_map(10, 10);
  const double cost = astar_cost(m, m.cell_to_world(0, 0), m.cell_to_world(9, 9), 0.0);
  EXPECT_NEAR(cost, 9.0 * std::sqrt(2.0) * 0.05, 1e-12);
}

TEST(PlannerTest, StartEqualsGoal) {
  StaticMap m = empty_map(10, 10);
  const Path p = plan_astar(m, m.cell_to_world(4, 4), m.cell_to_world(4, 4), 0.0);
  EXPECT_EQ(p.points.size(), 1u);
  EXPECT_DOUBLE_EQ(p.length(), 0.0);
}

TEST(PlannerTest, AstarCostEqualsDijkstraOn200RandomMaps) {
  Rng rng(101);
  int tested = 0;
  while (tested < 200) {
    StaticMap m(30, 30, 0.05);
    for (int cy = 0; cy < 30; ++cy)
      for (int cx = 0; cx < 30; ++cx)
        if (rng.uniform01() < 0.25) m.set_wall(cx, cy);
    int sx = static_cast<int>(rng.uniform_index(30));
    int sy = static_cast<int>(rng.uniform_index(30));
    int gx = static_cast<int>(rng.uniform_index(30));
    int gy = static_cast<int>(rng.uniform_index(30));
    if (m.wall(sx, sy) || m.wall(gx, gy)) continue;
    const double oracle = dijkstra_cost(m, sx, sy, gx, gy);
    if (!std::isfinite(oracle)) {
      EXPECT_THROW(astar_cost(m, m.cell_to_world(sx, sy), m.cell_to_world(gx, gy), 0.0),
                   PlanningFailure);
    } else {
      const double cost =
          astar_cost(m, m.cell_to_world(sx, sy), m.cell_to_world(gx, gy), 0.0);
      EXPECT_NEAR(cost, oracle, 1e-9);
    }
    ++tested;
  }
}

TEST(PlannerTest, ShortcutNeverLongerAndCollisionFree) {
  Rng rng(103);
  for (int it = 0; it < 50; ++it) {
    StaticMap m(40, 40, 0.05);
    for (int cy = 0; cy < 40; ++cy)
      for (int cx = 0; cx < 40; ++cx)
        if (rng.uniform01() < 0.2) m.set_wall(cx, cy);
    const int sx = 0, sy = 0, gx = 39, gy = 39;
    if (m.wall(sx, sy) || m.wall(gx, gy)) continue;
    double raw;
    Path p;
    try {
      raw = astar_cost(m, m.cell_to_world(sx, sy), m.cell_to_world(gx, gy), 0.0);
      p = plan_astar(m, m.cell_to_world(sx, sy), m.cell_to_world(gx, gy), 0.0);
    } catch (const PlanningFailure&) {
      continue;
    }
    EXPECT_LE(p.length(), raw + 1e-9);
    // every segment stays in free cells
    for (std::size_t i = 0; i + 1 < p.points.size(); ++i) {
      const Vec2 a = p.points[i], b = p.points[i + 1];
      const int n = 200;
      for (int k = 0; k <= n; ++k) {
        const Vec2 q = a + (static_cast<double>(k) / n) * (b - a);
        EXPECT_FALSE(m.occupied_at(q));
      }
    }
  }
}

TEST(PlannerTest, LocalGoalsStraightPath) {
  Path p;
  p.points = {{0, 0}, {10, 0}};
  p.rebuild_arc();
  const auto g = local_goals(p, Pose2{0, 0, 0});
  EXPECT_NEAR(g[0].x(), 0.5, 1e-12);
  EXPECT_NEAR(g[0].y(), 0.0, 1e-12);
  EXPECT_NEAR(g[1].x(), 1.0, 1e-12);
  EXPECT_NEAR(g[2].x(), 2.0, 1e-12);
}

TEST(PlannerTest, LocalGoalsClampToGoal) {
  Path p;
  p.points = {{0, 0}, {10, 0}};
  p.rebuild_arc();
  const auto g = local_goals(p, Pose2{9.7, 0, 0});
  for (const auto& gi : g) {
    EXPECT_NEAR(gi.x(), 0.3, 1e-12);
    EXPECT_NEAR(gi.y(), 0.0, 1e-12);
  }
}

TEST(PlannerTest, LocalGoalsMatchPolylineWalkOracle) {
  // L-shaped path; brute-force arc-length walk with tiny steps
  Path p;
  p.points = {{0, 0}, {1.2, 0}, {1.2, 3.0}};
  p.rebuild_arc();
  const Pose2 base{0.4, 0.1, 0.7};
  const auto g = local_goals(p, base);

  // oracle: walk the polyline in 1e-5 steps from the closest point
  auto walk = [&](double target) {
    double best_d = 1e18, s0 = 0.0;
    const int n = 400000;
    for (int i = 0; i <= n; ++i) {
      const double s = p.length() * i / n;
      const double d = (p.at_arc(s) - base.translation()).norm();
      if (d < best_d) {
        best_d = d;
        s0 = s;
      }
    }
    return base.to_local(p.at_arc(std::min(p.length(), s0 + target)));
  };
  const double ahead[3] = {0.5, 1.0, 2.0};
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR((g[i] - walk(ahead[i])).norm(), 0.0, 1e-4);
  }
}

TEST(PlannerTest, LocalGoalsEmptyPathThrows) {
  Path p;
  EXPECT_THROW(local_goals(p, Pose2{}), std::invalid_argument);
}

TEST(PlannerTest, CropLocalMapOpenSpace) {
  StaticMap m(400, 400, 0.05);  // 20 x 20 m, no walls
  const LocalMap lm = crop_local_map(m, Pose2{10.0, 10.0, 0.4});
  for (int r = 0; r < kLocalMapSize; ++r)
    for (int c = 0; c < kLocalMapSize; ++c) EXPECT_EQ(lm.at(r, c), 0);
}

TEST(PlannerTest, CropLocalMapWallAhead) {
  StaticMap m(400, 400, 0.05);
  // wall column 2 m ahead of a base at (10, 10) facing +x: world x = 12
  const int wall_cx = static_cast<int>(12.0 / 0.05);
  for (int cy = 0; cy < 400; ++cy) m.set_wall(wall_cx, cy);
  const LocalMap lm = crop_local_map(m, Pose2{10.0, 10.0, 0.0});
  // local x = 2.0 lands in row 39/40 boundary; the wall cell covers x in
  // [12.0, 12.05) -> local rows where (r + 0.5)*0.05 in [2.0, 2.05)
  for (int c = 0; c < kLocalMapSize; ++c) EXPECT_EQ(lm.at(40, c), 1);
  for (int c = 0; c < kLocalMapSize; ++c) EXPECT_EQ(lm.at(38, c), 0);
}

TEST(PlannerTest, CropLocalMapRotationOracle) {
  Rng rng(107);
  StaticMap m(200, 200, 0.05);
  for (int i = 0; i < 600; ++i)
    m.set_wall(static_cast<int>(rng.uniform_index(200)),
               static_cast<int>(rng.uniform_index(200)));
  for (int it = 0; it < 20; ++it) {
    const Pose2 base{rng.uniform(2, 8), rng.uniform(2, 8), rng.uniform(-kPi, kPi)};
    const LocalMap lm = crop_local_map(m, base);
    // re-rasterization oracle: sample each cell center independently
    for (int r = 0; r < kLocalMapSize; r += 3) {
      for (int c = 0; c < kLocalMapSize; c += 3) {
        const double x = (r + 0.5) * 0.05;
        const double y = (c - 40 + 0.5) * 0.05;
        const Vec2 p = base.to_world(Vec2(x, y));
        EXPECT_EQ(lm.at(r, c), m.occupied_at(p) ? 1 : 0);
      }
    }
  }
}

}  // namespace
}  // namespace namo
