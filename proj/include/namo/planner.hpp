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

#ifndef NAMOPUSH_PLANNER_HPP_
#define NAMOPUSH_PLANNER_HPP_

#include <algorithm>
#include <optional>
#include <queue>
#include <vector>

#include "namo/map.hpp"
#include "namo/types.hpp"

namespace namo {

// Polyline in world coordinates with cumulative arc length per vertex.
struct Path {
  std::vector<Vec2> points;
  std::vector<double> arc;  // arc[0] = 0, monotone

  bool empty() const { return points.empty(); }
  double length() const { return arc.empty() ? 0.0 : arc.back(); }

  void rebuild_arc() {
    arc.resize(points.size());
    if (points.empty()) return;
    arc[0] = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i)
      arc[i] = arc[i - 1] + (points[i] - points[i - 1]).norm();
  }

  // Arc-length coordinate of the polyline point closest to p.
  double closest_arc(const Vec2& p) const {
    double best_d = std::numeric_limits<double>::infinity();
    double best_s = 0.0;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
      const Vec2 a = points[i], b = points[i + 1];
      const Vec2 d = b - a;
      const double len2 = d.squaredNorm();
      double t = len2 > 0.0 ? std::clamp((p - a).dot(d) / len2, 0.0, 1.0) : 0.0;
      const Vec2 proj = a + t * d;
      const double dist = (p - proj).norm();
      if (dist < best_d) {
        best_d = dist;
        best_s = arc[i] + t * std::sqrt(len2);
      }
    }
    if (points.size() == 1) best_s = 0.0;
    return best_s;
  }

  // Point at arc-length s; clamps to the endpoints.
  Vec2 at_arc(double s) const {
    if (points.empty()) return Vec2::Zero();
    if (s <= 0.0) return points.front();
    if (s >= arc.back()) return points.back();
    const auto it = std::upper_bound(arc.begin(), arc.end(), s);
    const std::size_t i = static_cast<std::size_t>(it - arc.begin());
    const double seg = arc[i] - arc[i - 1];
    const double t = seg > 0.0 ? (s - arc[i - 1]) / seg : 0.0;
    return points[i - 1] + t * (points[i] - points[i - 1]);
  }
};

struct PlanningFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

// Exact supercover traversal (Amanatides-Woo): true if the segment stays in
// free cells of `grid`. Exact corner crossings are treated conservatively and
// require both orthogonal neighbors free, matching the no-corner-cutting rule.
inline bool segment_free(const StaticMap& grid, const Vec2& a, const Vec2& b) {
  const double res = grid.resolution();
  int cx, cy, ex, ey;
  grid.world_to_cell(a, &cx, &cy);
  grid.world_to_cell(b, &ex, &ey);
  if (grid.wall(cx, cy) || grid.wall(ex, ey)) return false;
  const double dx = b.x() - a.x(), dy = b.y() - a.y();
  const int sx = dx > 0 ? 1 : -1, sy = dy > 0 ? 1 : -1;
  const double inf = std::numeric_limits<double>::infinity();
  double tmx = inf, tmy = inf, tdx = inf, tdy = inf;
  if (dx != 0.0) {
    tdx = res / std::abs(dx);
    tmx = ((cx + (sx > 0 ? 1 : 0)) * res - a.x()) / dx;
  }
  if (dy != 0.0) {
    tdy = res / std::abs(dy);
    tmy = ((cy + (sy > 0 ? 1 : 0)) * res - a.y()) / dy;
  }
  const double tol = 1e-12;
  int guard = 2 * (grid.width() + grid.height()) + 4;
  while ((cx != ex || cy != ey) && guard-- > 0) {
    if (std::abs(tmx - tmy) <= tol) {
      if (grid.wall(cx + sx, cy) || grid.wall(cx, cy + sy)) return false;
      cx += sx;
      cy += sy;
      tmx += tdx;
      tmy += tdy;
    } else if (tmx < tmy) {
      cx += sx;
      tmx += tdx;
    } else {
      cy += sy;
      tmy += tdy;
    }
    if (grid.wall(cx, cy)) return false;
  }
  return guard > 0;
}

}  // namespace detail

namespace detail {

struct GridSearchResult {
  std::vector<int> cells;  // start..goal, flat indices
  double cost = 0.0;
};

// 8-connected A* with the octile heuristic (admissible on the 0.05 m grid).
// Ties broken by smaller heuristic, then smaller cell index: deterministic.
inline GridSearchResult astar_cells(const StaticMap& grid, int sx, int sy,
                                    int gx, int gy) {
  if (grid.wall(sx, sy)) throw PlanningFailure("plan_astar: start blocked");
  if (grid.wall(gx, gy)) throw PlanningFailure("plan_astar: goal blocked");
  const double res = grid.resolution();
  const int w = grid.width(), h = grid.height();
  const int n = w * h;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> g(n, inf);
  std::vector<int> parent(n, -1);
  std::vector<std::uint8_t> closed(n, 0);

  auto heuristic = [&](int cx, int cy) {
    const double dx = std::abs(cx - gx), dy = std::abs(cy - gy);
    return res * (std::max(dx, dy) + (std::sqrt(2.0) - 1.0) * std::min(dx, dy));
  };

  struct Node {
    double f, hval;
    int idx;
    bool operator>(const Node& o) const {
      if (f != o.f) return f > o.f;
      if (hval != o.hval) return hval > o.hval;
      return idx > o.idx;
    }
  };
  std::priority_queue<Node, std::vector<Node>, std::greater<Node>> open;
  const int s_idx = sy * w + sx, g_idx = gy * w + gx;
  g[s_idx] = 0.0;
  open.push({heuristic(sx, sy), heuristic(sx, sy), s_idx});

  static const int dx8[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  static const int dy8[8] = {0, 0, 1, -1, 1, -1, 1, -1};

  while (!open.empty()) {
    const Node nd = open.top();
    open.pop();
    if (closed[nd.idx]) continue;
    closed[nd.idx] = 1;
    if (nd.idx == g_idx) break;
    const int cx = nd.idx % w, cy = nd.idx / w;
    for (int k = 0; k < 8; ++k) {
      const int nx = cx + dx8[k], ny = cy + dy8[k];
      if (!grid.in_bounds(nx, ny) || grid.wall(nx, ny)) continue;
      // no diagonal corner cutting
      if (k >= 4 && (grid.wall(cx + dx8[k], cy) || grid.wall(cx, cy + dy8[k])))
        continue;
      const double step = (k < 4 ? 1.0 : std::sqrt(2.0)) * res;
      const int ni = ny * w + nx;
      if (g[nd.idx] + step < g[ni] - 1e-15) {
        g[ni] = g[nd.idx] + step;
        parent[ni] = nd.idx;
        const double hv = heuristic(nx, ny);
        open.push({g[ni] + hv, hv, ni});
      }
    }
  }
  if (!closed[g_idx]) throw PlanningFailure("plan_astar: no path");

  GridSearchResult out;
  out.cost = g[g_idx];
  for (int i = g_idx; i != -1; i = parent[i]) out.cells.push_back(i);
  std::reverse(out.cells.begin(), out.cells.end());
  return out;
}

}  // namespace detail

// Cost of the optimal 8-connected grid route between two world points on the
// inflated grid (no shortcutting).
inline double astar_cost(const StaticMap& map, const Vec2& start, const Vec2& goal,
                         double inflate_radius) {
  const StaticMap grid = map.inflate(inflate_radius);
  int sx, sy, gx, gy;
  grid.world_to_cell(start, &sx, &sy);
  grid.world_to_cell(goal, &gx, &gy);
  return detail::astar_cells(grid, sx, sy, gx, gy).cost;
}

// Plans on the grid inflated by `inflate_radius` and simplifies the polyline
// by line-of-sight shortcutting (never longer, clearance preserved).
inline Path plan_astar(const StaticMap& map, const Vec2& start, const Vec2& goal,
                       double inflate_radius) {
  const StaticMap grid = map.inflate(inflate_radius);
  int sx, sy, gx, gy;
  grid.world_to_cell(start, &sx, &sy);
  grid.world_to_cell(goal, &gx, &gy);
  const auto res_cells = detail::astar_cells(grid, sx, sy, gx, gy);
  const int w = grid.width();
  std::vector<Vec2> cells;
  cells.reserve(res_cells.cells.size());
  for (int i : res_cells.cells)
    cells.push_back(grid.cell_to_world(i % w, i / w));
  cells.front() = start;
  if (cells.size() > 1) cells.back() = goal;

  // greedy line-of-sight shortcutting; never lengthens, preserves clearance
  Path path;
  std::size_t i = 0;
  path.points.push_back(cells[0]);
  while (i + 1 < cells.size()) {
    std::size_t j = cells.size() - 1;
    while (j > i + 1 && !detail::segment_free(grid, cells[i], cells[j])) --j;
    path.points.push_back(cells[j]);
    i = j;
  }
  path.rebuild_arc();
  return path;
}


// Local goals at arc length 0.5 / 1.0 / 2.0 m ahead of the base's closest
// path point, in the base frame; clamp to the path end.
inline std::array<Vec2, 3> local_goals(const Path& path, const Pose2& base) {
  if (path.empty()) throw std::invalid_argument("local_goals: empty path");
  const double s0 = path.closest_arc(base.translation());
  std::array<Vec2, 3> out;
  const double ahead[3] = {0.5, 1.0, 2.0};
  for (int i = 0; i < 3; ++i)
    out[i] = base.to_local(path.at_arc(s0 + ahead[i]));
  return out;
}

// 80x80 binary window, 0.05 m/cell, covering 4x4 m^2 centered 2 m ahead of
// the base, axis-aligned to the base frame. Row r, column c maps to local
// coordinates x = r*0.05 + 0.025 (0..4 m ahead), y = (c-40)*0.05 + 0.025.
struct LocalMap {
  std::array<std::uint8_t, kLocalMapSize * kLocalMapSize> cells{};
  std::uint8_t& at(int r, int c) { return cells[r * kLocalMapSize + c]; }
  std::uint8_t at(int r, int c) const { return cells[r * kLocalMapSize + c]; }
};

inline LocalMap crop_local_map(const StaticMap& map, const Pose2& base) {
  LocalMap out;
  const double res = 0.05;
  for (int r = 0; r < kLocalMapSize; ++r) {
    for (int c = 0; c < kLocalMapSize; ++c) {
      const double x = (r + 0.5) * res;                       // 0..4 m ahead
      const double y = (c - kLocalMapSize / 2 + 0.5) * res;   // -2..2 m lateral
      const Vec2 p = base.to_world(Vec2(x, y));
      out.at(r, c) = map.occupied_at(p) ? 1 : 0;  // out of bounds -> occupied
    }
  }
  return out;
}

}  // namespace namo

#endif  // NAMOPUSH_PLANNER_HPP_
