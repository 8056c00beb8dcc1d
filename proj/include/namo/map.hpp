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

#ifndef NAMOPUSH_MAP_HPP_
#define NAMOPUSH_MAP_HPP_

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "namo/math.hpp"

namespace namo {

// Occupancy grid of static walls. Cell (0,0) is the lower-left corner; row r
// covers y in [origin.y + r*res, origin.y + (r+1)*res).
//
// File format (ASCII): first line "resolution <m>", then one row per line,
// top row first, '#' wall, '.' free, 'S' start, 'G' goal.
class StaticMap {
 public:
  StaticMap() = default;
  StaticMap(int width_cells, int height_cells, double resolution,
            const Vec2& origin = Vec2::Zero())
      : width_(width_cells), height_(height_cells), res_(resolution),
        origin_(origin), cells_(width_cells * height_cells, 0) {
    if (width_ <= 0 || height_ <= 0 || res_ <= 0.0)
      throw std::invalid_argument("StaticMap: bad dimensions");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  double resolution() const { return res_; }
  const Vec2& origin() const { return origin_; }
  const Vec2& start() const { return start_; }
  const Vec2& goal() const { return goal_; }
  void set_start(const Vec2& s) { start_ = s; }
  void set_goal(const Vec2& g) { goal_ = g; }

  bool in_bounds(int cx, int cy) const {
    return cx >= 0 && cx < width_ && cy >= 0 && cy < height_;
  }
  bool wall(int cx, int cy) const {
    return !in_bounds(cx, cy) || cells_[cy * width_ + cx] != 0;
  }
  void set_wall(int cx, int cy, bool occupied = true) {
    cells_[cy * width_ + cx] = occupied ? 1 : 0;
  }

  // World point -> containing cell.
  void world_to_cell(const Vec2& p, int* cx, int* cy) const {
    *cx = static_cast<int>(std::floor((p.x() - origin_.x()) / res_));
    *cy = static_cast<int>(std::floor((p.y() - origin_.y()) / res_));
  }
  // Cell -> world position of its center.
  Vec2 cell_to_world(int cx, int cy) const {
    return origin_ + Vec2((cx + 0.5) * res_, (cy + 0.5) * res_);
  }

  bool occupied_at(const Vec2& p) const {
    int cx, cy;
    world_to_cell(p, &cx, &cy);
    return wall(cx, cy);
  }

  // Grid with every wall grown by `radius` meters (disc inflation). Used for
  // planning with a circular robot footprint.
  StaticMap inflate(double radius) const {
    StaticMap out = *this;
    const int r_cells = static_cast<int>(std::ceil(radius / res_));
    for (int cy = 0; cy < height_; ++cy) {
      for (int cx = 0; cx < width_; ++cx) {
        if (!wall(cx, cy)) continue;
        for (int dy = -r_cells; dy <= r_cells; ++dy) {
          for (int dx = -r_cells; dx <= r_cells; ++dx) {
            const int nx = cx + dx, ny = cy + dy;
            if (!out.in_bounds(nx, ny)) continue;
            if (std::hypot(dx * res_, dy * res_) <= radius + 1e-12)
              out.set_wall(nx, ny);
          }
        }
      }
    }
    return out;
  }

  static StaticMap parse(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
      throw std::runtime_error("map: empty file");
    double res = 0.0;
    {
      std::istringstream hd(line);
      std::string key;
      hd >> key >> res;
      if (key != "resolution" || res <= 0.0)
        throw std::runtime_error("map: expected 'resolution <m>' header");
    }
    std::vector<std::string> rows;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      rows.push_back(line);
    }
    if (rows.empty()) throw std::runtime_error("map: no rows");
    const int h = static_cast<int>(rows.size());
    const int w = static_cast<int>(rows.front().size());
    StaticMap m(w, h, res);
    bool has_start = false, has_goal = false;
    for (int r = 0; r < h; ++r) {
      if (static_cast<int>(rows[r].size()) != w)
        throw std::runtime_error("map: ragged rows");
      const int cy = h - 1 - r;  // file is top row first
      for (int cx = 0; cx < w; ++cx) {
        const char ch = rows[r][cx];
        switch (ch) {
          case '#': m.set_wall(cx, cy); break;
          case '.': break;
          case 'S': m.start_ = m.cell_to_world(cx, cy); has_start = true; break;
          case 'G': m.goal_ = m.cell_to_world(cx, cy); has_goal = true; break;
          default:
            throw std::runtime_error(std::string("map: bad cell char '") + ch + "'");
        }
      }
    }
    if (!has_start || !has_goal)
      throw std::runtime_error("map: missing S or G");
    return m;
  }

  static StaticMap load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("map: cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
  }

  std::string serialize() const {
    std::ostringstream out;
    out << "resolution " << res_ << "\n";
    int scx, scy, gcx, gcy;
    world_to_cell(start_, &scx, &scy);
    world_to_cell(goal_, &gcx, &gcy);
    for (int r = 0; r < height_; ++r) {
      const int cy = height_ - 1 - r;
      for (int cx = 0; cx < width_; ++cx) {
        char ch = wall(cx, cy) ? '#' : '.';
        if (cx == scx && cy == scy) ch = 'S';
        if (cx == gcx && cy == gcy) ch = 'G';
        out << ch;
      }
      out << "\n";
    }
    return out.str();
  }

 private:
  int width_ = 0;
  int height_ = 0;
  double res_ = 0.05;
  Vec2 origin_ = Vec2::Zero();
  Vec2 start_ = Vec2::Zero();
  Vec2 goal_ = Vec2::Zero();
  std::vector<std::uint8_t> cells_;
};

}  // namespace namo

#endif  // NAMOPUSH_MAP_HPP_
