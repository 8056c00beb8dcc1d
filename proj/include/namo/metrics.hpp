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

#ifndef NAMOPUSH_METRICS_HPP_
#define NAMOPUSH_METRICS_HPP_

#include <cstdio>
#include <map>
#include <sstream>

#include "namo/controller.hpp"

namespace namo {

// Success-weighted path length: (1/N) sum S_i * L*_i / max(L_i, L*_i).
inline double spl(const std::vector<std::pair<bool, double>>& records, double l_star) {
  if (records.empty()) throw std::invalid_argument("spl: no records");
  if (l_star <= 0.0) throw std::invalid_argument("spl: L* must be positive");
  double acc = 0.0;
  for (const auto& [success, length] : records)
    if (success) acc += l_star / std::max(length, l_star);
  return acc / records.size();
}

// Success-weighted completion time (same form with T).
inline double sct(const std::vector<std::pair<bool, double>>& records, double t_star) {
  if (records.empty()) throw std::invalid_argument("sct: no records");
  if (t_star <= 0.0) throw std::invalid_argument("sct: T* must be positive");
  double acc = 0.0;
  for (const auto& [success, time] : records)
    if (success) acc += t_star / std::max(time, t_star);
  return acc / records.size();
}

// ---------------------------------------------------------------------------
// Built-in evaluation maps.
//   corridor: a straight passage too narrow to detour around any obstacle.
//   room: two chambers joined by a divider with two doorways (detours exist).
// ---------------------------------------------------------------------------
inline StaticMap eval_map(const std::string& name) {
  const double res = 0.05;
  if (name == "corridor") {
    const int nx = 282, ny = 36;  // 14.1 x 1.8 m outer, 1.7 m wide interior
    StaticMap m(nx, ny, res);
    for (int cx = 0; cx < nx; ++cx) {
      m.set_wall(cx, 0);
      m.set_wall(cx, ny - 1);
    }
    for (int cy = 0; cy < ny; ++cy) {
      m.set_wall(0, cy);
      m.set_wall(nx - 1, cy);
    }
    m.set_start(Vec2(0.8, 0.9));
    m.set_goal(Vec2(13.2, 0.9));
    return m;
  }
  if (name == "room") {
    const int nx = 222, ny = 162;  // 11.1 x 8.1 m outer
    StaticMap m(nx, ny, res);
    for (int cx = 0; cx < nx; ++cx) {
      m.set_wall(cx, 0);
      m.set_wall(cx, ny - 1);
    }
    for (int cy = 0; cy < ny; ++cy) {
      m.set_wall(0, cy);
      m.set_wall(nx - 1, cy);
    }
    // divider at x = 5.5 m with doorways at y ~ [1.2, 3.0] and [5.0, 6.8]
    const int wall_x = 110;
    for (int cy = 1; cy < ny - 1; ++cy) {
      const double y = (cy + 0.5) * res;
      const bool door = (y > 1.2 && y < 3.0) || (y > 5.0 && y < 6.8);
      if (!door) m.set_wall(wall_x, cy);
    }
    m.set_start(Vec2(0.8, 4.0));
    m.set_goal(Vec2(10.2, 4.0));
    return m;
  }
  throw std::invalid_argument("eval_map: unknown map '" + name + "'");
}

// Obstacles centered on the planned path, >= 1.5 m apart in arc length,
// properties from the 10%-widened ranges; deterministic per seed.
inline World build_eval_scenario(const std::string& map_name, int n_obstacles,
                                 std::uint64_t seed) {
  if (n_obstacles != 2 && n_obstacles != 4 && n_obstacles != 6)
    throw std::invalid_argument("build_eval_scenario: n must be 2, 4, or 6");
  World w;
  w.map = eval_map(map_name);
  w.cfg.max_steps = 4500;  // 90 s budget
  const PropertyRanges eval_ranges = w.cfg.ranges.widened(0.10);
  const Path path = plan_astar(w.map, w.map.start(), w.map.goal(), w.cfg.robot_radius);
  const double s_lo = 1.5, s_hi = path.length() - 2.0;
  if (s_hi - s_lo < 1.5 * (n_obstacles - 1))
    throw std::invalid_argument("build_eval_scenario: path too short for n placements");

  Rng rng(seed);
  const bool narrow = map_name == "corridor";
  for (int i = 0; i < n_obstacles; ++i) {
    bool placed = false;
    for (int tries = 0; tries < 200 && !placed; ++tries) {
      const double s = rng.uniform(s_lo, s_hi);
      bool spaced = true;
      for (const ObstacleState& prev : w.obstacles)
        if (std::abs(path.closest_arc(prev.pos) - s) < 1.5) spaced = false;
      if (!spaced) continue;
      ObstacleState o = sample_obstacle(rng, eval_ranges);
      o.pos = path.at_arc(s);
      // corridor freight is axis-aligned; rooms allow arbitrary yaw
      o.yaw = narrow ? rng.uniform(-0.2, 0.2) : rng.uniform(-kPi / 2, kPi / 2);
      ObstacleState probe = o;  // keep a 0.1 m margin to the walls at spawn
      probe.size.x() += 0.2;
      probe.size.y() += 0.2;
      if (box_wall_contact(w.map, probe)) {
        // tight spots (doorways) reject most yaws; align with the path instead
        const Vec2 tangent = path.at_arc(std::min(s + 0.2, path.length())) -
                             path.at_arc(std::max(0.0, s - 0.2));
        o.yaw = std::atan2(tangent.y(), tangent.x()) + rng.uniform(-0.2, 0.2);
        probe = o;
        probe.size.x() += 0.2;
        probe.size.y() += 0.2;
        if (box_wall_contact(w.map, probe)) continue;
      }
      w.obstacles.push_back(o);
      placed = true;
    }
    if (!placed)
      throw std::runtime_error("build_eval_scenario: placement failed");
  }
  w.robot.base = {w.map.start().x(), w.map.start().y(), 0.0};
  w.refresh_fk();
  w.refresh_contacts();
  return w;
}

// Reference run for L*/T*: scripted tracking on the obstacle-free map.
struct Reference {
  double l_star = 0.0;
  double t_star = 0.0;
};

inline Reference reference_run(const std::string& map_name) {
  World w;
  w.map = eval_map(map_name);
  w.cfg.max_steps = 4500;
  const EpisodeRecord rec = run_episode(w, MethodVariant::CA, nullptr);
  if (!rec.success)
    throw std::runtime_error("reference_run: tracker failed on empty map '" +
                             map_name + "'");
  return {rec.length_m, rec.time_s};
}

// ---------------------------------------------------------------------------
// Batch suite.
// ---------------------------------------------------------------------------
struct SuiteConfig {
  std::vector<MethodVariant> variants;
  std::vector<std::string> maps{"corridor", "room"};
  std::vector<int> counts{2, 4, 6};
  int trials = 150;
  std::uint64_t seed0 = 1000;  // trial k uses scenario seed seed0 + k
  bool verbose = false;
};

struct GroupMetrics {
  std::string map;
  int n_obst = 0;
  MethodVariant variant{};
  double sr = 0.0;  // percent
  double spl = 0.0;
  double sct = 0.0;
  double mean_length = 0.0, sd_length = 0.0;
  double mean_time = 0.0, sd_time = 0.0;
  double contact_rate = 0.0;
};

struct SuiteResult {
  std::string csv;
  std::vector<GroupMetrics> groups;
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt3(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace detail

inline constexpr const char* kCsvHeader =
    "map,n_obst,variant,seed,success,fail_reason,length_m,time_s,spl_term,"
    "sct_term,contact_rate";

// Runs every (map, count, variant, trial) combination; deterministic given
// the seed list. The aggregate metrics are recomputed from the emitted CSV
// text as a self-check (mismatch beyond 1e-12 throws).
inline SuiteResult run_suite(const SuiteConfig& cfg, PolicyBundle* bundle) {
  for (MethodVariant v : cfg.variants) {
    const bool learned = v != MethodVariant::CA && v != MethodVariant::AA;
    if (learned && bundle == nullptr)
      throw std::invalid_argument(std::string("run_suite: variant '") +
                                  to_string(v) + "' requires a policy bundle");
  }
  std::ostringstream csv;
  csv << kCsvHeader << "\n";
  SuiteResult out;
  std::map<std::string, Reference> refs;
  for (const std::string& m : cfg.maps) refs[m] = reference_run(m);

  for (const std::string& map_name : cfg.maps) {
    const Reference ref = refs[map_name];
    for (int n : cfg.counts) {
      for (MethodVariant variant : cfg.variants) {
        GroupMetrics g;
        g.map = map_name;
        g.n_obst = n;
        g.variant = variant;
        std::vector<std::pair<bool, double>> lens, times;
        double len_sum = 0, len_sq = 0, time_sum = 0, time_sq = 0, contact = 0;
        for (int k = 0; k < cfg.trials; ++k) {
          const std::uint64_t seed = cfg.seed0 + k;
          const World w = build_eval_scenario(map_name, n, seed);
          const EpisodeRecord rec = run_episode(w, variant, bundle);
          const double spl_term =
              rec.success ? ref.l_star / std::max(rec.length_m, ref.l_star) : 0.0;
          const double sct_term =
              rec.success ? ref.t_star / std::max(rec.time_s, ref.t_star) : 0.0;
          lens.push_back({rec.success, rec.length_m});
          times.push_back({rec.success, rec.time_s});
          len_sum += rec.length_m;
          len_sq += rec.length_m * rec.length_m;
          time_sum += rec.time_s;
          time_sq += rec.time_s * rec.time_s;
          contact += rec.contact_rate;
          csv << map_name << ',' << n << ',' << to_string(variant) << ','
              << seed << ',' << (rec.success ? 1 : 0) << ','
              << (rec.success ? "none" : to_string(rec.fail_reason)) << ','
              << detail::fmt_double(rec.length_m) << ','
              << detail::fmt_double(rec.time_s) << ','
              << detail::fmt_double(spl_term) << ','
              << detail::fmt_double(sct_term) << ','
              << detail::fmt_double(rec.contact_rate) << "\n";
          if (cfg.verbose)
            std::printf("%s n=%d %s seed=%llu %s\n", map_name.c_str(), n,
                        to_string(variant),
                        static_cast<unsigned long long>(seed),
                        rec.success ? "success" : to_string(rec.fail_reason));
        }
        const int nt = cfg.trials;
        int succ = 0;
        for (const auto& [s, l] : lens) succ += s ? 1 : 0;
        g.sr = 100.0 * succ / nt;
        g.spl = spl(lens, ref.l_star);
        g.sct = sct(times, ref.t_star);
        g.mean_length = len_sum / nt;
        g.sd_length = std::sqrt(std::max(0.0, len_sq / nt - g.mean_length * g.mean_length));
        g.mean_time = time_sum / nt;
        g.sd_time = std::sqrt(std::max(0.0, time_sq / nt - g.mean_time * g.mean_time));
        g.contact_rate = contact / nt;
        out.groups.push_back(g);
      }
    }
  }
  out.csv = csv.str();

  // ---- independent recomputation from the CSV text -------------------
  std::istringstream in(out.csv);
  std::string line;
  std::getline(in, line);  // header
  std::map<std::string, std::pair<double, long>> spl_acc, sct_acc;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string field;
    std::vector<std::string> f;
    while (std::getline(row, field, ',')) f.push_back(field);
    if (f.size() != 11) throw std::runtime_error("run_suite: malformed CSV row");
    const std::string key = f[0] + "|" + f[1] + "|" + f[2];
    spl_acc[key].first += std::stod(f[8]);
    spl_acc[key].second += 1;
    sct_acc[key].first += std::stod(f[9]);
    sct_acc[key].second += 1;
  }
  for (const GroupMetrics& g : out.groups) {
    const std::string key =
        g.map + "|" + std::to_string(g.n_obst) + "|" + to_string(g.variant);
    const double spl_re = spl_acc[key].first / spl_acc[key].second;
    const double sct_re = sct_acc[key].first / sct_acc[key].second;
    if (std::abs(spl_re - g.spl) > 1e-12 || std::abs(sct_re - g.sct) > 1e-12)
      throw std::runtime_error("run_suite: CSV self-check failed for " + key);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trace plot: walls, planned path, base trace, obstacle snapshots. The output
// is a deterministic byte sequence for identical inputs.
// ---------------------------------------------------------------------------
inline std::string plot_traces(const EpisodeRecord& rec, const StaticMap& map) {
  const double res = map.resolution();
  const double w_m = map.width() * res, h_m = map.height() * res;
  const double scale = 60.0;  // px per meter
  std::ostringstream svg;
  auto px = [&](double x) { return detail::fmt3(x * scale); };
  auto py = [&](double y) { return detail::fmt3((h_m - y) * scale); };
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\""
      << detail::fmt3(w_m * scale) << "\" height=\"" << detail::fmt3(h_m * scale)
      << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  // walls: merge horizontal runs per row
  for (int cy = 0; cy < map.height(); ++cy) {
    int run = -1;
    for (int cx = 0; cx <= map.width(); ++cx) {
      const bool wall = cx < map.width() && map.wall(cx, cy);
      if (wall && run < 0) run = cx;
      if (!wall && run >= 0) {
        svg << "<rect x=\"" << px(run * res) << "\" y=\"" << py((cy + 1) * res)
            << "\" width=\"" << detail::fmt3((cx - run) * res * scale)
            << "\" height=\"" << detail::fmt3(res * scale)
            << "\" fill=\"#444444\"/>\n";
        run = -1;
      }
    }
  }
  // planned path (recomputed from the static map)
  try {
    const Path path = plan_astar(map, map.start(), map.goal(), 0.3);
    svg << "<polyline fill=\"none\" stroke=\"#2060c0\" stroke-width=\"2\" points=\"";
    for (const Vec2& p : path.points)
      svg << px(p.x()) << ',' << py(p.y()) << ' ';
    svg << "\"/>\n";
  } catch (const PlanningFailure&) {
  }
  // obstacle footprint snapshots
  for (const auto& corners : rec.obstacle_snaps) {
    svg << "<polygon fill=\"#c0c0c0\" fill-opacity=\"0.5\" stroke=\"#808080\" points=\"";
    for (const Vec2& c : corners) svg << px(c.x()) << ',' << py(c.y()) << ' ';
    svg << "\"/>\n";
  }
  // base trace
  if (!rec.base_trace.empty()) {
    svg << "<polyline fill=\"none\" stroke=\"#c03030\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < rec.base_trace.size(); i += 5)
      svg << px(rec.base_trace[i].x()) << ',' << py(rec.base_trace[i].y()) << ' ';
    const Vec2& last = rec.base_trace.back();
    svg << px(last.x()) << ',' << py(last.y()) << ' ';
    svg << "\"/>\n";
  }
  svg << "<circle cx=\"" << px(map.start().x()) << "\" cy=\"" << py(map.start().y())
      << "\" r=\"6\" fill=\"#30a030\"/>\n";
  svg << "<circle cx=\"" << px(map.goal().x()) << "\" cy=\"" << py(map.goal().y())
      << "\" r=\"6\" fill=\"#a030a0\"/>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace namo

#endif  // NAMOPUSH_METRICS_HPP_
