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

#ifndef NAMOPUSH_CONFIG_HPP_
#define NAMOPUSH_CONFIG_HPP_

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "namo/rewards.hpp"

namespace namo {

// Plain `key = value` configuration ('#' comments, blank lines ignored).
// Recognized keys override reward coefficients (k_low_0..10, k_high_0..5) and
// episode constants (dt, d_thr, v_max, sensing_range, goal_radius,
// robot_radius, ik_lambda, max_steps, physics_substeps).
class Config {
 public:
  static Config parse(const std::string& text) {
    Config c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return std::string();
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
      };
      if (trim(line).empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("config: missing '=' on line " +
                                 std::to_string(lineno));
      const std::string key = trim(line.substr(0, eq));
      const std::string val = trim(line.substr(eq + 1));
      if (key.empty() || val.empty())
        throw std::runtime_error("config: empty key or value on line " +
                                 std::to_string(lineno));
      c.values_[key] = val;
    }
    return c;
  }

  static Config load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& def) const {
    const auto it = values_.find(key);
    return it == values_.end() ? def : it->second;
  }

  double get_double(const std::string& key, double def) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return def;
    try {
      std::size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::logic_error&) {
      throw std::runtime_error("config: bad number for '" + key + "'");
    }
  }

  long get_int(const std::string& key, long def) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return def;
    try {
      std::size_t pos = 0;
      const long v = std::stol(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::logic_error&) {
      throw std::runtime_error("config: bad integer for '" + key + "'");
    }
  }

  void apply(EpisodeConfig* cfg) const {
    cfg->dt = get_double("dt", cfg->dt);
    cfg->physics_substeps =
        static_cast<int>(get_int("physics_substeps", cfg->physics_substeps));
    cfg->max_steps = static_cast<int>(get_int("max_steps", cfg->max_steps));
    cfg->d_thr = get_double("d_thr", cfg->d_thr);
    cfg->v_max = get_double("v_max", cfg->v_max);
    cfg->sensing_range = get_double("sensing_range", cfg->sensing_range);
    cfg->goal_radius = get_double("goal_radius", cfg->goal_radius);
    cfg->robot_radius = get_double("robot_radius", cfg->robot_radius);
    cfg->ik_lambda = get_double("ik_lambda", cfg->ik_lambda);
  }

  void apply(RewardWeights* kw) const {
    for (std::size_t i = 0; i < kw->low.size(); ++i)
      kw->low[i] = get_double("k_low_" + std::to_string(i), kw->low[i]);
    for (std::size_t i = 0; i < kw->high.size(); ++i)
      kw->high[i] = get_double("k_high_" + std::to_string(i), kw->high[i]);
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace namo

#endif  // NAMOPUSH_CONFIG_HPP_
