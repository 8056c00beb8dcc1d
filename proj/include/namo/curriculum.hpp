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

#ifndef NAMOPUSH_CURRICULUM_HPP_
#define NAMOPUSH_CURRICULUM_HPP_

#include "namo/rng.hpp"
#include "namo/types.hpp"

namespace namo {

// Adaptive command-sampling grid over (p_cmd, theta_cmd). The active region
// is a contiguous bin rectangle that only grows: when every batch-mean
// tracking reward (normalized by its weight) clears its threshold, the region
// expands by one bin step per side, clamped to the hard bounds.
class CommandGrid {
 public:
  static constexpr double kPBin = 0.05;
  static constexpr double kThetaBin = 0.1;
  static constexpr double kPBound = 0.5;
  static constexpr double kThetaBound = kPi / 2.0;

  CommandGrid() = default;

  // Active half-ranges in command units.
  double p_extent() const { return p_bins_ * kPBin; }
  double theta_extent() const { return std::min(theta_bins_ * kThetaBin, kThetaBound); }
  int active_bin_count() const {
    return 4 * p_bins_ * theta_bins_;  // bins per quadrant-symmetric rectangle
  }
  bool at_bounds() const {
    return p_extent() >= kPBound - 1e-12 && theta_bins_ * kThetaBin >= kThetaBound;
  }

  // Uniform bin, then uniform within the bin; v uniform over its fixed range.
  PushingCommand sample(Rng& rng, const Range& v_range = {0.1, 0.4}) const {
    PushingCommand c;
    const int ip = static_cast<int>(rng.uniform_index(2 * p_bins_)) - p_bins_;
    c.p = (ip + rng.uniform01()) * kPBin;
    const int it = static_cast<int>(rng.uniform_index(2 * theta_bins_)) - theta_bins_;
    const double lo = std::max(-kThetaBound, it * kThetaBin);
    const double hi = std::min(kThetaBound, (it + 1) * kThetaBin);
    c.theta = lo + rng.uniform01() * (hi - lo);
    c.v = rng.uniform(v_range.lo, v_range.hi);
    return c;
  }

  // Eq.-(2) style update from weight-normalized batch means of r^cmd_0..2.
  // Returns true if the region expanded.
  bool update(double r0, double r1, double r2) {
    if (!(r0 > thresholds_[0] && r1 > thresholds_[1] && r2 > thresholds_[2]))
      return false;
    const int p_max = static_cast<int>(std::round(kPBound / kPBin));
    const int t_max = static_cast<int>(std::ceil(kThetaBound / kThetaBin));
    const int np = std::min(p_bins_ + 1, p_max);
    const int nt = std::min(theta_bins_ + 1, t_max);
    const bool grew = (np != p_bins_) || (nt != theta_bins_);
    p_bins_ = np;
    theta_bins_ = nt;
    return grew;
  }

  int p_bins() const { return p_bins_; }
  int theta_bins() const { return theta_bins_; }
  void set_bins(int p_bins, int theta_bins) {
    p_bins_ = std::max(1, p_bins);
    theta_bins_ = std::max(1, theta_bins);
  }

  const std::array<double, 3>& thresholds() const { return thresholds_; }

 private:
  // initial ranges (+-0.1, +-0.2), thresholds gamma = (0.6, 0.6, 0.5)
  int p_bins_ = 2;      // bins per side
  int theta_bins_ = 2;
  std::array<double, 3> thresholds_{0.6, 0.6, 0.5};
};

}  // namespace namo

#endif  // NAMOPUSH_CURRICULUM_HPP_
