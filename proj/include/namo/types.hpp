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

#ifndef NAMOPUSH_TYPES_HPP_
#define NAMOPUSH_TYPES_HPP_

#include <array>
#include <stdexcept>

#include "namo/math.hpp"
#include "namo/rng.hpp"

namespace namo {

inline constexpr int kLowObsDim = 32;
inline constexpr int kHighObsDim = 25;
inline constexpr int kActionDim = 8;
inline constexpr int kCommandDim = 3;
inline constexpr int kPrivilegedDim = 6;
inline constexpr int kMapCodeDim = 16;
inline constexpr int kLocalMapSize = 80;
inline constexpr int kNumJoints = 7;

using LowObs = Eigen::Matrix<double, kLowObsDim, 1>;
using HighObs = Eigen::Matrix<double, kHighObsDim, 1>;
using Action = Eigen::Matrix<double, kActionDim, 1>;
using JointVec = Eigen::Matrix<double, kNumJoints, 1>;

// High->low interface: lateral contact fraction on the contact face, face yaw
// in the robot frame, and base forward speed.
struct PushingCommand {
  double p = 0.0;      // contact point is p * d_{o,y} along the face
  double theta = 0.0;  // rad
  double v = 0.0;      // m/s

  Vec3 vec() const { return {p, theta, v}; }
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool valid() const { return lo < hi; }
  double clamp(double v) const { return std::clamp(v, lo, hi); }
  double mid() const { return 0.5 * (lo + hi); }
  double span() const { return hi - lo; }
  // Each bound moved outward by `frac` of the span (eval-time widening).
  Range widened(double frac) const {
    return {lo - frac * span(), hi + frac * span()};
  }
  // Map to [-1, 1] over this range.
  double normalize(double v) const { return 2.0 * (v - lo) / span() - 1.0; }
};

struct PropertyRanges {
  Range size_xy{0.5, 0.8};   // d_x, d_y
  Range size_z{0.6, 1.0};    // d_z
  Range mass{5.0, 30.0};     // kg
  Range com_frac{-0.4, 0.4};
  Range mu{0.2, 0.6};

  PropertyRanges widened(double frac) const {
    PropertyRanges r = *this;
    r.size_xy = size_xy.widened(frac);
    r.size_z = size_z.widened(frac);
    r.mass = mass.widened(frac);
    r.com_frac = com_frac.widened(frac);
    r.mu = mu.widened(frac);
    return r;
  }
  void validate() const {
    for (const Range* r : {&size_xy, &size_z, &mass, &com_frac, &mu})
      if (r->lo > r->hi) throw std::invalid_argument("PropertyRanges: min > max");
  }
};

// A movable box. Hidden properties (mass, CoM, friction) drive the push
// response and are what the estimator has to recover from interaction.
struct ObstacleState {
  Vec2 pos = Vec2::Zero();   // geometric center, world
  double yaw = 0.0;
  double tilt = 0.0;         // about the contacted face's horizontal axis
  int tilt_face = 0;         // face the tilt refers to (0..3)
  Vec3 size = {0.6, 0.6, 0.8};      // d_x, d_y, d_z
  double mass = 10.0;               // kg
  Vec3 com_frac = Vec3::Zero();     // CoM offset = com_frac .* size
  double mu = 0.4;
  Vec2 lin_vel = Vec2::Zero();      // world, finite-differenced
  Vec2 lin_acc = Vec2::Zero();
  bool rolled_over = false;

  Pose2 pose() const { return {pos.x(), pos.y(), yaw}; }

  // Ground-contact corners, counterclockwise starting at (+x,+y).
  std::array<Vec2, 4> corners() const {
    const Mat2 r = rot2(yaw);
    const double hx = 0.5 * size.x(), hy = 0.5 * size.y();
    return {pos + r * Vec2(hx, hy), pos + r * Vec2(-hx, hy),
            pos + r * Vec2(-hx, -hy), pos + r * Vec2(hx, -hy)};
  }
};

// All fields are uniform over `ranges`; tilt and velocities start at zero.
inline ObstacleState sample_obstacle(Rng& rng, const PropertyRanges& ranges) {
  ranges.validate();
  ObstacleState o;
  o.size.x() = rng.uniform(ranges.size_xy.lo, ranges.size_xy.hi);
  o.size.y() = rng.uniform(ranges.size_xy.lo, ranges.size_xy.hi);
  o.size.z() = rng.uniform(ranges.size_z.lo, ranges.size_z.hi);
  o.mass = rng.uniform(ranges.mass.lo, ranges.mass.hi);
  for (int i = 0; i < 3; ++i)
    o.com_frac[i] = rng.uniform(ranges.com_frac.lo, ranges.com_frac.hi);
  o.mu = rng.uniform(ranges.mu.lo, ranges.mu.hi);
  return o;
}

struct RobotState {
  Pose2 base;                       // (x, y, theta)
  double v_bx = 0.0;                // commanded-and-achieved forward speed
  double omega_bz = 0.0;
  JointVec q = JointVec::Zero();
  JointVec qdot = JointVec::Zero();
  JointVec qddot = JointVec::Zero();
  Vec3 ee_pos = Vec3::Zero();       // base frame, from FK
  Quat ee_quat = Quat::Identity();  // base frame
  Vec2 base_vel_world = Vec2::Zero();
  Vec2 base_acc_world = Vec2::Zero();
  Action prev_action = Action::Zero();

  Vec3 ee_pos_world() const {
    const Vec2 xy = base.to_world(Vec2(ee_pos.x(), ee_pos.y()));
    return {xy.x(), xy.y(), ee_pos.z()};
  }
};

// Contact flag plus the five normalized obstacle properties (Table-IV "x").
struct PrivilegedInfo {
  double contact_ee = 0.0;
  double mass = 0.0;
  Vec3 com_frac = Vec3::Zero();
  double mu = 0.0;

  Eigen::Matrix<double, kPrivilegedDim, 1> vec() const {
    Eigen::Matrix<double, kPrivilegedDim, 1> v;
    v << contact_ee, mass, com_frac.x(), com_frac.y(), com_frac.z(), mu;
    return v;
  }
};

struct EpisodeConfig {
  std::uint64_t seed = 0;
  double dt = 0.02;              // 50 Hz control
  int physics_substeps = 2;      // 100 Hz inner rate
  int max_steps = 3000;
  double d_thr = 0.35;           // clearance threshold, m
  double v_max = 0.4;            // base forward speed cap, m/s
  double sensing_range = 1.5;    // m
  double goal_radius = 0.3;      // m
  double robot_radius = 0.3;     // m
  double ik_lambda = 0.02;       // DLS damping
  Range v_cmd{0.1, 0.4};
  int n_obstacles = 0;
  PropertyRanges ranges;
};

}  // namespace namo

#endif  // NAMOPUSH_TYPES_HPP_
