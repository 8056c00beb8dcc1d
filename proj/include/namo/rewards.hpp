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

#ifndef NAMOPUSH_REWARDS_HPP_
#define NAMOPUSH_REWARDS_HPP_

#include <array>
#include <string>

#include "namo/world.hpp"

namespace namo {

struct RewardWeights {
  // k^l_0..10 and k^h_0..5, best-performing defaults.
  std::array<double, 11> low{1.0, 1.0, 0.8, 1.5, 1.5, 100.0, 0.3,
                             3e-3, 1e-3, 3e-3, 3e-3};
  std::array<double, 6> high{1.0, 0.8, 100.0, 100.0, 100.0, 0.2};
};

struct LowRewardBreakdown {
  std::array<double, 3> cmd{};     // r^cmd_0..2
  std::array<double, 5> stable{};  // r^stable_0..4
  std::array<double, 3> areg{};    // r^areg_0..2
  double cmd_total() const { return cmd[0] + cmd[1] + cmd[2]; }
  double stable_total() const {
    return stable[0] + stable[1] + stable[2] + stable[3] + stable[4];
  }
  double areg_total() const { return areg[0] + areg[1] + areg[2]; }
  double total() const { return cmd_total() + stable_total() + areg_total(); }
};

struct HighRewardBreakdown {
  std::array<double, 3> path{};  // r^path_0..2
  std::array<double, 2> safe{};  // r^safe_0..1
  std::array<double, 2> creg{};  // r^creg_0..1
  double path_total() const { return path[0] + path[1] + path[2]; }
  double safe_total() const { return safe[0] + safe[1]; }
  double creg_total() const { return creg[0] + creg[1]; }
  double total() const { return path_total() + safe_total() + creg_total(); }
};

// Yaw of the inward normal of the obstacle face nearest the ee, expressed in
// the base frame and wrapped to (-pi/2, pi/2].
inline double contact_face_yaw(const World& w, const ObstacleState& o) {
  const Vec3 ee_w = w.robot.ee_pos_world();
  const int f = nearest_face(o, Vec2(ee_w.x(), ee_w.y()));
  return wrap_half(face_inward_yaw(o, f) - w.robot.base.theta);
}

// Lateral position of the ee along the nearest face, as a fraction of the
// face width (the p^o_{ee,y}/d_{o,y} quantity commands are defined against).
inline double ee_lateral_fraction(const World& w, const ObstacleState& o) {
  const Vec3 ee_w = w.robot.ee_pos_world();
  const Vec2 q = o.pose().to_local(Vec2(ee_w.x(), ee_w.y()));
  const int f = nearest_face(o, Vec2(ee_w.x(), ee_w.y()));
  const Vec2 e = face_outward_local(f);
  return q.dot(Vec2(-e.y(), e.x())) / face_width(o, f);
}

// Table-I low-level reward. Requires a tracked obstacle and populated
// finite-difference accelerations.
inline LowRewardBreakdown low_level_reward(const World& w, const PushingCommand& c,
                                           const Action& a_t, const Action& a_prev,
                                           const RewardWeights& kw = {}) {
  const auto& k = kw.low;
  LowRewardBreakdown r;
  const ObstacleState& o = *w.tracked_obstacle();

  r.cmd[0] = k[0] * std::exp(-2.0 * std::abs(c.p - ee_lateral_fraction(w, o)) / 0.1);
  r.cmd[1] = k[1] * std::exp(-std::abs(c.theta - contact_face_yaw(w, o)) / 0.1);
  r.cmd[2] = k[2] * std::exp(-2.0 * std::abs(c.v - w.robot.v_bx) / 0.1);

  r.stable[0] = k[3] * (w.contacts.ee_obstacle.active ? 1.0 : 0.0);
  {
    const Quat q_ee = w.robot.ee_quat;
    const Quat q_o = Quat(base_rotation_world(w.robot.base).transpose() *
                          obstacle_rotation_world(o));
    const double dot = std::clamp(std::abs(q_ee.coeffs().dot(q_o.coeffs())), 0.0, 1.0);
    const double angle = std::acos(dot);
    r.stable[1] = k[4] * (1.0 - std::tanh(2.0 * angle / 0.1));
  }
  r.stable[2] = -k[5] * (w.contacts.base_obstacle ? 1.0 : 0.0);
  {
    const Mat3 r_b = base_rotation_world(w.robot.base).transpose() *
                     obstacle_rotation_world(o);
    const double pitch = euler_xyz(r_b)[1];
    r.stable[3] = -k[6] * std::tanh(std::abs(pitch) / 0.1);
  }
  {
    const Vec2 acc_b = w.robot.base.vec_to_local(o.lin_acc);
    r.stable[4] = -k[7] * (std::abs(acc_b.x()) + std::abs(acc_b.y()));
  }

  r.areg[0] = -k[8] * w.robot.qddot.norm();
  r.areg[1] = -k[9] * w.robot.base_acc_world.norm();
  r.areg[2] = -k[10] * (a_t - a_prev).norm();
  return r;
}

// Signed perpendicular distances of the obstacle's four ground corners from
// the infinite line base -> g1 (world frame). Positive = left of the line.
inline std::array<double, 4> clearance_distances(const World& w, const Vec2& g1_world) {
  const ObstacleState& o = *w.tracked_obstacle();
  const Vec2 base = w.robot.base.translation();
  if ((g1_world - base).norm() < 1e-9)
    throw std::invalid_argument("clearance_distances: degenerate base->g1 line");
  std::array<double, 4> d;
  const auto cs = o.corners();
  for (int i = 0; i < 4; ++i) d[i] = signed_line_distance(base, g1_world, cs[i]);
  return d;
}

// Clearance indicator of r^path_2: all corners past d_thr and on one side.
inline bool obstacle_cleared(const std::array<double, 4>& d, double d_thr) {
  double min_abs = std::numeric_limits<double>::infinity();
  for (double di : d) min_abs = std::min(min_abs, std::abs(di));
  if (min_abs <= d_thr) return false;
  const double s1 = d[1] >= 0.0 ? 1.0 : -1.0;
  for (double di : d)
    if ((di >= 0.0 ? 1.0 : -1.0) != s1) return false;
  return true;
}

// Table-III high-level reward. r^creg_0 reuses the low-level stability and
// action-regularization sums.
inline HighRewardBreakdown high_level_reward(const World& w, const PushingCommand& c_t,
                                             const PushingCommand& c_prev,
                                             const Path& path,
                                             const LowRewardBreakdown& low,
                                             const RewardWeights& kw = {}) {
  const auto& k = kw.high;
  HighRewardBreakdown r;
  const auto goals = local_goals(path, w.robot.base);
  const double bearing = std::atan2(goals[0].y(), goals[0].x());
  r.path[0] = k[0] * std::exp(-std::abs(bearing) / 0.1);
  r.path[1] = k[1] * std::exp(-std::abs(1.0 - w.robot.v_bx / w.cfg.v_max) / 0.1);
  r.path[2] = 0.0;
  if (w.tracked_obstacle() != nullptr) {
    const double s0 = path.closest_arc(w.robot.base.translation());
    Vec2 g1_world = path.at_arc(s0 + 1.0);
    if ((g1_world - w.robot.base.translation()).norm() < 1e-9) {
      // at the path end: fall back to the current heading
      g1_world = w.robot.base.to_world(Vec2(1.0, 0.0));
    }
    const auto d = clearance_distances(w, g1_world);
    if (obstacle_cleared(d, w.cfg.d_thr)) r.path[2] = k[2];
  }

  r.safe[0] = -k[3] * (w.contacts.base_wall ? 1.0 : 0.0);
  r.safe[1] = -k[4] * (w.contacts.obstacle_wall ? 1.0 : 0.0);

  r.creg[0] = low.stable_total() + low.areg_total();
  r.creg[1] = -k[5] * (c_t.vec() - c_prev.vec()).norm();
  return r;
}

enum class TerminationReason {
  None,
  Timeout,
  ObstacleWallCollision,
  TippedOver,
  NoFeasiblePath,
  SimFault,
};

struct Termination {
  enum class Status { Running, Success, Fail } status = Status::Running;
  TerminationReason reason = TerminationReason::None;

  static Termination running() { return {}; }
  static Termination success() { return {Status::Success, TerminationReason::None}; }
  static Termination fail(TerminationReason r) { return {Status::Fail, r}; }
};

inline const char* to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::None: return "none";
    case TerminationReason::Timeout: return "timeout";
    case TerminationReason::ObstacleWallCollision: return "obstacle_wall";
    case TerminationReason::TippedOver: return "tipped_over";
    case TerminationReason::NoFeasiblePath: return "no_feasible_path";
    case TerminationReason::SimFault: return "sim_fault";
  }
  return "unknown";
}

inline Termination check_termination(const World& w, int step,
                                     const EpisodeConfig& cfg) {
  if (w.sim_fault) return Termination::fail(TerminationReason::SimFault);
  for (const ObstacleState& o : w.obstacles)
    if (o.rolled_over) return Termination::fail(TerminationReason::TippedOver);
  if (w.contacts.obstacle_wall)
    return Termination::fail(TerminationReason::ObstacleWallCollision);
  if ((w.robot.base.translation() - w.map.goal()).norm() <= cfg.goal_radius)
    return Termination::success();
  if (step >= cfg.max_steps) return Termination::fail(TerminationReason::Timeout);
  return Termination::running();
}

}  // namespace namo

#endif  // NAMOPUSH_REWARDS_HPP_
