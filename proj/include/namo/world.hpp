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

#ifndef NAMOPUSH_WORLD_HPP_
#define NAMOPUSH_WORLD_HPP_

#include <vector>

#include "namo/kinematics.hpp"
#include "namo/map.hpp"
#include "namo/physics.hpp"
#include "namo/planner.hpp"
#include "namo/types.hpp"

namespace namo {

// Full simulation state. Plain value type: copying a World forks the episode.
struct World {
  StaticMap map;
  KinematicChain chain = KinematicChain::default_chain();
  EpisodeConfig cfg;
  RobotState robot;
  std::vector<ObstacleState> obstacles;
  int tracked = -1;  // current interaction target, -1 = none
  ContactSet contacts;
  PushingCommand prev_command;
  double time = 0.0;
  int step_count = 0;
  bool sim_fault = false;
  bool base_pushes = false;  // axis-aligned baseline pushes with the base

  ObstacleState* tracked_obstacle() {
    return (tracked >= 0 && tracked < static_cast<int>(obstacles.size()))
               ? &obstacles[tracked] : nullptr;
  }
  const ObstacleState* tracked_obstacle() const {
    return (tracked >= 0 && tracked < static_cast<int>(obstacles.size()))
               ? &obstacles[tracked] : nullptr;
  }

  void refresh_fk() {
    forward_kinematics(chain, robot.q, &robot.ee_pos, &robot.ee_quat);
  }

  void refresh_contacts() {
    contacts = ContactSet{};
    const Vec3 ee_w = robot.ee_pos_world();
    const ObstacleState* target = tracked_obstacle();
    if (target) contacts.ee_obstacle = point_box_contact(*target, ee_w);
    for (const ObstacleState& o : obstacles) {
      if (disc_box_contact(o, robot.base.translation(), cfg.robot_radius))
        contacts.base_obstacle = true;
      if (box_wall_contact(map, o)) contacts.obstacle_wall = true;
    }
    contacts.base_wall =
        disc_wall_contact(map, robot.base.translation(), cfg.robot_radius);
  }
};

// Rotation of the obstacle in the world frame: yaw about z composed with the
// single-DOF tilt about the contacted face's horizontal (tangent) axis.
inline Mat3 obstacle_rotation_world(const ObstacleState& o) {
  const Vec2 e = face_outward_local(o.tilt_face);
  const Vec3 tangent(-e.y(), e.x(), 0.0);
  return Eigen::AngleAxisd(o.yaw, Vec3::UnitZ()).toRotationMatrix() *
         Eigen::AngleAxisd(o.tilt, tangent).toRotationMatrix();
}

inline Mat3 base_rotation_world(const Pose2& base) {
  return Eigen::AngleAxisd(base.theta, Vec3::UnitZ()).toRotationMatrix();
}

struct LowObsResult {
  LowObs vec = LowObs::Zero();
  bool valid = false;  // false when no tracked obstacle (TrackPath mode)
};

// Table-IV low-level observation:
// [q(7), v_bx, w_bz, p_ee^b(3), th_ee^b(3), p_o^b(3), th_o^b(3), d_o(3), a_prev(8)].
inline LowObsResult compute_low_obs(const World& w) {
  LowObsResult out;
  LowObs& v = out.vec;
  int k = 0;
  for (int i = 0; i < kNumJoints; ++i) v[k++] = w.robot.q[i];
  v[k++] = w.robot.v_bx;
  v[k++] = w.robot.omega_bz;
  for (int i = 0; i < 3; ++i) v[k++] = w.robot.ee_pos[i];
  const Vec3 ee_euler = euler_xyz(w.robot.ee_quat.toRotationMatrix());
  for (int i = 0; i < 3; ++i) v[k++] = wrap_angle(ee_euler[i]);
  const ObstacleState* o = w.tracked_obstacle();
  if (o) {
    const Vec2 p_b = w.robot.base.to_local(o->pos);
    v[k++] = p_b.x();
    v[k++] = p_b.y();
    v[k++] = 0.5 * o->size.z();
    const Mat3 r_b = base_rotation_world(w.robot.base).transpose() *
                     obstacle_rotation_world(*o);
    const Vec3 eul = euler_xyz(r_b);
    for (int i = 0; i < 3; ++i) v[k++] = wrap_angle(eul[i]);
    for (int i = 0; i < 3; ++i) v[k++] = o->size[i];
    out.valid = true;
  } else {
    k += 9;  // obstacle block zeroed
  }
  for (int i = 0; i < kActionDim; ++i) v[k++] = w.robot.prev_action[i];
  return out;
}

// Privileged vector x: raw contact flag, properties normalized to [-1, 1]
// over the training ranges.
inline PrivilegedInfo compute_privileged(const World& w) {
  PrivilegedInfo x;
  const ObstacleState* o = w.tracked_obstacle();
  if (!o) return x;
  x.contact_ee = w.contacts.ee_obstacle.active ? 1.0 : 0.0;
  const PropertyRanges& r = w.cfg.ranges;
  x.mass = r.mass.normalize(o->mass);
  for (int i = 0; i < 3; ++i) x.com_frac[i] = r.com_frac.normalize(o->com_frac[i]);
  x.mu = r.mu.normalize(o->mu);
  return x;
}

// Table-IV high-level observation: [l_map(16), g0, g1, g2, c_prev(3)].
inline HighObs compute_high_obs(const World& w, const Path& path,
                                const Eigen::Matrix<double, kMapCodeDim, 1>& map_code) {
  if (path.empty())
    throw std::invalid_argument("compute_high_obs: empty path");
  HighObs v;
  int k = 0;
  for (int i = 0; i < kMapCodeDim; ++i) v[k++] = map_code[i];
  const auto goals = local_goals(path, w.robot.base);
  for (const Vec2& gp : goals) {
    v[k++] = gp.x();
    v[k++] = gp.y();
  }
  v[k++] = w.prev_command.p;
  v[k++] = w.prev_command.theta;
  v[k++] = w.prev_command.v;
  return v;
}

// Advances the world by one control tick (cfg.dt) under joint velocity and
// base velocity commands, running cfg.physics_substeps inner steps.
inline void step_world(World& w, const JointVec& qdot_cmd, double v_cmd,
                       double omega_cmd, double dt) {
  if (!qdot_cmd.allFinite() || !std::isfinite(v_cmd) || !std::isfinite(omega_cmd)) {
    w.sim_fault = true;
    return;
  }
  RobotState& rb = w.robot;
  const JointVec qdot = w.chain.clamp_velocities(qdot_cmd);
  const JointVec qdot_prev = rb.qdot;
  const Vec2 base_vel_prev = rb.base_vel_world;
  const Pose2 base_prev = rb.base;
  std::vector<Vec2> obst_pos_prev(w.obstacles.size());
  for (std::size_t i = 0; i < w.obstacles.size(); ++i)
    obst_pos_prev[i] = w.obstacles[i].pos;

  const int n_sub = std::max(1, w.cfg.physics_substeps);
  const double h = dt / n_sub;
  for (int sub = 0; sub < n_sub; ++sub) {
    // base: unicycle step, blocked by walls and obstacles
    Pose2 cand = integrate_base(rb.base, v_cmd, omega_cmd, h);
    bool blocked = disc_wall_contact(w.map, cand.translation(), w.cfg.robot_radius);
    if (!blocked && !w.base_pushes) {
      for (const ObstacleState& o : w.obstacles)
        if (disc_box_contact(o, cand.translation(), w.cfg.robot_radius, -1e-3)) {
          blocked = true;
          break;
        }
    }
    if (blocked) {
      cand.x = rb.base.x;
      cand.y = rb.base.y;  // rotation still allowed
    }
    rb.base = cand;

    // joints
    rb.q = w.chain.clamp_positions(rb.q + qdot * h);
    forward_kinematics(w.chain, rb.q, &rb.ee_pos, &rb.ee_quat);

    // pushing: resolve ee penetration against every obstacle
    const Vec3 ee_w = rb.ee_pos_world();
    for (ObstacleState& o : w.obstacles) {
      if (o.rolled_over) continue;
      FaceContact c = point_box_contact(o, ee_w);
      if (c.active) {
        const PushResult pr = resolve_push(o, c, h);
        update_tilt(o, pr.force, c.height, c.face, h);
      } else {
        decay_tilt(o, h);
      }
      if (w.base_pushes) {
        // base-rim pseudo contact for the axis-aligned baseline
        const Vec2 q = o.pose().to_local(rb.base.translation());
        const double hx = 0.5 * o.size.x(), hy = 0.5 * o.size.y();
        const Vec2 cl(std::clamp(q.x(), -hx, hx), std::clamp(q.y(), -hy, hy));
        const double gap = (q - cl).norm() - w.cfg.robot_radius;
        if (gap < 0.0) {
          const Vec2 rim = o.pose().to_world(cl);
          FaceContact bc = point_box_contact(o, Vec3(rim.x(), rim.y(), 0.2));
          if (bc.active) {
            bc.penetration = -gap;
            resolve_push(o, bc, h);
          }
        }
      }
    }
  }

  rb.v_bx = v_cmd;
  rb.omega_bz = omega_cmd;
  rb.qdot = qdot;
  rb.qddot = (qdot - qdot_prev) / dt;
  rb.base_vel_world = (rb.base.translation() - base_prev.translation()) / dt;
  rb.base_acc_world = (rb.base_vel_world - base_vel_prev) / dt;
  for (std::size_t i = 0; i < w.obstacles.size(); ++i) {
    ObstacleState& o = w.obstacles[i];
    const Vec2 vel = (o.pos - obst_pos_prev[i]) / dt;
    o.lin_acc = (vel - o.lin_vel) / dt;
    o.lin_vel = vel;
  }
  w.refresh_contacts();
  w.time += dt;
  w.step_count += 1;
}

// Applies an 8-dim policy action (ee twist + base command), mapping the twist
// through DLS IK.
inline void apply_action(World& w, const Action& a) {
  if (!a.allFinite()) {
    w.sim_fault = true;
    return;
  }
  const Twist twist = a.head<6>();
  const Jacobian j = jacobian(w.chain, w.robot.q);
  const JointVec qdot = dls_ik(j, twist, w.cfg.ik_lambda);
  step_world(w, qdot, a[6], a[7], w.cfg.dt);
  w.robot.prev_action = a;
}

}  // namespace namo

#endif  // NAMOPUSH_WORLD_HPP_
