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

#ifndef NAMOPUSH_KINEMATICS_HPP_
#define NAMOPUSH_KINEMATICS_HPP_

#include <array>

#include "namo/math.hpp"
#include "namo/types.hpp"

namespace namo {

using Transform = Eigen::Isometry3d;
using Twist = Eigen::Matrix<double, 6, 1>;  // [v; omega]
using Jacobian = Eigen::Matrix<double, 6, kNumJoints>;

struct RevoluteJoint {
  Transform fixed = Transform::Identity();  // parent link transform
  Vec3 axis = Vec3::UnitZ();
  double limit_lo = -2.8;
  double limit_hi = 2.8;
  double vel_limit = 2.0;  // rad/s
};

// Serial 7-DOF arm mounted on the mobile base. All poses are expressed in the
// base frame.
struct KinematicChain {
  Transform mount = Transform::Identity();  // base -> arm root
  std::array<RevoluteJoint, kNumJoints> joints;
  Transform tool = Transform::Identity();   // last joint -> ee

  // Dimensioned like a 7-DOF mobile-manipulator arm: pan/lift/roll shoulder,
  // elbow, forearm roll, wrist flex/roll.
  static KinematicChain default_chain() {
    KinematicChain c;
    c.mount.translate(Vec3(0.12, 0.0, 0.35));
    auto link = [](double x, double y, double z) {
      Transform t = Transform::Identity();
      t.translate(Vec3(x, y, z));
      return t;
    };
    const Vec3 X = Vec3::UnitX(), Y = Vec3::UnitY(), Z = Vec3::UnitZ();
    c.joints[0] = {link(0.0, 0.0, 0.06), Z, -1.60, 1.60, 1.25};
    c.joints[1] = {link(0.12, 0.0, 0.0), Y, -1.22, 1.52, 1.45};
    c.joints[2] = {link(0.12, 0.0, 0.0), X, -3.14, 3.14, 1.57};
    c.joints[3] = {link(0.13, 0.0, 0.0), Y, -2.25, 2.25, 1.52};
    c.joints[4] = {link(0.12, 0.0, 0.0), X, -3.14, 3.14, 1.57};
    c.joints[5] = {link(0.13, 0.0, 0.0), Y, -2.18, 2.18, 2.26};
    c.joints[6] = {link(0.12, 0.0, 0.0), X, -3.14, 3.14, 2.26};
    c.tool = link(0.15, 0.0, 0.0);
    return c;
  }

  JointVec clamp_positions(const JointVec& q) const {
    JointVec out;
    for (int i = 0; i < kNumJoints; ++i)
      out[i] = std::clamp(q[i], joints[i].limit_lo, joints[i].limit_hi);
    return out;
  }
  JointVec clamp_velocities(const JointVec& qd) const {
    JointVec out;
    for (int i = 0; i < kNumJoints; ++i)
      out[i] = std::clamp(qd[i], -joints[i].vel_limit, joints[i].vel_limit);
    return out;
  }
};

inline Transform forward_transform(const KinematicChain& chain, const JointVec& q) {
  Transform t = chain.mount;
  for (int i = 0; i < kNumJoints; ++i) {
    t = t * chain.joints[i].fixed;
    t.rotate(Eigen::AngleAxisd(q[i], chain.joints[i].axis));
  }
  return t * chain.tool;
}

// End-effector pose in the base frame; quaternion normalized.
inline void forward_kinematics(const KinematicChain& chain, const JointVec& q,
                               Vec3* pos, Quat* quat) {
  const Transform t = forward_transform(chain, q);
  *pos = t.translation();
  *quat = Quat(t.rotation()).normalized();
}

// Geometric Jacobian (linear on top, angular below) in the base frame.
inline Jacobian jacobian(const KinematicChain& chain, const JointVec& q) {
  std::array<Vec3, kNumJoints> axes, origins;
  Transform t = chain.mount;
  for (int i = 0; i < kNumJoints; ++i) {
    t = t * chain.joints[i].fixed;
    axes[i] = t.rotation() * chain.joints[i].axis;
    origins[i] = t.translation();
    t.rotate(Eigen::AngleAxisd(q[i], chain.joints[i].axis));
  }
  const Vec3 p_ee = (t * chain.tool).translation();
  Jacobian j;
  for (int i = 0; i < kNumJoints; ++i) {
    j.block<3, 1>(0, i) = axes[i].cross(p_ee - origins[i]);
    j.block<3, 1>(3, i) = axes[i];
  }
  return j;
}

// Damped least squares: qdot = J^T (J J^T + lambda^2 I)^-1 twist. Velocity
// limits are applied by the caller via chain.clamp_velocities.
inline JointVec dls_ik(const Jacobian& j, const Twist& twist, double lambda) {
  Eigen::Matrix<double, 6, 6> a = j * j.transpose();
  a.diagonal().array() += lambda * lambda;
  return j.transpose() * a.ldlt().solve(twist);
}

// Exact unicycle integration (arc when omega != 0).
inline Pose2 integrate_base(const Pose2& pose, double v, double omega, double dt) {
  Pose2 out = pose;
  if (std::abs(omega) < 1e-12) {
    out.x += v * std::cos(pose.theta) * dt;
    out.y += v * std::sin(pose.theta) * dt;
  } else {
    const double r = v / omega;
    out.x += r * (std::sin(pose.theta + omega * dt) - std::sin(pose.theta));
    out.y += r * (-std::cos(pose.theta + omega * dt) + std::cos(pose.theta));
    out.theta = wrap_angle(pose.theta + omega * dt);
  }
  return out;
}

}  // namespace namo

#endif  // NAMOPUSH_KINEMATICS_HPP_
