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

#ifndef NAMOPUSH_MATH_HPP_
#define NAMOPUSH_MATH_HPP_

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cmath>

namespace namo {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kGravity = 9.81;

// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a <= 0.0) a += 2.0 * kPi;
  return a - kPi;
}

// Wraps an angle to (-pi/2, pi/2] (direction of a line, sign-free).
inline double wrap_half(double a) {
  a = std::fmod(a + kPi / 2.0, kPi);
  if (a <= 0.0) a += kPi;
  return a - kPi / 2.0;
}

inline Mat2 rot2(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

// Planar rigid transform (base pose, obstacle pose, ...).
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Vec2 translation() const { return {x, y}; }

  Vec2 to_world(const Vec2& p_local) const {
    return rot2(theta) * p_local + translation();
  }
  Vec2 to_local(const Vec2& p_world) const {
    return rot2(-theta) * (p_world - translation());
  }
  // Rotate-only mapping for free vectors.
  Vec2 vec_to_local(const Vec2& v_world) const { return rot2(-theta) * v_world; }
  Vec2 vec_to_world(const Vec2& v_local) const { return rot2(theta) * v_local; }
};

// XYZ-convention Euler angles of a rotation matrix, R = Rx(a)Ry(b)Rz(c).
inline Vec3 euler_xyz(const Mat3& r) {
  const double b = std::asin(std::clamp(r(0, 2), -1.0, 1.0));
  double a, c;
  if (std::abs(r(0, 2)) < 1.0 - 1e-12) {
    a = std::atan2(-r(1, 2), r(2, 2));
    c = std::atan2(-r(0, 1), r(0, 0));
  } else {  // gimbal lock, put everything into a
    a = std::atan2(r(1, 0), r(1, 1));
    c = 0.0;
  }
  return {a, b, c};
}

// Signed perpendicular distance of point p from the infinite line a->b.
// Positive on the left side of the direction a->b.
inline double signed_line_distance(const Vec2& a, const Vec2& b, const Vec2& p) {
  const Vec2 d = b - a;
  const double len = d.norm();
  return (d.x() * (p.y() - a.y()) - d.y() * (p.x() - a.x())) / len;
}

inline double cross2(const Vec2& a, const Vec2& b) {
  return a.x() * b.y() - a.y() * b.x();
}

}  // namespace namo

#endif  // NAMOPUSH_MATH_HPP_
