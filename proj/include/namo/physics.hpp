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

#ifndef NAMOPUSH_PHYSICS_HPP_
#define NAMOPUSH_PHYSICS_HPP_

#include "namo/map.hpp"
#include "namo/types.hpp"

namespace namo {

inline constexpr double kPenetrationTol = 1e-4;  // m

// Obstacle faces are indexed 0..3 by their outward normal in the obstacle
// frame: 0 -> +x, 1 -> +y, 2 -> -x, 3 -> -y. The lateral coordinate runs
// along the face tangent (obstacle y for faces 0/2, obstacle x for 1/3).
inline Vec2 face_outward_local(int face) {
  switch (face & 3) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

inline double face_width(const ObstacleState& o, int face) {
  return (face % 2 == 0) ? o.size.y() : o.size.x();
}

// Half-extent along the face's outward axis.
inline double face_half_extent(const ObstacleState& o, int face) {
  return 0.5 * ((face % 2 == 0) ? o.size.x() : o.size.y());
}

// Yaw of the face's inward normal in the world frame.
inline double face_inward_yaw(const ObstacleState& o, int face) {
  const Vec2 n = rot2(o.yaw) * (-face_outward_local(face));
  return std::atan2(n.y(), n.x());
}

// Face of the obstacle nearest to a world point.
inline int nearest_face(const ObstacleState& o, const Vec2& p_world) {
  const Vec2 q = o.pose().to_local(p_world);
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int f = 0; f < 4; ++f) {
    const double d = face_half_extent(o, f) - q.dot(face_outward_local(f));
    if (d < best_d) {
      best_d = d;
      best = f;
    }
  }
  return best;
}

// Point-vs-box contact against a vertical face.
struct FaceContact {
  bool active = false;
  int face = 0;
  double lateral_frac = 0.0;  // in [-0.5, 0.5] when on the face
  double penetration = 0.0;   // depth past the face plane, >= 0
  double height = 0.0;        // contact z above ground
  Vec2 point = Vec2::Zero();      // world, ground projection
  Vec2 normal_in = Vec2::Zero();  // world, pointing into the box
};

inline FaceContact point_box_contact(const ObstacleState& o, const Vec3& p_world,
                                     double tol = kPenetrationTol) {
  FaceContact c;
  if (p_world.z() < -tol || p_world.z() > o.size.z() + tol) return c;
  const Pose2 pose = o.pose();
  const Vec2 q = pose.to_local(Vec2(p_world.x(), p_world.y()));
  const double hx = 0.5 * o.size.x(), hy = 0.5 * o.size.y();
  if (std::abs(q.x()) > hx + tol || std::abs(q.y()) > hy + tol) return c;
  const int f = nearest_face(o, Vec2(p_world.x(), p_world.y()));
  const Vec2 e = face_outward_local(f);
  const double along = q.dot(e);
  const double lateral = q.dot(Vec2(-e.y(), e.x()));
  const double half_w = 0.5 * face_width(o, f);
  if (std::abs(lateral) > half_w + tol) return c;
  c.active = true;
  c.face = f;
  c.lateral_frac = lateral / face_width(o, f);
  c.penetration = std::max(0.0, face_half_extent(o, f) - along);
  c.height = std::clamp(p_world.z(), 0.0, o.size.z());
  c.point = pose.to_world(q);
  c.normal_in = pose.vec_to_world(-e);
  return c;
}

// Disc (base footprint) vs box footprint.
inline bool disc_box_contact(const ObstacleState& o, const Vec2& center,
                             double radius, double tol = kPenetrationTol) {
  const Vec2 q = o.pose().to_local(center);
  const double hx = 0.5 * o.size.x(), hy = 0.5 * o.size.y();
  const Vec2 cl(std::clamp(q.x(), -hx, hx), std::clamp(q.y(), -hy, hy));
  return (q - cl).norm() <= radius + tol;
}

// Rotated rectangle vs occupied grid cells (separating axis per cell).
inline bool box_wall_contact(const StaticMap& map, const ObstacleState& o,
                             double tol = kPenetrationTol) {
  const auto cs = o.corners();
  Vec2 lo = cs[0], hi = cs[0];
  for (const Vec2& c : cs) {
    lo = lo.cwiseMin(c);
    hi = hi.cwiseMax(c);
  }
  int cx0, cy0, cx1, cy1;
  map.world_to_cell(lo - Vec2(tol, tol), &cx0, &cy0);
  map.world_to_cell(hi + Vec2(tol, tol), &cx1, &cy1);
  const double res = map.resolution();
  const Pose2 pose = o.pose();
  const double hx = 0.5 * o.size.x() + tol, hy = 0.5 * o.size.y() + tol;
  for (int cy = cy0; cy <= cy1; ++cy) {
    for (int cx = cx0; cx <= cx1; ++cx) {
      if (!map.wall(cx, cy)) continue;  // out-of-bounds counts as wall
      const Vec2 cc = map.cell_to_world(cx, cy);
      // SAT on the 4 candidate axes (cell is axis-aligned).
      const Vec2 d = pose.to_local(cc);
      bool sep = false;
      // obstacle axes
      const Mat2 r = rot2(-o.yaw);
      const Vec2 half_cell(0.5 * res, 0.5 * res);
      {
        const double rx = half_cell.x() * std::abs(r(0, 0)) +
                          half_cell.y() * std::abs(r(0, 1));
        const double ry = half_cell.x() * std::abs(r(1, 0)) +
                          half_cell.y() * std::abs(r(1, 1));
        if (std::abs(d.x()) > hx + rx || std::abs(d.y()) > hy + ry) sep = true;
      }
      // cell axes
      if (!sep) {
        const Vec2 dw = o.pos - cc;
        const Mat2 rw = rot2(o.yaw);
        const double px = hx * std::abs(rw(0, 0)) + hy * std::abs(rw(0, 1));
        const double py = hx * std::abs(rw(1, 0)) + hy * std::abs(rw(1, 1));
        if (std::abs(dw.x()) > half_cell.x() + px ||
            std::abs(dw.y()) > half_cell.y() + py)
          sep = true;
      }
      if (!sep) return true;
    }
  }
  return false;
}

inline bool disc_wall_contact(const StaticMap& map, const Vec2& center,
                              double radius, double tol = kPenetrationTol) {
  int cx0, cy0, cx1, cy1;
  map.world_to_cell(center - Vec2(radius + tol, radius + tol), &cx0, &cy0);
  map.world_to_cell(center + Vec2(radius + tol, radius + tol), &cx1, &cy1);
  const double res = map.resolution();
  for (int cy = cy0; cy <= cy1; ++cy) {
    for (int cx = cx0; cx <= cx1; ++cx) {
      if (!map.wall(cx, cy)) continue;
      const Vec2 cc = map.cell_to_world(cx, cy);
      const Vec2 cl(std::clamp(center.x(), cc.x() - 0.5 * res, cc.x() + 0.5 * res),
                    std::clamp(center.y(), cc.y() - 0.5 * res, cc.y() + 0.5 * res));
      if ((center - cl).norm() <= radius + tol) return true;
    }
  }
  return false;
}

// All contact pairs the rewards and failure checks consume.
struct ContactSet {
  FaceContact ee_obstacle;
  bool base_obstacle = false;
  bool obstacle_wall = false;
  bool base_wall = false;
};

// Support-friction push response. The resisting force for pure translation is
// mu*m*g; the ellipsoidal limit-surface constant kappa couples rotation to
// translation resistance.
struct PushModel {
  double mu = 0.4;
  double mass = 10.0;
  Vec2 pressure_center = Vec2::Zero();  // CoM ground projection, world
  double kappa = 0.18;                  // characteristic support radius

  static PushModel from(const ObstacleState& o) {
    PushModel m;
    m.mu = o.mu;
    m.mass = o.mass;
    m.pressure_center =
        o.pose().to_world(Vec2(o.com_frac.x() * o.size.x(),
                               o.com_frac.y() * o.size.y()));
    m.kappa = 0.6 * (o.size.x() + o.size.y()) / 4.0;
    return m;
  }

  double breakaway_force() const { return mu * mass * kGravity; }
};

struct PushResult {
  bool slid = false;
  double force = 0.0;        // contact reaction force magnitude
  Vec2 displacement = Vec2::Zero();
  double yaw_change = 0.0;
};

// Elastic contact stiffness: the implied normal force is K * penetration, so
// the obstacle holds still until the penetration exceeds the break-away
// residual mu*m*g / K (making the break-away observable in the motion onset).
inline constexpr double kContactStiffness = 2.0e3;  // N/m

inline double breakaway_penetration(const PushModel& m) {
  return m.breakaway_force() / kContactStiffness;
}

// Quasi-static push. Below the break-away residual the contact is static and
// the reaction is the elastic force K*pen. Beyond it the obstacle slides,
// keeping the residual penetration (so the steady-slide reaction force is
// exactly mu*m*g); the contact point's normal motion resolves the excess,
// split into translation and rotation by the lever arm from the pressure
// center: s = (pen - pen*) / (kappa^2 + l^2), dpos = kappa^2 s n, dyaw = l s.
inline PushResult resolve_push(ObstacleState& o, const FaceContact& contact,
                               double /*dt*/) {
  PushResult res;
  if (!contact.active || contact.penetration <= kPenetrationTol) return res;
  const PushModel model = PushModel::from(o);
  const double pen_star = breakaway_penetration(model);
  if (contact.penetration <= pen_star) {
    res.force = kContactStiffness * contact.penetration;
    return res;
  }
  const Vec2 n = contact.normal_in;
  const Vec2 r = contact.point - model.pressure_center;
  const double lever = cross2(r, n);
  const double s = (contact.penetration - pen_star) /
                   (model.kappa * model.kappa + lever * lever);
  res.slid = true;
  res.force = model.breakaway_force();
  res.displacement = model.kappa * model.kappa * s * n;
  res.yaw_change = lever * s;
  o.pos += res.displacement;
  o.yaw = wrap_angle(o.yaw + res.yaw_change);
  return res;
}

// Horizontal distance from the CoM to the contacted face's bottom edge (the
// tipping pivot). Shrinks as the CoM shifts toward the pusher.
inline double tipping_arm(const ObstacleState& o, int face) {
  const Vec2 e = face_outward_local(face);
  const Vec2 com_xy(o.com_frac.x() * o.size.x(), o.com_frac.y() * o.size.y());
  return face_half_extent(o, face) - com_xy.dot(e);
}

inline double com_height(const ObstacleState& o) {
  return (0.5 + o.com_frac.z()) * o.size.z();
}

// Tilt past this angle means the CoM clears the pivot edge: rollover.
inline double rollover_threshold(const ObstacleState& o, int face) {
  return std::atan2(tipping_arm(o, face), com_height(o));
}

// Single-DOF tipping about the contacted face's bottom edge. The tipping
// moment F*h_c competes with the restoring moment m*g*b; tilt integrates at
// a rate proportional to the normalized excess and decays otherwise.
inline void update_tilt(ObstacleState& o, double contact_force,
                        double contact_height, int face, double dt,
                        double time_constant = 0.5) {
  const double b = tipping_arm(o, face);
  const double restoring = o.mass * kGravity * b;
  const double tipping = contact_force * contact_height;
  const double rate = (tipping - restoring) /
                      (o.mass * kGravity * com_height(o) * time_constant);
  if (o.tilt_face != face && o.tilt <= 1e-9) o.tilt_face = face;
  if (face == o.tilt_face) {
    o.tilt = std::max(0.0, o.tilt + rate * dt);
  } else {
    // a push on another face first has to flatten the existing tilt
    o.tilt = std::max(0.0, o.tilt - std::abs(rate) * dt);
  }
  if (o.tilt > rollover_threshold(o, o.tilt_face)) o.rolled_over = true;
}

// Passive decay toward upright when nothing is pushing.
inline void decay_tilt(ObstacleState& o, double dt, double time_constant = 0.5) {
  if (o.tilt <= 0.0) return;
  const double b = tipping_arm(o, o.tilt_face);
  const double rate = b / (com_height(o) * time_constant);
  o.tilt = std::max(0.0, o.tilt - rate * dt);
}

}  // namespace namo

#endif  // NAMOPUSH_PHYSICS_HPP_
