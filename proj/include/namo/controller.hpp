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

#ifndef NAMOPUSH_CONTROLLER_HPP_
#define NAMOPUSH_CONTROLLER_HPP_

#include <string>
#include <vector>

#include "namo/policy.hpp"
#include "namo/rewards.hpp"

namespace namo {

enum class NavMode { TrackPath, PushObstacle, Resume };

enum class MethodVariant { CA, AA, Ours, OursMinusP, OursMinusH, OursPlusG };

inline const char* to_string(MethodVariant v) {
  switch (v) {
    case MethodVariant::CA: return "ca";
    case MethodVariant::AA: return "aa";
    case MethodVariant::Ours: return "ours";
    case MethodVariant::OursMinusP: return "ours-p";
    case MethodVariant::OursMinusH: return "ours-h";
    case MethodVariant::OursPlusG: return "ours+g";
  }
  return "unknown";
}

inline bool parse_variant(const std::string& s, MethodVariant* out) {
  for (MethodVariant v : {MethodVariant::CA, MethodVariant::AA, MethodVariant::Ours,
                          MethodVariant::OursMinusP, MethodVariant::OursMinusH,
                          MethodVariant::OursPlusG}) {
    if (s == to_string(v)) {
      *out = v;
      return true;
    }
  }
  return false;
}

// Euclidean distance from a world point to the obstacle's ground footprint
// (0 inside).
inline double box_point_distance(const ObstacleState& o, const Vec2& p_world) {
  const Vec2 q = o.pose().to_local(p_world);
  const double hx = 0.5 * o.size.x(), hy = 0.5 * o.size.y();
  const Vec2 d(std::max(std::abs(q.x()) - hx, 0.0),
               std::max(std::abs(q.y()) - hy, 0.0));
  return d.norm();
}

// Path-obstruction guard: the obstacle is within sensing range of the base
// and its footprint intersects the upcoming path corridor inflated by the
// robot radius.
inline bool obstructs_path(const World& w, const ObstacleState& o, const Path& path) {
  if (box_point_distance(o, w.robot.base.translation()) > w.cfg.sensing_range)
    return false;
  const double s0 = path.closest_arc(w.robot.base.translation());
  const double s_end = std::min(path.length(), s0 + w.cfg.sensing_range + 2.5);
  for (double s = std::max(0.0, s0 - 0.3); s <= s_end; s += 0.05)
    if (box_point_distance(o, path.at_arc(s)) <= w.cfg.robot_radius) return true;
  return false;
}

// Nearest obstructing obstacle along the path, or -1.
inline int find_push_target(const World& w, const Path& path) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < w.obstacles.size(); ++i) {
    const ObstacleState& o = w.obstacles[i];
    if (o.rolled_over || !obstructs_path(w, o, path)) continue;
    const double d = box_point_distance(o, w.robot.base.translation());
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

// Clearance exit condition for PushObstacle: all obstacle corners past d_thr
// on one side of the base -> g1 line.
inline bool push_cleared(const World& w, const Path& path) {
  const ObstacleState* o = w.tracked_obstacle();
  if (!o) return true;
  const double s0 = path.closest_arc(w.robot.base.translation());
  Vec2 g1 = path.at_arc(s0 + 1.0);
  if ((g1 - w.robot.base.translation()).norm() < 1e-9)
    g1 = w.robot.base.to_world(Vec2(1.0, 0.0));
  return obstacle_cleared(clearance_distances(w, g1), w.cfg.d_thr);
}

struct BaseCommand {
  double v = 0.0;
  double omega = 0.0;
};

// Pure-pursuit tracker: steer at the point `lookahead` meters ahead along the
// path, slow down in turns and at the path end.
inline BaseCommand pure_pursuit(const Path& path, const Pose2& base,
                                double v_max = 0.4, double lookahead = 0.5,
                                double heading_gain = 2.0) {
  BaseCommand cmd;
  if (path.empty()) return cmd;
  const double s0 = path.closest_arc(base.translation());
  const Vec2 target = base.to_local(path.at_arc(s0 + lookahead));
  const double bearing = std::atan2(target.y(), target.x());
  cmd.omega = std::clamp(heading_gain * bearing, -1.0, 1.0);
  const double remaining = std::max(path.length() - s0,
                                    (path.points.back() - base.translation()).norm());
  double v = v_max * std::clamp(1.0 - std::abs(bearing) / 1.2, 0.0, 1.0);
  cmd.v = std::min(v, std::max(0.05, remaining));
  return cmd;
}

// One TrackPath tick: base follows the path, arm servos home.
inline void track_tick(World& w, const Path& path) {
  const BaseCommand bc = pure_pursuit(path, w.robot.base, w.cfg.v_max);
  const JointVec qdot_home = -4.0 * w.robot.q;
  step_world(w, qdot_home, bc.v, bc.omega, w.cfg.dt);
  w.robot.prev_action = Action::Zero();
}

// Assembled policy inputs (orderings are the training contract).
inline VecX low_policy_input(const LowObs& low, const VecX& x, const PushingCommand& c) {
  VecX in(PolicyBundle::kLowPolicyIn);
  in.head<kLowObsDim>() = low;
  in.segment<kPrivilegedDim>(kLowObsDim) = x;
  in.tail<kCommandDim>() = c.vec();
  return in;
}

inline VecX high_policy_input(const HighObs& high, const LowObs& low, const VecX& x) {
  VecX in(PolicyBundle::kHighPolicyIn);
  in.head<kHighObsDim>() = high;
  in.segment<kLowObsDim>(kHighObsDim) = low;
  in.tail<kPrivilegedDim>() = x;
  return in;
}

inline VecX e2e_policy_input(const LowObs& low, const HighObs& high) {
  VecX in(PolicyBundle::kE2eIn);
  in.head<kLowObsDim>() = low;
  in.tail<kHighObsDim>() = high;
  return in;
}

// Estimator output -> policy-facing x-hat: contact logit squashed to a
// probability, property dims clamped near the normalized range.
inline VecX estimate_to_x(const VecX& raw) {
  VecX x = raw;
  x[0] = 1.0 / (1.0 + std::exp(-raw[0]));
  for (int k = 1; k < kPrivilegedDim; ++k) x[k] = std::clamp(raw[k], -1.5, 1.5);
  return x;
}

struct EpisodeRecord {
  bool success = false;
  TerminationReason fail_reason = TerminationReason::None;
  double length_m = 0.0;   // traversed base path length
  double time_s = 0.0;
  double contact_rate = 0.0;  // ee-contact fraction of PushObstacle ticks
  int push_ticks = 0;
  double low_reward_sum = 0.0;
  double high_reward_sum = 0.0;
  double tracking_error_sum = 0.0;  // |dp|+|dtheta|+|dv| summed over push ticks
  std::vector<Vec2> base_trace;            // base position per tick
  std::vector<std::uint8_t> mode_trace;    // NavMode per tick
  std::vector<std::array<Vec2, 4>> obstacle_snaps;  // periodic footprints
};

inline constexpr int kHighDecisionPeriod = 5;  // low-level ticks per command

namespace detail {

// Rasterizes an obstacle footprint into a copy of the grid (CA overlay).
inline void rasterize_obstacle(StaticMap& grid, const ObstacleState& o,
                               double margin = 0.05) {
  const double r = 0.5 * std::hypot(o.size.x(), o.size.y()) + margin;
  int cx0, cy0, cx1, cy1;
  grid.world_to_cell(o.pos - Vec2(r, r), &cx0, &cy0);
  grid.world_to_cell(o.pos + Vec2(r, r), &cx1, &cy1);
  for (int cy = cy0; cy <= cy1; ++cy) {
    for (int cx = cx0; cx <= cx1; ++cx) {
      if (!grid.in_bounds(cx, cy)) continue;
      if (box_point_distance(o, grid.cell_to_world(cx, cy)) <= margin)
        grid.set_wall(cx, cy);
    }
  }
}

// Half-extent of the footprint along world direction d (support function).
inline double box_support(const ObstacleState& o, const Vec2& d_world) {
  const Mat2 r = rot2(o.yaw);
  const Vec2 dl = r.transpose() * d_world;
  return 0.5 * (std::abs(dl.x()) * o.size.x() + std::abs(dl.y()) * o.size.y());
}

// Free distance from p along direction d before hitting a static wall.
inline double ray_free_distance(const StaticMap& map, const Vec2& p, const Vec2& d,
                                double max_dist = 5.0) {
  const double step = 0.5 * map.resolution();
  for (double s = 0.0; s <= max_dist; s += step)
    if (map.occupied_at(p + s * d)) return s;
  return max_dist;
}

// Tracked paths are planned with a safety margin on top of the robot radius
// so that pure-pursuit corner cutting cannot jam the base against a wall;
// falls back to the bare radius when the margined plan is infeasible.
inline Path plan_tracked(const StaticMap& map, const Vec2& start, const Vec2& goal,
                         double robot_radius, double margin = 0.12) {
  try {
    return plan_astar(map, start, goal, robot_radius + margin);
  } catch (const PlanningFailure&) {
    return plan_astar(map, start, goal, robot_radius);
  }
}

}  // namespace detail

// Runs one full navigation episode. `w` must carry the map (with start/goal),
// obstacles, and config; policies are executed deterministically (mean
// actions), so the record is a pure function of the inputs.
inline EpisodeRecord run_episode(World w, MethodVariant variant,
                                 PolicyBundle* bundle) {
  EpisodeRecord rec;
  const bool learned = variant == MethodVariant::Ours ||
                       variant == MethodVariant::OursMinusP ||
                       variant == MethodVariant::OursMinusH ||
                       variant == MethodVariant::OursPlusG;
  if (learned && bundle == nullptr)
    throw std::invalid_argument(std::string("run_episode: variant '") +
                                to_string(variant) + "' needs a policy bundle");
  w.robot.base = {w.map.start().x(), w.map.start().y(), 0.0};
  {
    // face along the path
    Path p0;
    try {
      p0 = detail::plan_tracked(w.map, w.map.start(), w.map.goal(),
                                w.cfg.robot_radius);
    } catch (const PlanningFailure&) {
      rec.fail_reason = TerminationReason::NoFeasiblePath;
      return rec;
    }
    const Vec2 ahead = p0.at_arc(0.3) - w.map.start();
    if (ahead.norm() > 1e-9) w.robot.base.theta = std::atan2(ahead.y(), ahead.x());
  }
  w.refresh_fk();
  w.refresh_contacts();

  Path path = detail::plan_tracked(w.map, w.map.start(), w.map.goal(),
                                   w.cfg.robot_radius);
  NavMode mode = NavMode::TrackPath;
  Estimator::State ex_state;
  PushingCommand cmd, cmd_prev;
  int push_contact = 0, decision_tick = 0;
  Vec2 prev_pos = w.robot.base.translation();

  // CA overlay bookkeeping
  auto sensed_mask = std::vector<std::uint8_t>(w.obstacles.size(), 0);
  auto replan_overlay = [&]() -> bool {
    StaticMap overlay = w.map;
    for (std::size_t i = 0; i < w.obstacles.size(); ++i)
      if (sensed_mask[i]) detail::rasterize_obstacle(overlay, w.obstacles[i]);
    overlay.set_start(w.robot.base.translation());
    try {
      path = detail::plan_tracked(overlay, w.robot.base.translation(),
                                  w.map.goal(), w.cfg.robot_radius);
    } catch (const PlanningFailure&) {
      return false;
    }
    return true;
  };

  // AA per-interaction state
  enum class AaPhase { Approach, Align, Push };
  AaPhase aa_phase = AaPhase::Approach;
  Vec2 aa_dir = Vec2::UnitX();
  Vec2 aa_stand = Vec2::Zero();
  double aa_pushed = 0.0;
  std::vector<int> aa_attempts(w.obstacles.size(), 0);

  auto record_tick = [&](NavMode m) {
    rec.base_trace.push_back(w.robot.base.translation());
    rec.mode_trace.push_back(static_cast<std::uint8_t>(m));
    rec.length_m += (w.robot.base.translation() - prev_pos).norm();
    prev_pos = w.robot.base.translation();
    if (w.step_count % 100 == 1)
      for (const ObstacleState& o : w.obstacles) rec.obstacle_snaps.push_back(o.corners());
  };

  const int max_steps = w.cfg.max_steps;
  for (int step = 0; step < max_steps; ++step) {
    // ---- sensing / CA replanning -------------------------------------
    if (variant == MethodVariant::CA) {
      bool changed = false;
      for (std::size_t i = 0; i < w.obstacles.size(); ++i) {
        if (!sensed_mask[i] && box_point_distance(w.obstacles[i],
                                                  w.robot.base.translation()) <=
                                   w.cfg.sensing_range) {
          sensed_mask[i] = 1;
          changed = true;
        }
      }
      if (changed && !replan_overlay()) {
        rec.fail_reason = TerminationReason::NoFeasiblePath;
        rec.time_s = w.time;
        break;
      }
    }

    // ---- mode transitions --------------------------------------------
    if (mode == NavMode::TrackPath && variant != MethodVariant::CA) {
      const int target = find_push_target(w, path);
      if (target >= 0) {
        if (variant == MethodVariant::AA && aa_attempts[target] >= 2) {
          rec.fail_reason = TerminationReason::NoFeasiblePath;
          rec.time_s = w.time;
          break;
        }
        w.tracked = target;
        mode = NavMode::PushObstacle;
        ex_state = Estimator::State{};
        cmd = PushingCommand{};
        cmd_prev = PushingCommand{};
        w.prev_command = PushingCommand{};
        decision_tick = 0;
        if (variant == MethodVariant::AA) {
          // choose the freer lateral side; push along the path with a bias
          // toward it
          const ObstacleState& o = w.obstacles[target];
          const double s_o = path.closest_arc(o.pos);
          Vec2 tangent = path.at_arc(s_o + 0.2) - path.at_arc(std::max(0.0, s_o - 0.2));
          if (tangent.norm() < 1e-9) tangent = Vec2::UnitX();
          tangent.normalize();
          const Vec2 normal(-tangent.y(), tangent.x());
          const double free_l = detail::ray_free_distance(
              w.map, o.pos + detail::box_support(o, normal) * normal, normal);
          const double free_r = detail::ray_free_distance(
              w.map, o.pos - detail::box_support(o, normal) * normal, -normal);
          const double side = free_l >= free_r ? 1.0 : -1.0;
          const double bias =
              aa_attempts[target] == 0
                  ? std::min(std::max(free_l, free_r), 1.5) / 1.5
                  : 0.0;  // second attempt: straight along the path
          aa_dir = (tangent + bias * side * normal).normalized();
          aa_stand = o.pos - (detail::box_support(o, aa_dir) +
                              w.cfg.robot_radius + 0.25) * aa_dir;
          aa_phase = AaPhase::Approach;
          aa_pushed = 0.0;
          aa_attempts[target] += 1;
        }
      }
    } else if (mode == NavMode::PushObstacle) {
      bool done_push = push_cleared(w, path);
      if (variant == MethodVariant::AA && !done_push &&
          aa_phase == AaPhase::Push) {
        done_push = !obstructs_path(w, *w.tracked_obstacle(), path);
      }
      if (done_push) {
        mode = NavMode::Resume;
        w.tracked = -1;
        w.base_pushes = false;
      }
    }

    // ---- actuation ----------------------------------------------------
    if (mode == NavMode::Resume) {
      track_tick(w, path);
      record_tick(NavMode::Resume);
      mode = NavMode::TrackPath;
    } else if (mode == NavMode::TrackPath) {
      track_tick(w, path);
      record_tick(NavMode::TrackPath);
    } else if (variant == MethodVariant::AA) {
      // ---- axis-aligned baseline push --------------------------------
      const ObstacleState& o = *w.tracked_obstacle();
      if (aa_phase == AaPhase::Approach) {
        Path leg;
        leg.points = {w.robot.base.translation(), aa_stand};
        leg.rebuild_arc();
        const BaseCommand bc = pure_pursuit(leg, w.robot.base, 0.3);
        step_world(w, -4.0 * w.robot.q, bc.v, bc.omega, w.cfg.dt);
        if ((w.robot.base.translation() - aa_stand).norm() < 0.12)
          aa_phase = AaPhase::Align;
      } else if (aa_phase == AaPhase::Align) {
        const double want = std::atan2(aa_dir.y(), aa_dir.x());
        const double err = wrap_angle(want - w.robot.base.theta);
        step_world(w, -4.0 * w.robot.q, 0.0, std::clamp(2.0 * err, -1.0, 1.0),
                   w.cfg.dt);
        if (std::abs(err) < 0.05) {
          aa_phase = AaPhase::Push;
          w.base_pushes = true;
        }
      } else {
        // stop if the obstacle is about to hit a wall or the push stalls
        ObstacleState probe = o;
        probe.pos += 0.2 * aa_dir;
        const bool wall_imminent = box_wall_contact(w.map, probe);
        if (wall_imminent || aa_pushed > 3.0) {
          w.base_pushes = false;
          w.tracked = -1;
          track_tick(w, path);
          record_tick(NavMode::Resume);
          mode = NavMode::TrackPath;
        } else {
          const Vec2 before = o.pos;
          step_world(w, -4.0 * w.robot.q, 0.2, 0.0, w.cfg.dt);
          aa_pushed += (w.tracked_obstacle()->pos - before).norm();
        }
      }
      if (mode == NavMode::PushObstacle) {
        rec.push_ticks += 1;
        if (w.contacts.ee_obstacle.active) push_contact += 1;
        record_tick(NavMode::PushObstacle);
      }
    } else {
      // ---- learned interaction (Ours family) -------------------------
      const LowObs low_obs = compute_low_obs(w).vec;
      const VecX x_gt = compute_privileged(w).vec();
      VecX x = VecX::Zero(kPrivilegedDim);
      if (variant == MethodVariant::OursPlusG) {
        x = x_gt;
      } else if (variant == MethodVariant::Ours ||
                 variant == MethodVariant::OursMinusH) {
        x = estimate_to_x(bundle->ex->step(low_obs, ex_state));
      }  // OursMinusP: zeros

      Action a;
      if (variant == MethodVariant::OursMinusH) {
        const VecX code = bundle->el->forward(
            local_map_to_vec(crop_local_map(w.map, w.robot.base).cells));
        const HighObs hobs = compute_high_obs(w, path, code);
        a = squash_action(bundle->e2e->forward(e2e_policy_input(low_obs, hobs)).mean);
      } else {
        if (decision_tick % kHighDecisionPeriod == 0) {
          const VecX code = bundle->el->forward(
              local_map_to_vec(crop_local_map(w.map, w.robot.base).cells));
          const HighObs hobs = compute_high_obs(w, path, code);
          const VecX raw = bundle->high->forward(high_policy_input(hobs, low_obs, x)).mean;
          cmd_prev = cmd;
          cmd = squash_command(raw, w.cfg.v_cmd);
          w.prev_command = cmd;
        }
        decision_tick += 1;
        a = squash_action(bundle->low->forward(low_policy_input(low_obs, x, cmd)).mean);
      }
      const Action a_prev = w.robot.prev_action;
      apply_action(w, a);
      rec.push_ticks += 1;
      if (w.contacts.ee_obstacle.active) push_contact += 1;
      if (w.tracked_obstacle() != nullptr) {
        const LowRewardBreakdown lr = low_level_reward(w, cmd, a, a_prev);
        rec.low_reward_sum += lr.total();
        const HighRewardBreakdown hr = high_level_reward(w, cmd, cmd_prev, path, lr);
        rec.high_reward_sum += hr.total();
        const ObstacleState& o = *w.tracked_obstacle();
        rec.tracking_error_sum += std::abs(cmd.p - ee_lateral_fraction(w, o)) +
                                  std::abs(cmd.theta - contact_face_yaw(w, o)) +
                                  std::abs(cmd.v - w.robot.v_bx);
      }
      record_tick(NavMode::PushObstacle);
    }

    // ---- termination --------------------------------------------------
    const Termination term = check_termination(w, step + 1, w.cfg);
    if (term.status == Termination::Status::Success) {
      rec.success = true;
      rec.time_s = w.time;
      break;
    }
    if (term.status == Termination::Status::Fail) {
      rec.fail_reason = term.reason;
      rec.time_s = w.time;
      break;
    }
    rec.time_s = w.time;
  }
  if (!rec.success && rec.fail_reason == TerminationReason::None)
    rec.fail_reason = TerminationReason::Timeout;
  rec.contact_rate =
      rec.push_ticks > 0 ? static_cast<double>(push_contact) / rec.push_ticks : 0.0;
  return rec;
}

}  // namespace namo

#endif  // NAMOPUSH_CONTROLLER_HPP_
