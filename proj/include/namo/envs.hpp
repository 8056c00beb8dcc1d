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

#ifndef NAMOPUSH_ENVS_HPP_
#define NAMOPUSH_ENVS_HPP_

#include "namo/controller.hpp"
#include "namo/curriculum.hpp"
#include "namo/distill.hpp"

namespace namo {

// ---------------------------------------------------------------------------
// Low-level training environment: open arena, one obstacle spawned with a
// random face just ahead of the end-effector (pushing starts immediately; the
// approach phase is the trackers' job, not this policy's), one pushing
// command per episode sampled from the curriculum grid.
// Observation = [o^l(32), x(6), c(3)].
// ---------------------------------------------------------------------------
class LowEnv {
 public:
  static constexpr int kEpisodeLen = 128;

  LowEnv(Rng rng, bool use_privileged)
      : rng_(rng), use_privileged_(use_privileged) {}

  void reset(const CommandGrid& grid) {
    w_ = World{};
    w_.map = StaticMap(400, 400, 0.05);
    w_.map.set_start(Vec2(5, 10));
    w_.map.set_goal(Vec2(15, 10));
    w_.robot.base = {5.0, 10.0, 0.0};
    w_.refresh_fk();
    ObstacleState o = sample_obstacle(rng_, w_.cfg.ranges);
    const Vec3 ee_w = w_.robot.ee_pos_world();
    const int face = static_cast<int>(rng_.uniform_index(4));
    const Vec2 e = face_outward_local(face);
    o.yaw = wrap_angle(kPi - std::atan2(e.y(), e.x())) + rng_.uniform(-0.3, 0.3);
    const double half_x = 0.5 * (std::abs(o.size.x() * std::cos(o.yaw)) +
                                 std::abs(o.size.y() * std::sin(o.yaw)));
    o.pos = {ee_w.x() + half_x + rng_.uniform(0.0, 0.12),
             ee_w.y() + rng_.uniform(-0.15, 0.15)};
    w_.obstacles.push_back(o);
    w_.tracked = 0;
    w_.refresh_contacts();
    cmd_ = grid.sample(rng_, w_.cfg.v_cmd);
    t_ = 0;
  }

  VecX obs() const {
    const LowObs low = compute_low_obs(w_).vec;
    const VecX x = use_privileged_ ? compute_privileged(w_).vec()
                                   : VecX::Zero(kPrivilegedDim);
    return low_policy_input(low, x, cmd_);
  }

  struct StepResult {
    double reward = 0.0;
    bool done = false;
    LowRewardBreakdown breakdown;
    bool contact = false;
  };

  StepResult step(const VecX& raw_action) {
    const Action a = squash_action(raw_action);
    const Action a_prev = w_.robot.prev_action;
    apply_action(w_, a);
    StepResult out;
    out.breakdown = low_level_reward(w_, cmd_, a, a_prev);
    out.reward = out.breakdown.total();
    out.contact = w_.contacts.ee_obstacle.active;
    t_ += 1;
    out.done = t_ >= kEpisodeLen || w_.sim_fault || w_.obstacles[0].rolled_over;
    return out;
  }

  // Per-step absolute tracking error |dp| + |dtheta| + |dv| (eval metric).
  double tracking_error() const {
    const ObstacleState& o = w_.obstacles[0];
    return std::abs(cmd_.p - ee_lateral_fraction(w_, o)) +
           std::abs(cmd_.theta - contact_face_yaw(w_, o)) +
           std::abs(cmd_.v - w_.robot.v_bx);
  }

  const PushingCommand& command() const { return cmd_; }
  const World& world() const { return w_; }
  Rng& rng() { return rng_; }

 private:
  Rng rng_;
  bool use_privileged_ = true;
  World w_;
  PushingCommand cmd_;
  int t_ = 0;
};

// ---------------------------------------------------------------------------
// Procedural high-level training maps: randomized corridors with a bend or
// doorway rooms (never the fixed evaluation maps). Returns a world with the
// map, start/goal, and obstacles placed on the planned path.
// ---------------------------------------------------------------------------
inline World make_training_world(Rng& rng, int n_obstacles = 1) {
  for (int attempt = 0; attempt < 32; ++attempt) {
    World w;
    const double res = 0.05;
    const double len = rng.uniform(9.0, 12.0);
    // mix of narrow corridors (no lateral clearing possible) and open rooms
    const double wid = rng.uniform01() < 0.35 ? rng.uniform(1.8, 2.4)
                                              : rng.uniform(3.0, 4.5);
    const int nx = static_cast<int>(len / res), ny = static_cast<int>(wid / res);
    StaticMap m(nx, ny, res);
    for (int cx = 0; cx < nx; ++cx) {
      m.set_wall(cx, 0);
      m.set_wall(cx, ny - 1);
    }
    for (int cy = 0; cy < ny; ++cy) {
      m.set_wall(0, cy);
      m.set_wall(nx - 1, cy);
    }
    if (wid >= 3.0 && rng.uniform01() < 0.5) {
      // doorway: partial dividing wall with a random gap
      const int wall_x = static_cast<int>(nx * rng.uniform(0.4, 0.6));
      const double gap_w = rng.uniform(1.4, 2.2);
      const int gap_cells = static_cast<int>(gap_w / res);
      const int gap_lo = 1 + static_cast<int>(rng.uniform01() *
                                              std::max(1, ny - 2 - gap_cells));
      for (int cy = 1; cy < ny - 1; ++cy)
        if (cy < gap_lo || cy >= gap_lo + gap_cells) m.set_wall(wall_x, cy);
    }
    const double y0 = rng.uniform(0.9, std::max(0.9, wid - 0.9));
    const double y1 = rng.uniform(0.9, std::max(0.9, wid - 0.9));
    m.set_start(Vec2(0.8, y0));
    m.set_goal(Vec2(len - 0.8, y1));
    Path path;
    try {
      path = plan_astar(m, m.start(), m.goal(), 0.3);
    } catch (const PlanningFailure&) {
      continue;
    }
    if (path.length() < 4.0) continue;

    w.map = m;
    w.robot.base = {m.start().x(), m.start().y(), 0.0};
    const Vec2 ahead = path.at_arc(0.3) - m.start();
    if (ahead.norm() > 1e-9) w.robot.base.theta = std::atan2(ahead.y(), ahead.x());
    w.refresh_fk();

    // obstacles centered on the path, spaced along arc length
    bool ok = true;
    const double s_lo = 1.8, s_hi = path.length() - 1.2;
    std::vector<double> arcs;
    for (int i = 0; i < n_obstacles; ++i) {
      double s = 0.0;
      bool placed = false;
      for (int tries = 0; tries < 40 && !placed; ++tries) {
        s = rng.uniform(s_lo, s_hi);
        placed = true;
        for (double prev : arcs)
          if (std::abs(s - prev) < 1.5) placed = false;
      }
      if (!placed) {
        ok = false;
        break;
      }
      arcs.push_back(s);
      ObstacleState o = sample_obstacle(rng, w.cfg.ranges);
      o.pos = path.at_arc(s);
      o.yaw = wid < 2.6 ? rng.uniform(-0.2, 0.2) : rng.uniform(-kPi / 2, kPi / 2);
      ObstacleState probe = o;  // keep a small margin to the walls at spawn
      probe.size.x() += 0.2;
      probe.size.y() += 0.2;
      if (box_wall_contact(m, probe)) {
        ok = false;
        break;
      }
      w.obstacles.push_back(o);
    }
    if (!ok) continue;
    w.refresh_contacts();
    return w;
  }
  throw std::runtime_error("make_training_world: generation failed");
}

// ---------------------------------------------------------------------------
// High-level training environment. One env step = one pushing-command
// decision executed for kHighDecisionPeriod low-level ticks by the frozen low
// policy; TrackPath segments between interactions run the scripted tracker.
// Also streams (o^l, x) pairs for online estimator distillation.
// Observation = [o^h(25), o^l(32), x_comb(6)]; the first kMapCodeDim entries
// are the map-encoder output (recomputable for encoder training).
// ---------------------------------------------------------------------------
class HighEnv {
 public:
  HighEnv(Rng rng, PolicyBundle* bundle, bool use_privileged, bool e2e = false)
      : rng_(rng), bundle_(bundle), use_privileged_(use_privileged), e2e_(e2e) {}

  // alpha: weight of the estimated x in the blended privileged input.
  void set_alpha(double alpha) { alpha_ = std::clamp(alpha, 0.0, 1.0); }

  void reset() {
    for (int tries = 0; tries < 16; ++tries) {
      w_ = make_training_world(rng_, 1 + static_cast<int>(rng_.uniform_index(2)));
      w_.cfg.max_steps = 1500;
      path_ = plan_astar(w_.map, w_.map.start(), w_.map.goal(), w_.cfg.robot_radius);
      cmd_ = PushingCommand{};
      cmd_prev_ = PushingCommand{};
      w_.prev_command = PushingCommand{};
      ex_state_ = Estimator::State{};
      episode_stream_ = PushEpisode{};
      term_ = Termination::running();
      if (fast_forward()) return;  // reached a push interaction
    }
    throw std::runtime_error("HighEnv::reset: no interaction reachable");
  }

  bool done() const { return term_.status != Termination::Status::Running; }
  const Termination& termination() const { return term_; }

  // Current observation; also exposes the raw local map for encoder training.
  VecX obs(LocalMap* local_out = nullptr) {
    const LocalMap lm = crop_local_map(w_.map, w_.robot.base);
    if (local_out) *local_out = lm;
    const VecX code = bundle_->el->forward(local_map_to_vec(lm.cells));
    const HighObs hobs = compute_high_obs(w_, path_, code);
    const LowObs low = compute_low_obs(w_).vec;
    if (e2e_) return e2e_policy_input(low, hobs);
    return high_policy_input(hobs, low, blended_x(low));
  }

  struct StepResult {
    double reward = 0.0;
    bool done = false;
    HighRewardBreakdown breakdown;  // summed over the executed ticks
  };

  // Hierarchical mode: raw is the 3-dim command; e2e mode: raw is the 8-dim
  // action executed for one tick.
  StepResult step(const VecX& raw) {
    StepResult out;
    const int ticks = e2e_ ? 1 : kHighDecisionPeriod;
    if (!e2e_) {
      cmd_prev_ = cmd_;
      cmd_ = squash_command(raw, w_.cfg.v_cmd);
      w_.prev_command = cmd_;
    }
    for (int k = 0; k < ticks; ++k) {
      const LowObs low = compute_low_obs(w_).vec;
      Action a;
      if (e2e_) {
        a = squash_action(raw);
      } else {
        const VecX x = blended_x(low);
        a = squash_action(
            bundle_->low->forward(low_policy_input(low, x, cmd_)).mean);
      }
      const Action a_prev = w_.robot.prev_action;
      apply_action(w_, a);
      episode_stream_.obs.push_back(compute_low_obs(w_).vec);
      episode_stream_.target.push_back(compute_privileged(w_).vec());
      if (w_.tracked_obstacle() != nullptr) {
        const LowRewardBreakdown lr = low_level_reward(w_, cmd_, a, a_prev);
        const HighRewardBreakdown hr =
            high_level_reward(w_, cmd_, cmd_prev_, path_, lr);
        for (int i = 0; i < 3; ++i) out.breakdown.path[i] += hr.path[i];
        for (int i = 0; i < 2; ++i) out.breakdown.safe[i] += hr.safe[i];
        for (int i = 0; i < 2; ++i) out.breakdown.creg[i] += hr.creg[i];
        if (e2e_) {
          // no command interface: R^l minus its tracking terms, plus the
          // path/safety parts of R^h (creg would double-count / is undefined)
          out.reward += lr.stable_total() + lr.areg_total() +
                        hr.path_total() + hr.safe_total();
        } else {
          out.reward += hr.total();
        }
      }
      term_ = check_termination(w_, w_.step_count, w_.cfg);
      if (term_.status != Termination::Status::Running) break;
      if (push_cleared(w_, path_)) {
        // interaction finished: bank the stream, track to the next one
        finish_stream();
        w_.tracked = -1;
        if (!fast_forward()) break;
      }
    }
    out.done = done();
    if (out.done) finish_stream();
    return out;
  }

  // Distillation episodes collected since the last drain.
  std::vector<PushEpisode> drain_streams() {
    std::vector<PushEpisode> out;
    out.swap(banked_streams_);
    return out;
  }

  const World& world() const { return w_; }
  const Path& path() const { return path_; }

 private:
  VecX blended_x(const LowObs& low) {
    if (!use_privileged_) return VecX::Zero(kPrivilegedDim);
    const VecX x_gt = compute_privileged(w_).vec();
    if (alpha_ <= 0.0) return x_gt;
    const VecX x_hat = estimate_to_x(bundle_->ex->step(low, ex_state_));
    return blend_privileged(x_gt, x_hat, alpha_);
  }

  void finish_stream() {
    if (episode_stream_.obs.size() >= 10)
      banked_streams_.push_back(std::move(episode_stream_));
    episode_stream_ = PushEpisode{};
  }

  // Runs the scripted tracker until a push interaction starts or the episode
  // ends. Returns true if an interaction is active.
  bool fast_forward() {
    while (term_.status == Termination::Status::Running) {
      const int target = find_push_target(w_, path_);
      if (target >= 0) {
        w_.tracked = target;
        ex_state_ = Estimator::State{};
        cmd_ = PushingCommand{};
        cmd_prev_ = PushingCommand{};
        w_.prev_command = PushingCommand{};
        return true;
      }
      track_tick(w_, path_);
      term_ = check_termination(w_, w_.step_count, w_.cfg);
    }
    return false;
  }

  Rng rng_;
  PolicyBundle* bundle_ = nullptr;
  bool use_privileged_ = true;
  bool e2e_ = false;
  double alpha_ = 0.0;
  World w_;
  Path path_;
  PushingCommand cmd_, cmd_prev_;
  Estimator::State ex_state_;
  Termination term_ = Termination::running();
  PushEpisode episode_stream_;
  std::vector<PushEpisode> banked_streams_;
};

}  // namespace namo

#endif  // NAMOPUSH_ENVS_HPP_
