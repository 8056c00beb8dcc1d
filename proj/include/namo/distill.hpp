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

#ifndef NAMOPUSH_DISTILL_HPP_
#define NAMOPUSH_DISTILL_HPP_

#include "namo/policy.hpp"
#include "namo/rewards.hpp"

namespace namo {

// One interaction episode for estimator training: the low-level observation
// stream, the per-step privileged target (contact flag varies, properties
// constant), aligned 1:1.
struct PushEpisode {
  std::vector<VecX> obs;     // low-level observations
  std::vector<VecX> target;  // privileged vectors (6)
};

// Scripted interaction: the base creeps forward while the arm regulates the
// ee toward a contact height and lateral offset on the obstacle face. Three
// segments per episode -- a low-contact slide (rotation exposes the lateral
// CoM), a high-contact press (tilt rate exposes friction and the tipping
// arm), and a short retreat (tilt decay isolates the arm-to-CoM-height
// ratio) -- so the hidden properties show up in the observation stream.
inline PushEpisode make_push_episode(Rng& rng, const PropertyRanges& ranges,
                                     int steps = 250) {
  World w;
  w.map = StaticMap(400, 400, 0.05);
  w.map.set_start(Vec2(5, 10));
  w.map.set_goal(Vec2(15, 10));
  w.robot.base = {5.0, 10.0, 0.0};
  w.refresh_fk();

  ObstacleState o = sample_obstacle(rng, ranges);
  const Vec3 ee_w = w.robot.ee_pos_world();
  // rotate the box so a chosen local face meets the pusher: random faces give
  // both lateral CoM components rotation exposure, minimal-tipping-arm faces
  // make the tilt segment fire (exposing friction and the CoM height)
  int face = static_cast<int>(rng.uniform_index(4));
  if (rng.uniform01() < 0.5) {
    for (int f = 0; f < 4; ++f)
      if (tipping_arm(o, f) < tipping_arm(o, face)) face = f;
  }
  const Vec2 e = face_outward_local(face);
  o.yaw = wrap_angle(kPi - std::atan2(e.y(), e.x())) + rng.uniform(-0.2, 0.2);
  const double half_x = 0.5 * (std::abs(o.size.x() * std::cos(o.yaw)) +
                               std::abs(o.size.y() * std::sin(o.yaw)));
  o.pos = {ee_w.x() + half_x + rng.uniform(0.02, 0.10), ee_w.y()};
  w.obstacles.push_back(o);
  w.tracked = 0;
  w.refresh_contacts();

  const double z_low = (0.20 + rng.uniform(0.0, 0.15)) * o.size.z();
  const double z_top = 0.95 * o.size.z();
  const double y_target = rng.uniform(-0.3, 0.3) * o.size.y();
  const double v_base = rng.uniform(0.05, 0.15);
  const int t_ramp = 2 * steps / 5;     // slide -> rising press
  const int t_retreat = 4 * steps / 5;  // press -> brief release
  const int t_resume = t_retreat + steps / 10;

  PushEpisode ep;
  ep.obs.reserve(steps);
  ep.target.reserve(steps);
  for (int t = 0; t < steps; ++t) {
    const Vec3 ee = w.robot.ee_pos;  // base frame
    const bool retreat = t >= t_retreat && t < t_resume;
    // ramp the contact height so the tilt-onset height is in the stream
    const double frac = std::clamp(
        static_cast<double>(t - t_ramp) / (t_retreat - t_ramp), 0.0, 1.0);
    const double z_target = z_low + frac * (z_top - z_low);
    Action a = Action::Zero();
    a[0] = retreat ? -0.2 : 0.05;               // press / release
    a[1] = std::clamp(2.0 * (y_target - ee.y()), -0.2, 0.2);
    a[2] = std::clamp(2.0 * (z_target - ee.z()), -0.2, 0.2);
    a[6] = retreat ? 0.0 : v_base;
    apply_action(w, a);
    ep.obs.push_back(compute_low_obs(w).vec);
    ep.target.push_back(compute_privileged(w).vec());
    if (w.obstacles[0].rolled_over) break;
  }
  return ep;
}

struct DistillStats {
  double bce = 0.0;      // contact-logit binary cross-entropy (mean/step)
  double mse = 0.0;      // property MSE, mean over the 5 dims and steps
  double total = 0.0;
  double contact_accuracy = 0.0;
  int steps = 0;
};

// Evaluation-only pass (no gradients).
inline DistillStats distill_eval(Estimator& ex, const std::vector<PushEpisode>& batch) {
  DistillStats st;
  int correct = 0;
  for (const PushEpisode& ep : batch) {
    Estimator::State state;
    for (std::size_t t = 0; t < ep.obs.size(); ++t) {
      const VecX out = ex.step(ep.obs[t], state);
      const double z = out[0], y = ep.target[t][0];
      st.bce += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
      double mse = 0.0;
      for (int k = 1; k < kPrivilegedDim; ++k) {
        const double d = out[k] - ep.target[t][k];
        mse += d * d;
      }
      st.mse += mse / (kPrivilegedDim - 1);
      correct += ((z > 0.0) == (y > 0.5)) ? 1 : 0;
      st.steps += 1;
    }
  }
  st.bce /= st.steps;
  st.mse /= st.steps;
  st.total = st.bce + st.mse;
  st.contact_accuracy = static_cast<double>(correct) / st.steps;
  return st;
}

// Per-step gradient weight: ramps up over the episode, since the property
// targets are unknowable before the interaction has produced evidence and
// early-step residuals would otherwise dominate the gradient with noise.
// Mean weight is 1, so the loss scale is unchanged.
inline double step_weight(int t, int n) {
  return n > 1 ? 0.4 + 1.2 * t / (n - 1.0) : 1.0;
}

// The scalar objective distill_update actually optimizes: the per-step
// L_adap terms weighted by step_weight and averaged over the batch. Kept as
// a plain function so gradient tests can difference it directly.
inline double distill_training_loss(Estimator& ex,
                                    const std::vector<PushEpisode>& batch) {
  long total_steps = 0;
  for (const PushEpisode& ep : batch) total_steps += ep.obs.size();
  if (total_steps == 0) return 0.0;
  double loss = 0.0;
  for (const PushEpisode& ep : batch) {
    Estimator::State state;
    const int n = static_cast<int>(ep.obs.size());
    for (int t = 0; t < n; ++t) {
      const VecX out = ex.step(ep.obs[t], state);
      const double z = out[0], y = ep.target[t][0];
      double term =
          std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
      for (int k = 1; k < kPrivilegedDim; ++k) {
        const double d = out[k] - ep.target[t][k];
        term += d * d / (kPrivilegedDim - 1);
      }
      loss += step_weight(t, n) * term;
    }
  }
  return loss / total_steps;
}

// One optimizer step of L_adap = BCE(contact) + mean-MSE(properties) over the
// batch, with truncated backprop through time (window `tbptt` steps). The
// gradient applies the step_weight ramp; the reported stats stay unweighted.
inline DistillStats distill_update(Estimator& ex, Adam& opt,
                                   const std::vector<PushEpisode>& batch,
                                   int tbptt = 50) {
  DistillStats st;
  int correct = 0;
  long total_steps = 0;
  for (const PushEpisode& ep : batch) total_steps += ep.obs.size();
  if (total_steps == 0) return st;
  const double inv = 1.0 / total_steps;

  ex.zero_grad();
  for (const PushEpisode& ep : batch) {
    const int n = static_cast<int>(ep.obs.size());
    // full forward, keeping recurrent caches
    std::vector<Estimator::StepCache> caches(n);
    Estimator::State state;
    std::vector<VecX> outs(n);
    for (int t = 0; t < n; ++t)
      outs[t] = ex.step(ep.obs[t], state, &caches[t]);

    // loss bookkeeping
    for (int t = 0; t < n; ++t) {
      const double z = outs[t][0], y = ep.target[t][0];
      st.bce += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
      double mse = 0.0;
      for (int k = 1; k < kPrivilegedDim; ++k) {
        const double d = outs[t][k] - ep.target[t][k];
        mse += d * d;
      }
      st.mse += mse / (kPrivilegedDim - 1);
      correct += ((z > 0.0) == (y > 0.5)) ? 1 : 0;
      st.steps += 1;
    }

    // TBPTT backward over segments [s, s+tbptt)
    for (int s = 0; s < n; s += tbptt) {
      const int e = std::min(n, s + tbptt);
      VecX dh_next = VecX::Zero(Estimator::kHidden);
      VecX dc_next = VecX::Zero(Estimator::kHidden);
      for (int t = e - 1; t >= s; --t) {
        // recompute the head forward at t so its caches are fresh
        const VecX out = ex.head().forward(Estimator::head_input(caches[t]));
        VecX dout(kPrivilegedDim);
        const double z = out[0], y = ep.target[t][0];
        const double wt = inv * step_weight(t, n);
        dout[0] = wt * (1.0 / (1.0 + std::exp(-z)) - y);
        for (int k = 1; k < kPrivilegedDim; ++k)
          dout[k] = wt * 2.0 * (out[k] - ep.target[t][k]) / (kPrivilegedDim - 1);
        // head input = [h, acc]; only the h slice carries recurrent gradient
        VecX dh = ex.head().backward(dout).head(Estimator::kHidden) + dh_next;
        VecX dx, dh_prev, dc_prev;
        ex.cell().backward(caches[t].cc, dh, dc_next, &dx, &dh_prev, &dc_prev);
        dh_next = dh_prev;
        dc_next = dc_prev;
      }
    }
  }

  std::vector<ParamRef> params;
  ex.collect(params);
  opt.step(params);

  st.bce /= st.steps;
  st.mse /= st.steps;
  st.total = st.bce + st.mse;
  st.contact_accuracy = static_cast<double>(correct) / st.steps;
  return st;
}

// Per-dimension variance of the property labels across a dataset: the
// constant-mean-predictor MSE baseline the estimator must beat.
inline double label_variance_baseline(const std::vector<PushEpisode>& data) {
  long n = 0;
  VecX s = VecX::Zero(kPrivilegedDim - 1), s2 = VecX::Zero(kPrivilegedDim - 1);
  for (const PushEpisode& ep : data) {
    for (const VecX& t : ep.target) {
      for (int k = 1; k < kPrivilegedDim; ++k) {
        s[k - 1] += t[k];
        s2[k - 1] += t[k] * t[k];
      }
      ++n;
    }
  }
  double var_mean = 0.0;
  for (int k = 0; k < kPrivilegedDim - 1; ++k) {
    const double mean = s[k] / n;
    var_mean += s2[k] / n - mean * mean;
  }
  return var_mean / (kPrivilegedDim - 1);
}

}  // namespace namo

#endif  // NAMOPUSH_DISTILL_HPP_
