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

#ifndef NAMOPUSH_PPO_HPP_
#define NAMOPUSH_PPO_HPP_

#include <numeric>

#include "namo/policy.hpp"

namespace namo {

struct PpoConfig {
  double clip = 0.2;
  int epochs = 4;
  int minibatches = 8;
  double lr = 3e-4;
  double ent_coef = 0.005;
  double vf_coef = 0.5;
  double gamma = 0.99;
  double lam = 0.95;  // GAE
  double clip_norm = 1.0;
};

// Fixed-horizon rollout storage: n_envs trajectories of horizon steps each,
// flat index = env * horizon + t. `done[i]` marks a terminal transition (no
// bootstrapping across it).
struct RolloutBuffer {
  int n_envs = 0, horizon = 0;
  std::vector<VecX> obs;
  std::vector<VecX> act;  // raw (pre-squash) actions
  std::vector<double> logp, rew, val;
  std::vector<std::uint8_t> done;
  std::vector<double> bootstrap;  // value of the state after the last step, per env
  std::vector<double> adv, ret;

  RolloutBuffer(int envs, int steps) : n_envs(envs), horizon(steps) {
    const int n = envs * steps;
    obs.resize(n);
    act.resize(n);
    logp.assign(n, 0.0);
    rew.assign(n, 0.0);
    val.assign(n, 0.0);
    done.assign(n, 0);
    bootstrap.assign(envs, 0.0);
    adv.assign(n, 0.0);
    ret.assign(n, 0.0);
  }
  int size() const { return n_envs * horizon; }
  int idx(int env, int t) const { return env * horizon + t; }

  void compute_gae(double gamma, double lam) {
    for (int e = 0; e < n_envs; ++e) {
      double last_adv = 0.0;
      for (int t = horizon - 1; t >= 0; --t) {
        const int i = idx(e, t);
        const double next_val =
            done[i] ? 0.0 : (t == horizon - 1 ? bootstrap[e] : val[idx(e, t + 1)]);
        const double next_adv = done[i] ? 0.0 : last_adv;
        const double delta = rew[i] + gamma * next_val - val[i];
        last_adv = delta + gamma * lam * next_adv;
        adv[i] = last_adv;
        ret[i] = adv[i] + val[i];
      }
    }
  }

  // Batch advantage normalization (zero mean, unit variance).
  void normalize_advantages() {
    const int n = size();
    double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean);
    var /= n;
    const double sd = std::sqrt(var) + 1e-8;
    for (double& a : adv) a = (a - mean) / sd;
  }
};

// Optional hook for observations that are (partly) produced by a trainable
// encoder: `obs(i)` rebuilds sample i's observation (running the encoder
// forward), `backward_obs` routes the loss gradient into the encoder.
struct ObsProvider {
  virtual ~ObsProvider() = default;
  virtual VecX obs(const RolloutBuffer& buf, int i) { return buf.obs[i]; }
  virtual void backward_obs(const RolloutBuffer&, int, const VecX&) {}
  virtual void collect_extra(std::vector<ParamRef>&) {}
};

struct PpoStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double mean_ratio_first = 0.0;  // mean importance ratio, epoch 0 minibatch 0
};

// Clipped-surrogate PPO update over the full buffer. Deterministic given the
// Rng state. Throws on non-finite loss.
inline PpoStats ppo_update(GaussianPolicy& pi, Adam& opt, RolloutBuffer& buf,
                           const PpoConfig& cfg, Rng& rng,
                           ObsProvider* provider = nullptr) {
  ObsProvider default_provider;
  if (!provider) provider = &default_provider;
  buf.compute_gae(cfg.gamma, cfg.lam);
  buf.normalize_advantages();

  const int n = buf.size();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  const int mb_count = std::max(1, cfg.minibatches);
  PpoStats stats;
  int stat_samples = 0;
  bool first_mb = true;

  std::vector<ParamRef> params;
  auto refresh_params = [&] {
    params.clear();
    pi.collect(params);
    provider->collect_extra(params);
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with the trainer Rng: deterministic shuffling
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.uniform_index(i + 1));
      std::swap(order[i], order[j]);
    }
    for (int mb = 0; mb < mb_count; ++mb) {
      const int lo = mb * n / mb_count, hi = (mb + 1) * n / mb_count;
      const int bsz = hi - lo;
      if (bsz == 0) continue;
      refresh_params();
      for (auto& p : params) std::memset(p.g, 0, sizeof(double) * p.n);
      double ratio_sum = 0.0;
      for (int s = lo; s < hi; ++s) {
        const int i = order[s];
        const VecX o = provider->obs(buf, i);
        const GaussianPolicy::Output out = pi.forward(o);
        const double lp = pi.log_prob(out.mean, buf.act[i]);
        const double ratio = std::exp(lp - buf.logp[i]);
        const double a = buf.adv[i];
        const double r_clip = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip);
        const double surr1 = ratio * a, surr2 = r_clip * a;
        const double pol_loss = -std::min(surr1, surr2);
        const double verr = out.value - buf.ret[i];
        const double val_loss = 0.5 * verr * verr;
        const double ent = pi.entropy();
        if (!std::isfinite(pol_loss) || !std::isfinite(val_loss))
          throw std::runtime_error("ppo_update: non-finite loss");
        stats.policy_loss += pol_loss;
        stats.value_loss += val_loss;
        stats.entropy += ent;
        stats.approx_kl += buf.logp[i] - lp;
        ratio_sum += ratio;
        ++stat_samples;

        // gradient of (pol + vf*val - ent*entropy) / bsz
        const double inv = 1.0 / bsz;
        double dlp = 0.0;  // d pol_loss / d lp
        if (surr1 <= surr2) {
          dlp = -a * ratio;
        } else if ((a > 0.0 && ratio < 1.0 + cfg.clip) ||
                   (a < 0.0 && ratio > 1.0 - cfg.clip)) {
          dlp = -a * ratio;  // clip inactive at this ratio
        }
        VecX dmean(pi.act_dim()), dls(pi.act_dim());
        for (int k = 0; k < pi.act_dim(); ++k) {
          const double sd = std::exp(pi.log_std()[k]);
          const double z = (buf.act[i][k] - out.mean[k]) / sd;
          // d lp / d mean = z / sd ; d lp / d log_std = z^2 - 1
          dmean[k] = inv * dlp * (z / sd);
          dls[k] = inv * (dlp * (z * z - 1.0) - cfg.ent_coef);
        }
        const double dvalue = inv * cfg.vf_coef * verr;
        const VecX dobs = pi.backward(dmean, dvalue, dls);
        provider->backward_obs(buf, i, dobs);
      }
      if (first_mb) {
        stats.mean_ratio_first = ratio_sum / bsz;
        first_mb = false;
      }
      opt.step(params);
    }
  }
  stats.policy_loss /= stat_samples;
  stats.value_loss /= stat_samples;
  stats.entropy /= stat_samples;
  stats.approx_kl /= stat_samples;
  return stats;
}

// ---------------------------------------------------------------------------
// Built-in 1-D push-to-target toy MDP with a known optimal return, used as a
// self-contained correctness oracle for the whole PPO loop.
//   state x, action a = 0.2 tanh(raw), x' = x + a, r = 1 - min(1, |x'|),
//   horizon 20, x0 ~ U(-1, 1).
// ---------------------------------------------------------------------------

struct ToyEnv {
  static constexpr int kHorizon = 20;
  static constexpr double kStep = 0.2;
  double x = 0.0;
  int t = 0;
  Rng rng{0};

  explicit ToyEnv(Rng env_rng) : rng(env_rng) { reset(); }
  explicit ToyEnv(std::uint64_t seed) : rng(seed) { reset(); }
  VecX reset() {
    x = rng.uniform(-1.0, 1.0);
    t = 0;
    return obs();
  }
  VecX obs() const { return VecX::Constant(1, x); }
  // returns reward; sets *done at the horizon
  double step(double raw_action, bool* done) {
    x += kStep * std::tanh(raw_action);
    t += 1;
    *done = (t >= kHorizon);
    return 1.0 - std::min(1.0, std::abs(x));
  }
};

// Best achievable return from x0: close on the target at full step size.
inline double toy_optimal_return(double x0) {
  double r = 0.0, d = std::abs(x0);
  for (int t = 0; t < ToyEnv::kHorizon; ++t) {
    d = std::max(0.0, d - ToyEnv::kStep);
    r += 1.0 - std::min(1.0, d);
  }
  return r;
}

struct ToyTrainResult {
  double ratio_to_optimal = 0.0;  // deterministic-policy eval / optimal
  double first_ratio_check = 0.0;  // PPO importance ratio at epoch 0, iter 0
  int iterations = 0;
};

// Trains a fresh policy on the toy MDP; returns the fraction of the known
// optimal return achieved by the deterministic (mean) policy.
inline ToyTrainResult train_toy_mdp(std::uint64_t seed, int max_iters = 200,
                                    double target_ratio = 0.9) {
  Rng master(seed);
  GaussianPolicy pi(1, 1, master, "toy");
  Adam opt(3e-4);
  PpoConfig cfg;
  const int n_envs = 16, horizon = 128;
  std::vector<ToyEnv> envs;
  for (int e = 0; e < n_envs; ++e) envs.emplace_back(master.fork(e + 1));
  Rng update_rng = master.fork(999);

  auto eval_ratio = [&] {
    // deterministic policy on a fixed grid of starts
    double got = 0.0, best = 0.0;
    for (int k = 0; k < 41; ++k) {
      const double x0 = -1.0 + 2.0 * k / 40.0;
      ToyEnv env(1);
      env.x = x0;
      env.t = 0;
      double ep = 0.0;
      bool done = false;
      while (!done) {
        const auto out = pi.forward(env.obs());
        ep += env.step(out.mean[0], &done);
      }
      got += ep;
      best += toy_optimal_return(x0);
    }
    return got / best;
  };

  ToyTrainResult result;
  for (int it = 0; it < max_iters; ++it) {
    RolloutBuffer buf(n_envs, horizon);
    for (int e = 0; e < n_envs; ++e) {
      ToyEnv& env = envs[e];
      for (int t = 0; t < horizon; ++t) {
        const int i = buf.idx(e, t);
        buf.obs[i] = env.obs();
        const auto out = pi.forward(buf.obs[i]);
        buf.val[i] = out.value;
        buf.act[i] = pi.sample(out.mean, env.rng);
        buf.logp[i] = pi.log_prob(out.mean, buf.act[i]);
        bool done = false;
        buf.rew[i] = env.step(buf.act[i][0], &done);
        buf.done[i] = done ? 1 : 0;
        if (done) env.reset();
      }
      buf.bootstrap[e] = pi.forward(envs[e].obs()).value;
    }
    const PpoStats stats = ppo_update(pi, opt, buf, cfg, update_rng);
    if (it == 0) result.first_ratio_check = stats.mean_ratio_first;
    result.iterations = it + 1;
    if ((it + 1) % 10 == 0 || it + 1 == max_iters) {
      result.ratio_to_optimal = eval_ratio();
      if (result.ratio_to_optimal >= target_ratio) return result;
    }
  }
  result.ratio_to_optimal = eval_ratio();
  return result;
}

}  // namespace namo

#endif  // NAMOPUSH_PPO_HPP_
