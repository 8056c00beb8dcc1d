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

#ifndef NAMOPUSH_TRAIN_HPP_
#define NAMOPUSH_TRAIN_HPP_

#include <fstream>
#include <iostream>

#include "namo/envs.hpp"
#include "namo/ppo.hpp"

namespace namo {

// ---------------------------------------------------------------------------
// Low-level policy training: PPO over LowEnv with the adaptive command
// curriculum. Ground-truth privileged information throughout (LL+P) or zeroed
// (LL-P).
// ---------------------------------------------------------------------------
struct LowTrainConfig {
  std::uint64_t seed = 1;
  int n_envs = 16;
  int horizon = 256;
  int iters = 150;
  bool use_privileged = true;
  bool verbose = false;
  std::string log_path;  // training-curve CSV; empty = no log
  PpoConfig ppo;
};

struct LowTrainResult {
  std::unique_ptr<GaussianPolicy> policy;
  CommandGrid grid;
  std::vector<double> mean_returns;  // per iteration
};

inline LowTrainResult train_low(const LowTrainConfig& cfg) {
  Rng master(cfg.seed);
  LowTrainResult out;
  out.policy = std::make_unique<GaussianPolicy>(PolicyBundle::kLowPolicyIn,
                                                kActionDim, master, "low");
  GaussianPolicy& pi = *out.policy;
  Adam opt(cfg.ppo.lr, 0.9, 0.999, 1e-8, cfg.ppo.clip_norm);
  Rng update_rng = master.fork(9001);
  std::vector<LowEnv> envs;
  for (int e = 0; e < cfg.n_envs; ++e)
    envs.emplace_back(master.fork(e + 1), cfg.use_privileged);
  for (LowEnv& env : envs) env.reset(out.grid);

  std::ofstream log;
  if (!cfg.log_path.empty()) {
    log.open(cfg.log_path);
    log << "iter,mean_return,cmd0,cmd1,cmd2,p_extent,theta_extent\n";
  }
  const RewardWeights kw;

  for (int it = 0; it < cfg.iters; ++it) {
    RolloutBuffer buf(cfg.n_envs, cfg.horizon);
    double ret_sum = 0.0;
    double cmd_sum[3] = {0, 0, 0};
    for (int e = 0; e < cfg.n_envs; ++e) {
      LowEnv& env = envs[e];
      for (int t = 0; t < cfg.horizon; ++t) {
        const int i = buf.idx(e, t);
        buf.obs[i] = env.obs();
        const auto fw = pi.forward(buf.obs[i]);
        buf.val[i] = fw.value;
        buf.act[i] = pi.sample(fw.mean, env.rng());
        buf.logp[i] = pi.log_prob(fw.mean, buf.act[i]);
        const LowEnv::StepResult sr = env.step(buf.act[i]);
        buf.rew[i] = sr.reward;
        buf.done[i] = sr.done ? 1 : 0;
        ret_sum += sr.reward;
        for (int k = 0; k < 3; ++k) cmd_sum[k] += sr.breakdown.cmd[k] / kw.low[k];
        if (sr.done) env.reset(out.grid);
      }
      buf.bootstrap[e] = pi.forward(envs[e].obs()).value;
    }
    ppo_update(pi, opt, buf, cfg.ppo, update_rng);
    const double n = static_cast<double>(buf.size());
    out.grid.update(cmd_sum[0] / n, cmd_sum[1] / n, cmd_sum[2] / n);
    out.mean_returns.push_back(ret_sum / n * LowEnv::kEpisodeLen);
    if (log.is_open())
      log << it << ',' << ret_sum / n * LowEnv::kEpisodeLen << ','
          << cmd_sum[0] / n << ',' << cmd_sum[1] / n << ',' << cmd_sum[2] / n
          << ',' << out.grid.p_extent() << ',' << out.grid.theta_extent() << "\n";
    if (cfg.verbose && (it % 10 == 0 || it + 1 == cfg.iters))
      std::cout << "train-low iter " << it << " return/ep "
                << ret_sum / n * LowEnv::kEpisodeLen << " cmd means "
                << cmd_sum[0] / n << ' ' << cmd_sum[1] / n << ' '
                << cmd_sum[2] / n << " extent " << out.grid.p_extent() << '/'
                << out.grid.theta_extent() << std::endl;
  }
  return out;
}

// Deterministic low-level evaluation over fresh episodes with a fixed command
// grid; used for the LL+P vs LL-P trend comparison.
struct LowEvalStats {
  double mean_tracking_error = 0.0;  // per-step |dp|+|dtheta|+|dv|
  double contact_rate = 0.0;
  double mean_return = 0.0;  // per episode
};

inline LowEvalStats eval_low(GaussianPolicy& pi, bool use_privileged,
                             int episodes, std::uint64_t seed) {
  CommandGrid grid;
  grid.set_bins(4, 4);  // +-0.2 / +-0.4 evaluation commands
  Rng rng(seed);
  LowEvalStats st;
  long steps = 0, contact = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    LowEnv env(rng.fork(ep + 1), use_privileged);
    env.reset(grid);
    bool done = false;
    while (!done) {
      const auto fw = pi.forward(env.obs());
      const LowEnv::StepResult sr = env.step(fw.mean);
      st.mean_tracking_error += env.tracking_error();
      st.mean_return += sr.reward;
      contact += sr.contact ? 1 : 0;
      steps += 1;
      done = sr.done;
    }
  }
  st.mean_tracking_error /= steps;
  st.contact_rate = static_cast<double>(contact) / steps;
  st.mean_return /= episodes;
  return st;
}

// ---------------------------------------------------------------------------
// Estimator distillation on scripted pushes (offline phase).
// ---------------------------------------------------------------------------
struct EstimatorTrainConfig {
  std::uint64_t seed = 2;
  int train_episodes = 384;
  int batch_size = 8;
  int epochs = 6;
  double lr = 1e-3;
  double lr_decay = 1.0;  // per-epoch multiplicative decay
  bool verbose = false;
  std::string log_path;
};

inline void train_estimator(Estimator& ex, const EstimatorTrainConfig& cfg,
                            const PropertyRanges& ranges = {}) {
  Rng rng(cfg.seed);
  std::vector<PushEpisode> data;
  data.reserve(cfg.train_episodes);
  for (int i = 0; i < cfg.train_episodes; ++i)
    data.push_back(make_push_episode(rng, ranges));
  Adam opt(cfg.lr);
  std::ofstream log;
  if (!cfg.log_path.empty()) {
    log.open(cfg.log_path);
    log << "epoch,bce,mse,contact_accuracy\n";
  }
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    opt.set_lr(cfg.lr * std::pow(cfg.lr_decay, epoch));
    DistillStats agg;
    int batches = 0;
    for (std::size_t lo = 0; lo < data.size(); lo += cfg.batch_size) {
      const std::size_t hi = std::min(data.size(), lo + cfg.batch_size);
      std::vector<PushEpisode> batch(data.begin() + lo, data.begin() + hi);
      const DistillStats st = distill_update(ex, opt, batch);
      agg.bce += st.bce;
      agg.mse += st.mse;
      agg.contact_accuracy += st.contact_accuracy;
      batches += 1;
    }
    if (log.is_open())
      log << epoch << ',' << agg.bce / batches << ',' << agg.mse / batches
          << ',' << agg.contact_accuracy / batches << "\n";
    if (cfg.verbose)
      std::cout << "distill epoch " << epoch << " bce " << agg.bce / batches
                << " mse " << agg.mse / batches << " acc "
                << agg.contact_accuracy / batches << std::endl;
  }
}

inline std::vector<PushEpisode> make_holdout_pushes(int episodes,
                                                    std::uint64_t seed,
                                                    const PropertyRanges& ranges = {}) {
  Rng rng(seed);
  std::vector<PushEpisode> out;
  out.reserve(episodes);
  for (int i = 0; i < episodes; ++i) out.push_back(make_push_episode(rng, ranges));
  return out;
}

// ---------------------------------------------------------------------------
// High-level (or end-to-end ablation) training: PPO over HighEnv with the
// frozen low-level policy, the map encoder trained through the policy loss,
// e_x refined online from the interaction streams, and the x-blend alpha
// ramped linearly from 0 to 1.
// ---------------------------------------------------------------------------
struct HighTrainConfig {
  std::uint64_t seed = 3;
  int n_envs = 8;
  int horizon = 64;
  int iters = 120;
  bool use_privileged = true;
  bool e2e = false;  // train bundle.e2e instead of bundle.high
  double distill_lr = 5e-4;
  bool verbose = false;
  std::string log_path;
  PpoConfig ppo;
};

// ObsProvider rebuilding the map-code slice of each stored observation with
// the current encoder weights, so encoder gradients flow through PPO.
class MapCodeProvider : public ObsProvider {
 public:
  MapCodeProvider(MapEncoder* el, int offset, int n_samples)
      : el_(el), offset_(offset), maps_(n_samples) {}

  void store(int i, const LocalMap& lm) { maps_[i] = lm.cells; }

  VecX obs(const RolloutBuffer& buf, int i) override {
    VecX o = buf.obs[i];
    o.segment<kMapCodeDim>(offset_) = el_->forward(local_map_to_vec(maps_[i]));
    return o;
  }
  void backward_obs(const RolloutBuffer&, int, const VecX& dobs) override {
    el_->backward(dobs.segment<kMapCodeDim>(offset_));
  }
  void collect_extra(std::vector<ParamRef>& out) override { el_->collect(out); }

 private:
  MapEncoder* el_;
  int offset_;
  std::vector<std::array<std::uint8_t, kLocalMapSize * kLocalMapSize>> maps_;
};

struct HighTrainStats {
  std::vector<double> mean_step_rewards;
  std::vector<double> distill_totals;
};

inline HighTrainStats train_high(PolicyBundle& bundle, const HighTrainConfig& cfg) {
  if (!bundle.low || !bundle.el || !bundle.ex)
    throw std::invalid_argument("train_high: bundle needs low, el, ex");
  Rng master(cfg.seed);
  GaussianPolicy* pi;
  int obs_offset;
  if (cfg.e2e) {
    if (!bundle.e2e)
      bundle.e2e = std::make_unique<GaussianPolicy>(PolicyBundle::kE2eIn,
                                                    kActionDim, master, "e2e");
    pi = bundle.e2e.get();
    obs_offset = kLowObsDim;  // [o^l(32), o^h(25)]: code at 32
  } else {
    if (!bundle.high)
      bundle.high = std::make_unique<GaussianPolicy>(PolicyBundle::kHighPolicyIn,
                                                     kCommandDim, master, "high");
    pi = bundle.high.get();
    obs_offset = 0;  // [o^h(25), ...]: code first
  }
  Adam opt(cfg.ppo.lr, 0.9, 0.999, 1e-8, cfg.ppo.clip_norm);
  Adam distill_opt(cfg.distill_lr);
  Rng update_rng = master.fork(9001);
  std::vector<HighEnv> envs;
  for (int e = 0; e < cfg.n_envs; ++e)
    envs.emplace_back(master.fork(e + 1), &bundle, cfg.use_privileged, cfg.e2e);
  for (HighEnv& env : envs) env.reset();
  Rng action_rng = master.fork(9002);

  std::ofstream log;
  if (!cfg.log_path.empty()) {
    log.open(cfg.log_path);
    log << "iter,mean_step_reward,alpha,distill_total\n";
  }

  HighTrainStats stats;
  for (int it = 0; it < cfg.iters; ++it) {
    const double alpha =
        cfg.iters > 1 ? static_cast<double>(it) / (cfg.iters - 1) : 1.0;
    for (HighEnv& env : envs) env.set_alpha(cfg.use_privileged ? alpha : 0.0);

    RolloutBuffer buf(cfg.n_envs, cfg.horizon);
    MapCodeProvider provider(bundle.el.get(), obs_offset, buf.size());
    double ret_sum = 0.0;
    for (int e = 0; e < cfg.n_envs; ++e) {
      HighEnv& env = envs[e];
      for (int t = 0; t < cfg.horizon; ++t) {
        const int i = buf.idx(e, t);
        LocalMap lm;
        buf.obs[i] = env.obs(&lm);
        provider.store(i, lm);
        const auto fw = pi->forward(buf.obs[i]);
        buf.val[i] = fw.value;
        buf.act[i] = pi->sample(fw.mean, action_rng);
        buf.logp[i] = pi->log_prob(fw.mean, buf.act[i]);
        const HighEnv::StepResult sr = env.step(buf.act[i]);
        buf.rew[i] = sr.reward;
        buf.done[i] = sr.done ? 1 : 0;
        ret_sum += sr.reward;
        if (sr.done) env.reset();
      }
      buf.bootstrap[e] = pi->forward(envs[e].obs()).value;
    }
    ppo_update(*pi, opt, buf, cfg.ppo, update_rng, &provider);

    // online estimator refinement from the rollout interaction streams
    std::vector<PushEpisode> streams;
    for (HighEnv& env : envs)
      for (PushEpisode& ep : env.drain_streams()) streams.push_back(std::move(ep));
    double distill_total = 0.0;
    if (!streams.empty()) {
      const DistillStats st = distill_update(*bundle.ex, distill_opt, streams);
      distill_total = st.total;
    }
    stats.mean_step_rewards.push_back(ret_sum / buf.size());
    stats.distill_totals.push_back(distill_total);
    if (log.is_open())
      log << it << ',' << ret_sum / buf.size() << ',' << alpha << ','
          << distill_total << "\n";
    if (cfg.verbose && (it % 5 == 0 || it + 1 == cfg.iters))
      std::cout << (cfg.e2e ? "train-e2e" : "train-high") << " iter " << it
                << " step reward " << ret_sum / buf.size() << " alpha " << alpha
                << " distill " << distill_total << std::endl;
  }
  return stats;
}

}  // namespace namo

#endif  // NAMOPUSH_TRAIN_HPP_
