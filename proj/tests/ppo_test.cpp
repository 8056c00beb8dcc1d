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

#include "namo/ppo.hpp"

#include <gtest/gtest.h>

namespace namo {
namespace {

TEST(GaeTest, MatchesHandComputedValues) {
  // single env, 3 steps, no terminal: hand-roll the recursion
  RolloutBuffer buf(1, 3);
  const double gamma = 0.99, lam = 0.95;
  buf.rew = {1.0, 0.5, -0.2};
  buf.val = {0.3, 0.4, 0.1};
  buf.bootstrap = {0.2};
  buf.compute_gae(gamma, lam);
  const double d2 = -0.2 + gamma * 0.2 - 0.1;
  const double d1 = 0.5 + gamma * 0.1 - 0.4;
  const double d0 = 1.0 + gamma * 0.4 - 0.3;
  const double a2 = d2;
  const double a1 = d1 + gamma * lam * a2;
  const double a0 = d0 + gamma * lam * a1;
  EXPECT_NEAR(buf.adv[0], a0, 1e-12);
  EXPECT_NEAR(buf.adv[1], a1, 1e-12);
  EXPECT_NEAR(buf.adv[2], a2, 1e-12);
  EXPECT_NEAR(buf.ret[1], a1 + 0.4, 1e-12);
}

TEST(GaeTest, TerminalCutsBootstrap) {
  RolloutBuffer buf(1, 2);
  buf.rew = {1.0, 1.0};
  buf.val = {0.5, 0.5};
  buf.done = {1, 0};  // terminal after step 0
  buf.bootstrap = {10.0};
  buf.compute_gae(0.99, 0.95);
  // step 0 is terminal: delta = r - v, no flow from step 1
  EXPECT_NEAR(buf.adv[0], 1.0 - 0.5, 1e-12);
  EXPECT_NEAR(buf.adv[1], 1.0 + 0.99 * 10.0 - 0.5, 1e-12);
}

TEST(GaeTest, AdvantageNormalization) {
  RolloutBuffer buf(1, 4);
  buf.adv = {1.0, 2.0, 3.0, 4.0};
  buf.normalize_advantages();
  double mean = 0.0, var = 0.0;
  for (double a : buf.adv) mean += a;
  mean /= 4;
  for (double a : buf.adv) var += (a - mean) * (a - mean);
  EXPECT_NEAR(mean, 0.0, 1e-12);
  EXPECT_NEAR(std::sqrt(var / 4), 1.0, 1e-6);
}

TEST(ClipFormulaTest, HandEvaluatedCases) {
  // the objective term PPO maximizes: min(r A, clip(r) A)
  auto objective = [](double ratio, double adv, double clip) {
    const double rc = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
    return std::min(ratio * adv, rc * adv);
  };
  EXPECT_DOUBLE_EQ(objective(1.5, 1.0, 0.2), 1.2);   // clipped from above
  EXPECT_DOUBLE_EQ(objective(0.5, -1.0, 0.2), -0.8); // clipped from below
  EXPECT_DOUBLE_EQ(objective(1.0, 0.7, 0.2), 0.7);   // ratio 1: unchanged
  EXPECT_DOUBLE_EQ(objective(1.1, 2.0, 0.2), 2.2);   // inside the band
}

TEST(PpoTest, RatioIsOneOnFirstMinibatch) {
  Rng rng(21);
  GaussianPolicy pi(3, 2, rng);
  RolloutBuffer buf(2, 16);
  Rng env_rng(22);
  for (int e = 0; e < 2; ++e) {
    for (int t = 0; t < 16; ++t) {
      const int i = buf.idx(e, t);
      buf.obs[i] = VecX::Random(3);
      const auto out = pi.forward(buf.obs[i]);
      buf.val[i] = out.value;
      buf.act[i] = pi.sample(out.mean, env_rng);
      buf.logp[i] = pi.log_prob(out.mean, buf.act[i]);
      buf.rew[i] = env_rng.uniform01();
    }
    buf.bootstrap[e] = 0.0;
  }
  Adam opt(3e-4);
  Rng upd(23);
  const PpoStats stats = ppo_update(pi, opt, buf, PpoConfig{}, upd);
  EXPECT_NEAR(stats.mean_ratio_first, 1.0, 1e-6);
  EXPECT_TRUE(std::isfinite(stats.policy_loss));
}

TEST(PpoTest, DeterministicGivenSeed) {
  auto run = [] {
    Rng rng(31);
    GaussianPolicy pi(3, 2, rng);
    RolloutBuffer buf(2, 16);
    Rng env_rng(32);
    for (int e = 0; e < 2; ++e) {
      for (int t = 0; t < 16; ++t) {
        const int i = buf.idx(e, t);
        buf.obs[i] = VecX::Zero(3);
        for (int k = 0; k < 3; ++k) buf.obs[i][k] = env_rng.normal();
        const auto out = pi.forward(buf.obs[i]);
        buf.val[i] = out.value;
        buf.act[i] = pi.sample(out.mean, env_rng);
        buf.logp[i] = pi.log_prob(out.mean, buf.act[i]);
        buf.rew[i] = env_rng.uniform01();
      }
    }
    Adam opt(3e-4);
    Rng upd(33);
    ppo_update(pi, opt, buf, PpoConfig{}, upd);
    return pi.forward(VecX::Constant(3, 0.5));
  };
  const auto a = run(), b = run();
  EXPECT_EQ(a.value, b.value);
  for (int i = 0; i < 2; ++i) EXPECT_EQ(a.mean[i], b.mean[i]);
}

TEST(ToyMdpTest, OptimalReturnClosedForm) {
  // from |x0| = 0.5: distances after each step 0.3, 0.1, 0, 0, ...
  const double expected = (1 - 0.3) + (1 - 0.1) + 18.0;
  EXPECT_NEAR(toy_optimal_return(0.5), expected, 1e-12);
  EXPECT_NEAR(toy_optimal_return(0.0), 20.0, 1e-12);
  EXPECT_NEAR(toy_optimal_return(-0.5), expected, 1e-12);
}

TEST(ToyMdpTest, PpoSolvesToyWithin200Iterations) {
  const ToyTrainResult r = train_toy_mdp(7, 200);
  EXPECT_NEAR(r.first_ratio_check, 1.0, 1e-6);
  EXPECT_GE(r.ratio_to_optimal, 0.9);
}

TEST(ToyMdpTest, TrainingIsDeterministic) {
  const ToyTrainResult a = train_toy_mdp(11, 12, 2.0);  // unreachable target
  const ToyTrainResult b = train_toy_mdp(11, 12, 2.0);
  EXPECT_EQ(a.ratio_to_optimal, b.ratio_to_optimal);
  EXPECT_EQ(a.iterations, b.iterations);
}

}  // namespace
}  // namespace namo
