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

#ifndef NAMOPUSH_SELFCHECK_HPP_
#define NAMOPUSH_SELFCHECK_HPP_

#include "namo/policy.hpp"

namespace namo {

// Every checkpoint carries all five networks (low, high, e2e, ex, el) so the
// binary layout is independent of which stage produced it; untrained parts
// keep their seed-deterministic initialization.
inline PolicyBundle make_full_bundle(std::uint64_t seed) {
  Rng rng(seed);
  PolicyBundle b;
  Rng r1 = rng.fork(1), r2 = rng.fork(2), r3 = rng.fork(3), r4 = rng.fork(4),
      r5 = rng.fork(5);
  b.low = std::make_unique<GaussianPolicy>(PolicyBundle::kLowPolicyIn,
                                           kActionDim, r1, "low");
  b.high = std::make_unique<GaussianPolicy>(PolicyBundle::kHighPolicyIn,
                                            kCommandDim, r2, "high");
  b.e2e = std::make_unique<GaussianPolicy>(PolicyBundle::kE2eIn, kActionDim, r3,
                                           "e2e");
  b.ex = std::make_unique<Estimator>(r4);
  b.el = std::make_unique<MapEncoder>(r5);
  return b;
}

inline PolicyBundle load_bundle(const std::string& path) {
  PolicyBundle b = make_full_bundle(0);
  b.load(path);
  return b;
}

// Finite-difference gradient checks for the three network families. Each
// returns the worst relative error over a parameter subsample.

inline double gradcheck_policy() {
  Rng rng(7);
  GaussianPolicy pi(10, 4, rng, "pi");
  VecX obs(10), u(4), wls(4);
  for (int i = 0; i < 10; ++i) obs[i] = 0.5 * rng.normal();
  for (int i = 0; i < 4; ++i) u[i] = rng.normal(), wls[i] = rng.normal();
  const auto loss = [&] {
    const auto fw = pi.forward(obs);
    return u.dot(fw.mean) + fw.value + wls.dot(pi.log_std());
  };
  const auto backward = [&] {
    pi.forward(obs);
    pi.backward(u, 1.0, wls);
  };
  return gradient_check(pi, loss, backward);
}

inline double gradcheck_estimator() {
  Rng rng(8);
  Estimator ex(rng);
  constexpr int kSteps = 3;
  std::vector<VecX> xs(kSteps, VecX(kLowObsDim));
  for (VecX& x : xs)
    for (int i = 0; i < kLowObsDim; ++i) x[i] = 0.5 * rng.normal();
  VecX u(kPrivilegedDim);
  for (int i = 0; i < kPrivilegedDim; ++i) u[i] = rng.normal();
  const auto loss = [&] {
    Estimator::State st;
    double total = 0.0;
    for (const VecX& x : xs) total += u.dot(ex.step(x, st));
    return total;
  };
  const auto backward = [&] {
    Estimator::State st;
    std::vector<Estimator::StepCache> cc(kSteps);
    for (int t = 0; t < kSteps; ++t) ex.step(xs[t], st, &cc[t]);
    VecX dh = VecX::Zero(Estimator::kHidden);
    VecX dc = VecX::Zero(Estimator::kHidden);
    for (int t = kSteps - 1; t >= 0; --t) {
      ex.head().forward(Estimator::head_input(cc[t]));  // restore layer caches
      const VecX dh_t = ex.head().backward(u).head(Estimator::kHidden) + dh;
      VecX dx, dh_prev, dc_prev;
      ex.cell().backward(cc[t].cc, dh_t, dc, &dx, &dh_prev, &dc_prev);
      dh = dh_prev;
      dc = dc_prev;
    }
  };
  return gradient_check(ex, loss, backward, 1e-5);
}

inline double gradcheck_encoder() {
  Rng rng(9);
  MapEncoder el(rng);
  VecX cells(kLocalMapSize * kLocalMapSize);
  for (int i = 0; i < cells.size(); ++i) cells[i] = rng.uniform(0.0, 1.0) < 0.2;
  VecX u(kMapCodeDim);
  for (int i = 0; i < kMapCodeDim; ++i) u[i] = rng.normal();
  const auto loss = [&] { return u.dot(el.forward(cells)); };
  const auto backward = [&] {
    el.forward(cells);
    el.backward(u);
  };
  return gradient_check(el, loss, backward, 1e-5, 12);
}

}  // namespace namo

#endif  // NAMOPUSH_SELFCHECK_HPP_
