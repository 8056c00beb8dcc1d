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

#include "namo/nn.hpp"

#include <gtest/gtest.h>

#include <cstdio>

#include "namo/policy.hpp"

namespace namo {
namespace {

TEST(DenseTest, IdentityInitializedLayerIsIdentity) {
  Rng rng(1);
  Dense d(4, 4, rng);
  d.weight().setIdentity();
  d.bias().setZero();
  const VecX x = VecX::Random(4);
  EXPECT_NEAR((d.forward(x) - x).norm(), 0.0, 1e-15);
}

TEST(DenseTest, ShapeMismatchThrows) {
  Rng rng(1);
  Dense d(4, 3, rng);
  EXPECT_THROW(d.forward(VecX::Zero(5)), std::invalid_argument);
}

TEST(MlpTest, ZeroInputZeroBiasGivesZeroOutput) {
  Rng rng(2);
  Mlp m({6, 16, 16, 3}, rng);
  std::vector<ParamRef> ps;
  m.collect(ps);
  for (auto& p : ps)
    if (p.name.find(".b") != std::string::npos)
      std::memset(p.w, 0, sizeof(double) * p.n);
  EXPECT_NEAR(m.forward(VecX::Zero(6)).norm(), 0.0, 1e-15);
}

TEST(GradCheckTest, DenseLayer) {
  Rng rng(3);
  Dense d(5, 4, rng);
  const VecX x = VecX::Random(5), w = VecX::Random(4);
  auto loss = [&] { return w.dot(d.forward(x)); };
  auto back = [&] {
    d.forward(x);
    d.backward(w);
  };
  EXPECT_LT(gradient_check(d, loss, back), 1e-6);
}

TEST(GradCheckTest, TanhMlp) {
  Rng rng(4);
  Mlp m({7, 12, 9, 3}, rng);
  const VecX x = VecX::Random(7), w = VecX::Random(3);
  auto loss = [&] {
    const VecX y = m.forward(x);
    return w.dot(y) + 0.5 * y.squaredNorm();
  };
  auto back = [&] {
    const VecX y = m.forward(x);
    m.backward(w + y);
  };
  EXPECT_LT(gradient_check(m, loss, back), 1e-5);
}

TEST(GradCheckTest, LstmCellThreeSteps) {
  Rng rng(5);
  const int in = 6, hid = 8;
  LstmCell cell(in, hid, rng);
  std::vector<VecX> xs;
  for (int t = 0; t < 3; ++t) xs.push_back(VecX::Random(in));
  const VecX w = VecX::Random(hid);
  auto run = [&] {
    VecX h = VecX::Zero(hid), c = VecX::Zero(hid);
    std::vector<LstmCell::Cache> caches;
    for (const VecX& x : xs) {
      caches.push_back(cell.forward(x, h, c));
      h = caches.back().h;
      c = caches.back().c;
    }
    return std::make_pair(w.dot(h), caches);
  };
  auto loss = [&] { return run().first; };
  auto back = [&] {
    auto [l, caches] = run();
    (void)l;
    VecX dh = w, dc = VecX::Zero(hid);
    for (int t = 2; t >= 0; --t) {
      VecX dx, dh_prev, dc_prev;
      cell.backward(caches[t], dh, dc, &dx, &dh_prev, &dc_prev);
      dh = dh_prev;
      dc = dc_prev;
    }
  };
  EXPECT_LT(gradient_check(cell, loss, back), 1e-5);
}

TEST(GradCheckTest, Conv2dLayer) {
  Rng rng(6);
  Conv2d conv(2, 3, 8, 8, rng);
  const VecX x = VecX::Random(conv.in_size());
  const VecX w = VecX::Random(conv.out_size());
  auto loss = [&] { return w.dot(conv.forward(x)); };
  auto back = [&] {
    conv.forward(x);
    conv.backward(w);
  };
  EXPECT_LT(gradient_check(conv, loss, back), 1e-6);
}

TEST(GradCheckTest, Conv2dInputGradient) {
  Rng rng(7);
  Conv2d conv(1, 2, 6, 6, rng);
  VecX x = VecX::Random(conv.in_size());
  const VecX w = VecX::Random(conv.out_size());
  conv.forward(x);
  const VecX dx = conv.backward(w);
  const double h = 1e-6;
  for (int i = 0; i < conv.in_size(); i += 5) {
    VecX xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const double fd = (w.dot(conv.forward(xp)) - w.dot(conv.forward(xm))) / (2 * h);
    EXPECT_NEAR(dx[i], fd, 1e-6);
  }
}

TEST(GradCheckTest, GaussianPolicyLoss) {
  Rng rng(8);
  GaussianPolicy pi(5, 3, rng);
  const VecX obs = VecX::Random(5), act = VecX::Random(3);
  const double adv = 0.7, ret = 0.3;
  auto loss = [&] {
    const auto out = pi.forward(obs);
    const double lp = pi.log_prob(out.mean, act);
    return -adv * lp + 0.5 * (out.value - ret) * (out.value - ret) -
           0.01 * pi.entropy();
  };
  auto back = [&] {
    const auto out = pi.forward(obs);
    VecX dmean(3), dls(3);
    for (int k = 0; k < 3; ++k) {
      const double s = std::exp(pi.log_std()[k]);
      const double z = (act[k] - out.mean[k]) / s;
      dmean[k] = -adv * (z / s);
      dls[k] = -adv * (z * z - 1.0) - 0.01;
    }
    pi.backward(dmean, out.value - ret, dls);
  };
  EXPECT_LT(gradient_check(pi, loss, back), 1e-5);
}

TEST(GradCheckTest, MapEncoder) {
  Rng rng(9);
  MapEncoder el(rng);
  VecX x = VecX::Zero(kLocalMapSize * kLocalMapSize);
  Rng content(10);
  for (int i = 0; i < x.size(); ++i) x[i] = content.uniform01() < 0.2 ? 1.0 : 0.0;
  const VecX w = VecX::Random(kMapCodeDim);
  auto loss = [&] { return w.dot(el.forward(x)); };
  auto back = [&] {
    el.forward(x);
    el.backward(w);
  };
  EXPECT_LT(gradient_check(el, loss, back, 1e-6, 6), 1e-5);
}

TEST(AdamTest, ConvergesOnQuadratic) {
  // minimize (w - 3)^2 on a single scalar parameter
  struct Scalar : ParamOwner {
    double w = 0.0, g = 0.0;
    void collect(std::vector<ParamRef>& out) override {
      out.push_back({"s", &w, &g, 1});
    }
  } s;
  Adam opt(0.05, 0.9, 0.999, 1e-8, 0.0);
  for (int it = 0; it < 2000; ++it) {
    s.g = 2.0 * (s.w - 3.0);
    std::vector<ParamRef> ps;
    s.collect(ps);
    opt.step(ps);
  }
  EXPECT_NEAR(s.w, 3.0, 1e-3);
}

TEST(AdamTest, GradNormClipLimitsStep) {
  struct Scalar : ParamOwner {
    double w = 0.0, g = 0.0;
    void collect(std::vector<ParamRef>& out) override {
      out.push_back({"s", &w, &g, 1});
    }
  } a, b;
  Adam oa(0.01, 0.9, 0.999, 1e-8, 1.0), ob(0.01, 0.9, 0.999, 1e-8, 1.0);
  std::vector<ParamRef> pa, pb;
  a.collect(pa);
  b.collect(pb);
  a.g = 1000.0;  // clipped to 1.0
  b.g = 1.0;
  oa.step(pa);
  ob.step(pb);
  EXPECT_NEAR(a.w, b.w, 1e-12);
}

TEST(PolicyTest, SampledActionsSquashWithinBounds) {
  Rng rng(11);
  GaussianPolicy pi(kLowObsDim + kPrivilegedDim + kCommandDim, kActionDim, rng);
  for (int it = 0; it < 200; ++it) {
    const VecX obs = VecX::Random(pi.obs_dim()) * 5.0;
    const VecX raw = pi.sample(pi.forward(obs).mean, rng);
    const Action a = squash_action(raw);
    for (int i = 0; i < 6; ++i) EXPECT_LE(std::abs(a[i]), 0.5);
    EXPECT_LE(std::abs(a[6]), 0.4);
    EXPECT_LE(std::abs(a[7]), 1.0);
    const PushingCommand c = squash_command(raw.head(3), Range{0.1, 0.4});
    EXPECT_GE(c.p, -0.5);
    EXPECT_LE(c.p, 0.5);
    EXPECT_LE(std::abs(c.theta), kPi / 2);
    EXPECT_GE(c.v, 0.1);
    EXPECT_LE(c.v, 0.4);
  }
}

TEST(PolicyTest, BlendPrivileged) {
  const VecX x = VecX::Constant(6, 0.2), xh = VecX::Constant(6, 0.4);
  EXPECT_NEAR(blend_privileged(x, xh, 0.0)[0], 0.2, 1e-15);
  EXPECT_NEAR(blend_privileged(x, xh, 1.0)[0], 0.4, 1e-15);
  EXPECT_NEAR(blend_privileged(x, xh, 0.5)[0], 0.3, 1e-15);
  EXPECT_NEAR(blend_privileged(x, xh, 2.0)[0], 0.4, 1e-15);  // clamped
}

TEST(BundleTest, SaveLoadRoundTripIdenticalOutputs) {
  Rng rng(12);
  PolicyBundle b;
  b.low = std::make_unique<GaussianPolicy>(PolicyBundle::kLowPolicyIn, kActionDim, rng);
  b.ex = std::make_unique<Estimator>(rng);
  const std::string path = testing::TempDir() + "bundle_rt.namo";
  b.save(path);

  Rng rng2(999);  // different init: loaded weights must overwrite it
  PolicyBundle b2;
  b2.low = std::make_unique<GaussianPolicy>(PolicyBundle::kLowPolicyIn, kActionDim, rng2);
  b2.ex = std::make_unique<Estimator>(rng2);
  b2.load(path);

  Rng probe(13);
  for (int it = 0; it < 100; ++it) {
    VecX obs(PolicyBundle::kLowPolicyIn);
    for (int i = 0; i < obs.size(); ++i) obs[i] = probe.normal();
    const auto o1 = b.low->forward(obs);
    const auto o2 = b2.low->forward(obs);
    EXPECT_EQ(o1.value, o2.value);
    for (int i = 0; i < kActionDim; ++i) EXPECT_EQ(o1.mean[i], o2.mean[i]);
  }
}

TEST(BundleTest, TruncatedFileRejected) {
  Rng rng(14);
  PolicyBundle b;
  b.low = std::make_unique<GaussianPolicy>(8, 2, rng);
  const std::string path = testing::TempDir() + "bundle_trunc.namo";
  b.save(path);
  // truncate
  {
    std::ifstream in(path, std::ios::binary);
    std::string data((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    std::ofstream out(path, std::ios::binary);
    out.write(data.data(), data.size() / 2);
  }
  PolicyBundle b2;
  Rng rng2(15);
  b2.low = std::make_unique<GaussianPolicy>(8, 2, rng2);
  EXPECT_THROW(b2.load(path), std::runtime_error);
}

TEST(BundleTest, BadMagicAndDimMismatchRejected) {
  const std::string path = testing::TempDir() + "bundle_magic.namo";
  {
    std::ofstream f(path, std::ios::binary);
    f.write("BOGUS", 5);
  }
  PolicyBundle b;
  Rng rng(16);
  b.low = std::make_unique<GaussianPolicy>(8, 2, rng);
  EXPECT_THROW(b.load(path), std::runtime_error);

  // dim mismatch: saved 8-in policy, loading into a 9-in policy
  const std::string path2 = testing::TempDir() + "bundle_dim.namo";
  b.save(path2);
  PolicyBundle b3;
  Rng rng3(17);
  b3.low = std::make_unique<GaussianPolicy>(9, 2, rng3);
  EXPECT_THROW(b3.load(path2), std::runtime_error);
}

}  // namespace
}  // namespace namo
