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

#include "namo/kinematics.hpp"

#include <gtest/gtest.h>

#include "namo/rng.hpp"

namespace namo {
namespace {

// Independent FK oracle: plain 4x4 double-array matrix products, no Eigen
// transform machinery shared with the implementation.
struct Mat4 {
  double m[4][4];
  static Mat4 identity() {
    Mat4 r{};
    for (int i = 0; i < 4; ++i) r.m[i][i] = 1.0;
    return r;
  }
  Mat4 operator*(const Mat4& o) const {
    Mat4 r{};
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        for (int k = 0; k < 4; ++k) r.m[i][j] += m[i][k] * o.m[k][j];
    return r;
  }
};

Mat4 oracle_translate(double x, double y, double z) {
  Mat4 r = Mat4::identity();
  r.m[0][3] = x;
  r.m[1][3] = y;
  r.m[2][3] = z;
  return r;
}

// Rodrigues rotation about a unit axis.
Mat4 oracle_rotate(const Vec3& axis, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  const double x = axis.x(), y = axis.y(), z = axis.z();
  Mat4 r = Mat4::identity();
  r.m[0][0] = c + x * x * (1 - c);
  r.m[0][1] = x * y * (1 - c) - z * s;
  r.m[0][2] = x * z * (1 - c) + y * s;
  r.m[1][0] = y * x * (1 - c) + z * s;
  r.m[1][1] = c + y * y * (1 - c);
  r.m[1][2] = y * z * (1 - c) - x * s;
  r.m[2][0] = z * x * (1 - c) - y * s;
  r.m[2][1] = z * y * (1 - c) + x * s;
  r.m[2][2] = c + z * z * (1 - c);
  return r;
}

Mat4 oracle_fk(const KinematicChain& chain, const JointVec& q) {
  auto from_iso = [](const Transform& t) {
    Mat4 r = Mat4::identity();
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) r.m[i][j] = t.rotation()(i, j);
      r.m[i][3] = t.translation()[i];
    }
    return r;
  };
  Mat4 t = from_iso(chain.mount);
  for (int i = 0; i < kNumJoints; ++i) {
    t = t * from_iso(chain.joints[i].fixed);
    t = t * oracle_rotate(chain.joints[i].axis, q[i]);
  }
  return t * from_iso(chain.tool);
}

JointVec random_q(const KinematicChain& chain, Rng& rng) {
  JointVec q;
  for (int i = 0; i < kNumJoints; ++i)
    q[i] = rng.uniform(chain.joints[i].limit_lo, chain.joints[i].limit_hi);
  return q;
}

TEST(KinematicsTest, FkZeroConfigEqualsComposedFixedTransforms) {
  const KinematicChain chain = KinematicChain::default_chain();
  Transform t = chain.mount;
  for (const auto& j : chain.joints) t = t * j.fixed;
  t = t * chain.tool;
  Vec3 pos;
  Quat quat;
  forward_kinematics(chain, JointVec::Zero(), &pos, &quat);
  EXPECT_NEAR((pos - t.translation()).norm(), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(quat.coeffs().dot(Quat(t.rotation()).coeffs())), 1.0, 1e-12);
}

TEST(KinematicsTest, FkMatchesMatrixOracle) {
  const KinematicChain chain = KinematicChain::default_chain();
  Rng rng(11);
  for (int it = 0; it < 200; ++it) {
    const JointVec q = random_q(chain, rng);
    Vec3 pos;
    Quat quat;
    forward_kinematics(chain, q, &pos, &quat);
    const Mat4 t = oracle_fk(chain, q);
    EXPECT_NEAR(pos.x(), t.m[0][3], 1e-10);
    EXPECT_NEAR(pos.y(), t.m[1][3], 1e-10);
    EXPECT_NEAR(pos.z(), t.m[2][3], 1e-10);
    const Mat3 r = quat.toRotationMatrix();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) EXPECT_NEAR(r(i, j), t.m[i][j], 1e-10);
  }
}

TEST(KinematicsTest, FkQuaternionUnitNorm) {
  const KinematicChain chain = KinematicChain::default_chain();
  Rng rng(17);
  for (int it = 0; it < 100; ++it) {
    Vec3 pos;
    Quat quat;
    forward_kinematics(chain, random_q(chain, rng), &pos, &quat);
    EXPECT_NEAR(quat.norm(), 1.0, 1e-12);
  }
}

TEST(KinematicsTest, RootJointRotationMovesEeOnLeverArm) {
  // lock everything but the root z-joint; linear velocity is perpendicular to
  // the arm with magnitude equal to the horizontal reach
  const KinematicChain chain = KinematicChain::default_chain();
  const JointVec q = JointVec::Zero();
  const Jacobian j = jacobian(chain, q);
  Vec3 pos;
  Quat quat;
  forward_kinematics(chain, q, &pos, &quat);
  const Vec3 root = chain.mount.translation() +
                    chain.mount.rotation() * chain.joints[0].fixed.translation();
  const double reach = std::hypot(pos.x() - root.x(), pos.y() - root.y());
  const Vec3 v = j.block<3, 1>(0, 0);
  EXPECT_NEAR(v.norm(), reach, 1e-10);
  EXPECT_NEAR(v.dot(Vec3(pos.x() - root.x(), pos.y() - root.y(), 0.0)), 0.0, 1e-10);
}

TEST(KinematicsTest, JacobianMatchesFiniteDifferences) {
  const KinematicChain chain = KinematicChain::default_chain();
  Rng rng(23);
  const double h = 1e-6;
  for (int it = 0; it < 1000; ++it) {
    const JointVec q = random_q(chain, rng);
    const Jacobian j = jacobian(chain, q);
    for (int i = 0; i < kNumJoints; ++i) {
      JointVec qp = q, qm = q;
      qp[i] += h;
      qm[i] -= h;
      Vec3 pp, pm;
      Quat quat_p, quat_m;
      forward_kinematics(chain, qp, &pp, &quat_p);
      forward_kinematics(chain, qm, &pm, &quat_m);
      const Vec3 lin_fd = (pp - pm) / (2 * h);
      const Vec3 lin = j.block<3, 1>(0, i);
      EXPECT_LT((lin - lin_fd).norm() / std::max(1.0, lin.norm()), 1e-4);
      // angular column via the rotation difference
      const Mat3 dr = (quat_p.toRotationMatrix() - quat_m.toRotationMatrix()) / (2 * h);
      const Mat3 skew = dr * quat_p.toRotationMatrix().transpose();
      const Vec3 ang_fd(skew(2, 1), skew(0, 2), skew(1, 0));
      const Vec3 ang = j.block<3, 1>(3, i);
      EXPECT_LT((ang - ang_fd).norm() / std::max(1.0, ang.norm()), 1e-4);
    }
  }
}

TEST(KinematicsTest, DlsZeroTwistGivesZeroVelocity) {
  const KinematicChain chain = KinematicChain::default_chain();
  const Jacobian j = jacobian(chain, JointVec::Zero());
  EXPECT_EQ(dls_ik(j, Twist::Zero(), 0.02).norm(), 0.0);
}

TEST(KinematicsTest, DlsResidualObeysSpectralBound) {
  // exact DLS residual: || J qd - t || <= l^2 / (sigma_min^2 + l^2) * ||t||
  const KinematicChain chain = KinematicChain::default_chain();
  Rng rng(29);
  const double lambda = 0.02;
  int well_conditioned = 0;
  for (int it = 0; it < 500; ++it) {
    const JointVec q = random_q(chain, rng);
    const Jacobian j = jacobian(chain, q);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(j);
    const double s_min = svd.singularValues().minCoeff();
    Twist t;
    for (int i = 0; i < 6; ++i) t[i] = 0.1 * rng.normal();
    const JointVec qd = dls_ik(j, t, lambda);
    const double bound = lambda * lambda / (s_min * s_min + lambda * lambda);
    EXPECT_LE((j * qd - t).norm(), bound * t.norm() + 1e-9);
    if (s_min >= 0.1) {
      EXPECT_LT((j * qd - t).norm() / t.norm(), 0.05);
      ++well_conditioned;
    }
  }
  EXPECT_GT(well_conditioned, 100);
}

TEST(KinematicsTest, DlsMinimizesDampedLeastSquares) {
  // against a dense normal-equations oracle: (J^T J + l^2 I) qd = J^T v
  const KinematicChain chain = KinematicChain::default_chain();
  Rng rng(31);
  for (int it = 0; it < 200; ++it) {
    const JointVec q = random_q(chain, rng);
    const Jacobian j = jacobian(chain, q);
    Twist t;
    for (int i = 0; i < 6; ++i) t[i] = rng.normal();
    const double lambda = 0.02;
    const JointVec qd = dls_ik(j, t, lambda);
    Eigen::Matrix<double, 7, 7> a = j.transpose() * j;
    a.diagonal().array() += lambda * lambda;
    const JointVec oracle = a.fullPivLu().solve(j.transpose() * t);
    EXPECT_LT((qd - oracle).norm() / std::max(1e-12, oracle.norm()), 1e-8);
  }
}

TEST(KinematicsTest, DlsBoundedAtSingularity) {
  // fully stretched arm: wrist/elbow aligned, minimum singular value ~ 0
  const KinematicChain chain = KinematicChain::default_chain();
  const JointVec q = JointVec::Zero();
  const Jacobian j = jacobian(chain, q);
  Rng rng(37);
  for (int it = 0; it < 100; ++it) {
    Twist t;
    for (int i = 0; i < 6; ++i) t[i] = rng.normal();
    const JointVec qd = dls_ik(j, t, 0.02);
    EXPECT_TRUE(qd.allFinite());
    // ||qd|| <= ||t|| * max over sigma of sigma/(sigma^2+l^2) <= ||t||/(2 l)
    EXPECT_LE(qd.norm(), t.norm() / (2 * 0.02) + 1e-9);
  }
}

TEST(KinematicsTest, IntegrateBaseStraight) {
  Pose2 p{0, 0, 0.3};
  const Pose2 out = integrate_base(p, 0.4, 0.0, 1.0);
  EXPECT_NEAR(out.x, 0.4 * std::cos(0.3), 1e-12);
  EXPECT_NEAR(out.y, 0.4 * std::sin(0.3), 1e-12);
  EXPECT_DOUBLE_EQ(out.theta, 0.3);
}

TEST(KinematicsTest, IntegrateBaseSpinInPlace) {
  const Pose2 out = integrate_base({1, 2, 0}, 0.0, kPi, 1.0);
  EXPECT_NEAR(out.x, 1.0, 1e-12);
  EXPECT_NEAR(out.y, 2.0, 1e-12);
  EXPECT_NEAR(std::abs(out.theta), kPi, 1e-12);
}

TEST(KinematicsTest, IntegrateBaseClosesCircle) {
  // v = 0.4, omega = 0.4 -> circle of radius 1, period 2*pi/0.4
  Pose2 p{0.2, -0.7, 1.1};
  const double period = 2 * kPi / 0.4;
  const int n = 1000;
  Pose2 cur = p;
  for (int i = 0; i < n; ++i) cur = integrate_base(cur, 0.4, 0.4, period / n);
  EXPECT_NEAR(cur.x, p.x, 1e-9);
  EXPECT_NEAR(cur.y, p.y, 1e-9);
  EXPECT_NEAR(wrap_angle(cur.theta - p.theta), 0.0, 1e-9);
}

}  // namespace
}  // namespace namo
