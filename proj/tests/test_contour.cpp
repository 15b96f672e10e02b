// Copyright 2026 The cesmpc Authors
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

#include <cesmpc/contour.hpp>
#include <cesmpc/trajectory.hpp>

#include "test_util.hpp"

#include <numbers>

namespace cesmpc {
namespace {

using testing::mat2;
using testing::near;
using testing::vec2;

const ManipulatorParams kArm;

TEST(ContourTransform, HandEvaluatedTangents) {
  EXPECT_TRUE(near(contour_transform(vec2(1, 0)).Tc, mat2(0, 0, 0, 1), 1e-15));
  EXPECT_TRUE(near(contour_transform(vec2(1, 1)).Tc, mat2(0.5, -0.5, -0.5, 0.5), 1e-15));
  EXPECT_TRUE(near(contour_transform(vec2(0, -3)).Tc, mat2(1, 0, 0, 0), 1e-15));
}

TEST(ContourTransform, ZeroTangent) {
  EXPECT_THROW(contour_transform(vec2(0, 0)), InvalidArgument);
  EXPECT_TRUE(near(contour_transform_or_identity(vec2(1e-10, 0)).Tc,
                   Mat::Identity(2, 2), 0));
}

TEST(ContourTransform, ProjectionLaws) {
  testing::Rng rng;
  for (int k = 0; k < 1000; ++k) {
    const Vec t = rng.uniform_vec(2, -1, 1);
    const Mat tc = contour_transform(t).Tc;
    EXPECT_TRUE(near(tc * tc, tc, 1e-12));
    EXPECT_TRUE(near(tc * t, vec2(0, 0), 1e-12));
    const Vec ev = Eigen::SelfAdjointEigenSolver<Mat>(tc).eigenvalues();
    EXPECT_NEAR(ev(0), 0.0, 1e-12);
    EXPECT_NEAR(ev(1), 1.0, 1e-12);
  }
}

TEST(ContourEstimate, HandEvaluatedErrors) {
  EXPECT_TRUE(near(estimate_contour_error(vec2(0.01, 0.02), contour_transform(vec2(1, 0))),
                   vec2(0, 0.02), 1e-15));
  EXPECT_TRUE(near(estimate_contour_error(vec2(0.3, 0.3), contour_transform(vec2(2, 2))),
                   vec2(0, 0), 1e-15));
  EXPECT_TRUE(near(estimate_contour_error(vec2(0.01, 0), contour_transform(vec2(1, 1))),
                   vec2(0.005, -0.005), 1e-15));
}

TEST(ContourEstimate, CloseToTrueDistanceNearCircle) {
  // tangent estimate vs the exact distance to the circle, displacements up
  // to 1% of the radius in the normal direction plus a small tangential part
  const double R = 0.05;
  testing::Rng rng;
  for (int k = 0; k < 200; ++k) {
    const double th = rng.uniform(0, 2 * std::numbers::pi);
    const Vec n = vec2(std::cos(th), std::sin(th));
    const Vec t = vec2(-std::sin(th), std::cos(th));
    const double dn = rng.uniform(0.002, 0.01) * R * (k % 2 ? 1 : -1);
    const double dt = rng.uniform(-0.1, 0.1) * std::abs(dn);
    const Vec e_o = dn * n + dt * t;
    const Vec p = R * n + e_o;
    const double truth = std::abs(p.norm() - R);
    const double est = estimate_contour_error(e_o, contour_transform(t)).norm();
    EXPECT_LE(std::abs(est - truth), 0.05 * truth);
  }
}

TEST(SyncError, ZeroAndNullSpace) {
  const CouplingConfig cfg;
  const Mat J = jacobian(kArm, vec2(0.3, 1.1));
  const ContourTransform tc = contour_transform(vec2(0.6, 0.8));
  EXPECT_TRUE(near(sync_error(J, tc, vec2(0, 0), cfg), vec2(0, 0), 0));
  testing::Rng rng;
  for (int k = 0; k < 100; ++k) {
    const Vec q = vec2(rng.uniform(-3, 3), rng.uniform(0.3, 2.8));
    const Mat Jq = jacobian(kArm, q);
    const Vec t = rng.uniform_vec(2, -1, 1);
    const Vec e1 = Jq.inverse() * (rng.uniform(-0.01, 0.01) * t);
    EXPECT_TRUE(near(sync_error(Jq, contour_transform(t), e1, cfg), vec2(0, 0), 1e-10));
  }
}

TEST(SyncError, HandOracleAtRightAngleElbow) {
  // J = [[-0.2, -0.2], [0.2, 0]], J e1 = (0, 0.002), Tc keeps y,
  // J^-1 (0, 0.002) = (0.01, -0.01)
  const Mat J = jacobian(kArm, vec2(0, std::numbers::pi / 2));
  const Vec eps = sync_error(J, contour_transform(vec2(1, 0)), vec2(0.01, -0.01), CouplingConfig{});
  EXPECT_TRUE(near(eps, vec2(0.01, -0.01), 1e-15));
  const Vec eps2 = sync_error(J, contour_transform(vec2(1, 0)), vec2(0.01, 0.0), CouplingConfig{});
  // J e1 = (-0.002, 0.002) -> Tc -> (0, 0.002) -> (0.01, -0.01)
  EXPECT_TRUE(near(eps2, vec2(0.01, -0.01), 1e-15));
}

TEST(SyncError, DampedInverseNearSingularity) {
  const CouplingConfig cfg;
  const Mat J = jacobian(kArm, vec2(0.2, 1e-6));
  ASSERT_LT(std::abs(J.determinant()), cfg.singularity_threshold);
  const Mat mu2 = 1e-6 * Mat::Identity(2, 2);
  const Mat expected = J.transpose() * (J * J.transpose() + mu2).inverse();
  EXPECT_TRUE(near(jacobian_inverse(J, cfg), expected, 1e-9 * expected.norm()));
  const Vec eps = sync_error(J, contour_transform(vec2(0, 1)), vec2(0.01, 0.02), cfg);
  EXPECT_TRUE(eps.allFinite());
}

TEST(CorrectedReference, Substitutions) {
  ReferencePoint ref;
  ref.q_r = vec2(1.0, 1.0);
  ref.qd_r = vec2(0.3, -0.2);
  const Vec x1 = vec2(1.2, 1.2), eps = vec2(0.1, 0.1);
  EXPECT_TRUE(near(corrected_reference(ref, x1, eps, 0.0).pos, ref.q_r, 0));
  EXPECT_TRUE(near(corrected_reference(ref, x1, eps, 1.0).pos, vec2(1.05, 1.05), 1e-15));
  EXPECT_TRUE(near(corrected_reference(ref, x1, eps, 1.0).vel, ref.qd_r, 0));
  EXPECT_TRUE(near(corrected_reference(ref, x1, eps, 1e6).pos, x1 - eps, 1e-5));
  EXPECT_THROW(corrected_reference(ref, x1, eps, -1.0), InvalidArgument);
}

TEST(CouplingError, Substitutions) {
  ReferencePoint ref;
  ref.q_r = vec2(1.0, 0.0);
  const JointState s{vec2(1.2, 0.0), vec2(0, 0)};
  const Vec eps = vec2(0.1, 0.0);
  const auto d1 = coupling_error(s, corrected_reference(ref, s.q, eps, 1.0), ref, eps, 1.0);
  EXPECT_NEAR(d1.delta_pos(0), 0.15, 1e-15);
  const auto d0 = coupling_error(s, corrected_reference(ref, s.q, eps, 0.0), ref, eps, 0.0);
  EXPECT_TRUE(near(d0.delta_pos, s.q - ref.q_r, 0));
  const JointState on{ref.q_r, ref.qd_r};
  const auto dz = coupling_error(on, corrected_reference(ref, on.q, vec2(0, 0), 1.0), ref,
                                 vec2(0, 0), 1.0);
  EXPECT_TRUE(near(dz.stacked(), Vec::Zero(4), 0));
}

TEST(CouplingError, ScaledIdentity) {
  testing::Rng rng;
  for (double lambda : {0.0, 0.5, 1.0, 10.0}) {
    for (int k = 0; k < 200; ++k) {
      ReferencePoint ref;
      ref.q_r = rng.uniform_vec(2, -2, 2);
      ref.qd_r = rng.uniform_vec(2, -2, 2);
      const JointState s{rng.uniform_vec(2, -2, 2), rng.uniform_vec(2, -2, 2)};
      const Vec eps = rng.uniform_vec(2, -0.5, 0.5);
      const auto d = coupling_error(s, corrected_reference(ref, s.q, eps, lambda), ref, eps, lambda);
      EXPECT_TRUE(near(d.delta_pos * (1 + lambda), d.tracking_pos + lambda * eps, 1e-12));
      EXPECT_TRUE(near(d.delta_vel, s.qd - ref.qd_r, 0));
    }
  }
}

TEST(EvaluateContour, OnReferenceIsZero) {
  TrajectorySpec spec;
  const ReferencePoint ref = generate_reference(spec, kArm, 0.7);
  const ContourState c = evaluate_contour(kArm, JointState{ref.q_r, ref.qd_r}, ref, CouplingConfig{});
  EXPECT_TRUE(near(c.coupling.stacked(), Vec::Zero(4), 1e-12));
  EXPECT_TRUE(near(c.contour_error, Vec::Zero(2), 1e-12));
}

}  // namespace
}  // namespace cesmpc
