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

#include <cesmpc/discretization.hpp>

#include "test_util.hpp"

namespace cesmpc {
namespace {

using testing::near;
using testing::vec2;

const ManipulatorParams kArm;

TEST(Discretize, TransitionMatrixAtTwoMilliseconds) {
  const DiscreteModel m = discretize(kArm, JointState{vec2(0.3, 1.2), vec2(0.1, -0.4)}, 0.002);
  Mat expected(4, 4);
  expected << 1, 0, 0.002, 0,
              0, 1, 0, 0.002,
              0, 0, 1, 0,
              0, 0, 0, 1;
  EXPECT_TRUE(near(m.A, expected, 0));
}

TEST(Discretize, BlockStructureFollowsInverseMass) {
  const JointState s{vec2(0.3, 1.2), vec2(0.1, -0.4)};
  const double T = 0.002;
  const DiscreteModel m = discretize(kArm, s, T);
  const Mat minv = mass_matrix(kArm, s.q).inverse();
  EXPECT_TRUE(near(m.B.topRows(2), 0.5 * T * T * minv, 1e-12));
  EXPECT_TRUE(near(m.B.bottomRows(2), T * minv, 1e-12));
  const Vec f = forward_dynamics(kArm, s, vec2(0, 0));
  EXPECT_TRUE(near(m.Gp.head(2), 0.5 * T * T * f, 1e-12));
  EXPECT_TRUE(near(m.Gp.tail(2), T * f, 1e-12));
}

TEST(Discretize, EquilibriumPredictionIsExact) {
  const JointState s{vec2(0.3, 1.2), vec2(0, 0)};
  const DiscreteModel m = discretize(kArm, s, 0.002);
  EXPECT_TRUE(near(m.step(s.stacked(), gravity_vector(kArm, s.q)), s.stacked(), 1e-15));
}

TEST(Discretize, TransitionInverse) {
  const Mat a = double_integrator_transition(2, 0.002);
  Mat inv = Mat::Identity(4, 4);
  inv.topRightCorner(2, 2) = -0.002 * Mat::Identity(2, 2);
  EXPECT_TRUE(near(a.inverse(), inv, 1e-15));
}

TEST(Discretize, RejectsBadPeriod) {
  EXPECT_THROW(discretize(kArm, JointState{vec2(0, 1), vec2(0, 0)}, 0.0), InvalidArgument);
}

TEST(Prediction, SingleStepStackIsTheModel) {
  const DiscreteModel m = discretize(kArm, JointState{vec2(0.3, 1.2), vec2(0.5, 0)}, 0.002);
  const PredictionModel p = build_prediction(m, 1);
  EXPECT_TRUE(near(p.S, m.A, 0));
  EXPECT_TRUE(near(p.Gmat, m.B, 0));
  EXPECT_TRUE(near(p.Cp, m.Gp, 0));
}

TEST(Prediction, TwoStepStack) {
  const DiscreteModel m = discretize(kArm, JointState{vec2(0.3, 1.2), vec2(0.5, 0)}, 0.002);
  const PredictionModel p = build_prediction(m, 2);
  EXPECT_TRUE(near(p.S.bottomRows(4), m.A * m.A, 1e-15));
  EXPECT_TRUE(near(p.Gmat.block(0, 0, 4, 2), m.B, 0));
  EXPECT_TRUE(near(p.Gmat.block(0, 2, 4, 2), Mat::Zero(4, 2), 0));
  EXPECT_TRUE(near(p.Gmat.block(4, 0, 4, 2), m.A * m.B, 1e-18));
  EXPECT_TRUE(near(p.Gmat.block(4, 2, 4, 2), m.B, 0));
  EXPECT_TRUE(near(p.Cp.tail(4), m.A * m.Gp + m.Gp, 1e-18));
}

TEST(Prediction, StackMatchesIteratedSteps) {
  testing::Rng rng;
  for (int trial = 0; trial < 50; ++trial) {
    const JointState s{rng.uniform_vec(2, -3, 3), rng.uniform_vec(2, -2, 2)};
    const int Z = 1 + trial % 10;
    const DiscreteModel m = discretize(kArm, s, 0.002);
    const PredictionModel p = build_prediction(m, Z);
    const Vec U = rng.uniform_vec(2 * Z, -10, 10);
    const Vec X = p.predict(s.stacked(), U);
    Vec x = s.stacked();
    for (int i = 0; i < Z; ++i) {
      x = m.step(x, U.segment(2 * i, 2));
      EXPECT_TRUE(near(X.segment(4 * i, 4), x, 1e-12));
    }
  }
}

TEST(OrderStudy, RatiosMatchTruncationOrder) {
  const OrderStudy s = run_order_study(kArm, order_study_state(), order_study_torque());
  EXPECT_TRUE(s.pass());
  for (int k = 0; k < 2; ++k) {
    EXPECT_NEAR(s.position_ratio[k], 8.0, 1.0);
    EXPECT_NEAR(s.velocity_ratio[k], 4.0, 0.5);
  }
  EXPECT_DOUBLE_EQ(s.periods[2], 0.0005);
}

}  // namespace
}  // namespace cesmpc
