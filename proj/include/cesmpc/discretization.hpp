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

// Second-order Taylor discretization of the arm and the stacked horizon
// prediction built from it.
//
//   x(h+1) = A x(h) + B tau(h) + Gp
//   X      = S x + G U + Cp,   X = [x(h+1); ...; x(h+Z)],  U = [tau(h); ...]
//
// A, B and Gp are frozen at the measurement instant for the whole horizon.

#pragma once

#include <cesmpc/dynamics.hpp>

#include <array>
#include <vector>

namespace cesmpc {

struct DiscreteModel {
  Mat A;   // 2n x 2n
  Mat B;   // 2n x n
  Vec Gp;  // 2n
  double T = 0.0;

  Index state_dim() const { return A.rows(); }
  Index input_dim() const { return B.cols(); }

  Vec step(const Vec& x, const Vec& u) const { return A * x + B * u + Gp; }
};

/// A = [[I, T I], [0, I]].
inline Mat double_integrator_transition(Index n, double T) {
  Mat a = Mat::Identity(2 * n, 2 * n);
  a.topRightCorner(n, n) = T * Mat::Identity(n, n);
  return a;
}

/// [[T^2/2 X], [T X]] for an n x m block X (or n-vector).
inline Mat taylor_input_blocks(const Mat& x, double T) {
  Mat out(2 * x.rows(), x.cols());
  out.topRows(x.rows()) = 0.5 * T * T * x;
  out.bottomRows(x.rows()) = T * x;
  return out;
}

/// Model at `state`: P(x1) = M^-1, f = -M^-1 (C qd + G).
inline DiscreteModel discretize(const ManipulatorParams& params,
                                const JointState& state, double T) {
  require(T > 0, "discretize: T must be positive");
  const Mat m = mass_matrix(params, state.q);
  const Mat pinv = inverse_mass(m);
  const Vec f = -solve_mass(m, coriolis_matrix(params, state.q, state.qd) *
                                       state.qd +
                                   gravity_vector(params, state.q));
  const Index n = state.q.size();
  return {double_integrator_transition(n, T), taylor_input_blocks(pinv, T),
          taylor_input_blocks(f, T).col(0), T};
}

/// The feedback-linearized model: acceleration input, no drift.
inline DiscreteModel double_integrator_model(Index n, double T) {
  require(T > 0, "double_integrator_model: T must be positive");
  return {double_integrator_transition(n, T),
          taylor_input_blocks(Mat::Identity(n, n), T), Vec::Zero(2 * n), T};
}

struct PredictionModel {
  Mat S;     // (2n Z) x 2n, block row i = A^(i+1)
  Mat Gmat;  // (2n Z) x (n Z), block (i, j) = A^(i-j) B for i >= j
  Vec Cp;    // (2n Z), block i = sum_{k<=i} A^k Gp
  int Z = 0;

  Index state_dim() const { return S.cols(); }
  Index input_dim() const { return Gmat.cols() / Z; }

  Vec predict(const Vec& x, const Vec& U) const { return S * x + Gmat * U + Cp; }
};

inline PredictionModel build_prediction(const DiscreteModel& model, int Z) {
  require(Z >= 1, "build_prediction: horizon must be >= 1");
  const Index nx = model.state_dim();
  const Index nu = model.input_dim();
  PredictionModel pred;
  pred.Z = Z;
  pred.S = Mat::Zero(nx * Z, nx);
  pred.Gmat = Mat::Zero(nx * Z, nu * Z);
  pred.Cp = Vec::Zero(nx * Z);

  // powers[k] = A^k B
  std::vector<Mat> powers_b;
  powers_b.reserve(Z);
  Mat a_pow = Mat::Identity(nx, nx);  // A^i
  Vec drift = Vec::Zero(nx);
  for (int i = 0; i < Z; ++i) {
    powers_b.push_back(a_pow * model.B);
    drift += a_pow * model.Gp;
    a_pow = model.A * a_pow;
    pred.S.middleRows(i * nx, nx) = a_pow;
    pred.Cp.segment(i * nx, nx) = drift;
  }
  for (int i = 0; i < Z; ++i) {
    for (int j = 0; j <= i; ++j) {
      pred.Gmat.block(i * nx, j * nu, nx, nu) = powers_b[i - j];
    }
  }
  return pred;
}

/// Local truncation study of the Taylor step against a fine RK4 reference.
struct OrderStudy {
  std::array<double, 3> periods{};
  std::array<double, 3> position_error{};
  std::array<double, 3> velocity_error{};
  std::array<double, 2> position_ratio{};
  std::array<double, 2> velocity_ratio{};

  static constexpr double kPositionLow = 6.0, kPositionHigh = 10.0;
  static constexpr double kVelocityLow = 3.0, kVelocityHigh = 5.0;

  bool pass() const {
    for (int k = 0; k < 2; ++k) {
      if (!(position_ratio[k] >= kPositionLow &&
            position_ratio[k] <= kPositionHigh))
        return false;
      if (!(velocity_ratio[k] >= kVelocityLow &&
            velocity_ratio[k] <= kVelocityHigh))
        return false;
    }
    return true;
  }
};

/// Halves T twice starting at `T0`. Position error should shrink ~8x per
/// halving (O(T^3)), velocity ~4x (O(T^2)).
inline OrderStudy run_order_study(const ManipulatorParams& params,
                                  const JointState& state,
                                  const JointTorque& tau, double T0 = 2e-3,
                                  int reference_substeps = 100) {
  OrderStudy study;
  const Index n = state.q.size();
  for (int k = 0; k < 3; ++k) {
    const double T = T0 / double(1 << k);
    const Vec taylor = discretize(params, state, T).step(state.stacked(), tau);
    const Vec exact =
        integrate_plant(params, state, tau, T, reference_substeps).stacked();
    study.periods[k] = T;
    study.position_error[k] = (taylor.head(n) - exact.head(n)).norm();
    study.velocity_error[k] = (taylor.tail(n) - exact.tail(n)).norm();
  }
  for (int k = 0; k < 2; ++k) {
    study.position_ratio[k] =
        study.position_error[k] / study.position_error[k + 1];
    study.velocity_ratio[k] =
        study.velocity_error[k] / study.velocity_error[k + 1];
  }
  return study;
}

/// Default operating point for the order study: moving, off-equilibrium,
/// so the acceleration changes along the step.
inline JointState order_study_state() {
  Vec q(2), qd(2);
  q << 0.3, 0.8;
  qd << 0.5, -0.4;
  return {q, qd};
}

inline JointTorque order_study_torque() {
  Vec tau(2);
  tau << 1.0, 0.2;
  return tau;
}

}  // namespace cesmpc
