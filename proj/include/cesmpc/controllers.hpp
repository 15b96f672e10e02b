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

// Torque controllers: computed torque (CTC), the one-step predictive law used
// as the MPC baseline, and the dual-mode contour-coupled predictive
// controller (CES-MPC).

#pragma once

#include <cesmpc/contour.hpp>
#include <cesmpc/horizon.hpp>

#include <limits>
#include <span>
#include <string_view>

namespace cesmpc {

enum class ControllerKind { kCtc, kMpc, kCesMpc };

inline std::string_view to_string(ControllerKind k) {
  switch (k) {
    case ControllerKind::kCtc: return "ctc";
    case ControllerKind::kMpc: return "mpc";
    case ControllerKind::kCesMpc: return "ces-mpc";
  }
  return "?";
}

enum class ControllerMode { kSingle, kHorizonQp, kLocalLaw };

inline std::string_view to_string(ControllerMode m) {
  switch (m) {
    case ControllerMode::kSingle: return "single";
    case ControllerMode::kHorizonQp: return "horizon-qp";
    case ControllerMode::kLocalLaw: return "local-law";
  }
  return "?";
}

struct CtcGains {
  Mat Kp = 300.0 * Mat::Identity(2, 2);
  Mat Kd = 20.0 * Mat::Identity(2, 2);

  friend bool operator==(const CtcGains& a, const CtcGains& b) {
    return a.Kp == b.Kp && a.Kd == b.Kd;
  }
};

struct ControllerOutput {
  JointTorque tau;              // saturated, applied
  JointTorque tau_unsaturated;  // as computed by the law
  ControllerMode mode = ControllerMode::kSingle;
  double cost = std::numeric_limits<double>::quiet_NaN();
  double delta_norm = std::numeric_limits<double>::quiet_NaN();  // d' P d
  bool qp_exact = true;
  bool terminal_feasible = true;
  bool regularized = false;
  Vec sequence;  // full optimized torque sequence when a QP was solved
};

inline JointTorque saturate(const JointTorque& tau, const TorqueLimits& limits) {
  require(tau.size() == limits.tau_max.size(),
          "saturate: torque and limits differ in length");
  return tau.cwiseMax(-limits.tau_max).cwiseMin(limits.tau_max);
}

/// tau = M (qdd_d + Kp e + Kd edot) + C qd + G with e = q_d - q. The
/// converging convention is used here; the tracking error elsewhere is
/// x - x_r.
inline ControllerOutput ctc_step(const ManipulatorParams& params,
                                 const JointState& state,
                                 const ReferencePoint& ref,
                                 const CtcGains& gains,
                                 const TorqueLimits& limits) {
  const Vec e = ref.q_r - state.q;
  const Vec edot = ref.qd_r - state.qd;
  const Vec acc = ref.qdd_r + gains.Kp * e + gains.Kd * edot;
  ControllerOutput out;
  out.tau_unsaturated = inverse_dynamics(params, state, acc);
  out.tau = saturate(out.tau_unsaturated, limits);
  return out;
}

/// One-step predictive law
///
///   tau = -M Pbar^-1 [Q1 e1 / T^2 + (Q1/2 + Q2) e2 / T + (Q1/4 + Q2)(f - qdd_r)]
///   Pbar = Q1/4 + Q2 + T^-4 M R M
///
/// with e = x - x_r and f = -M^-1 (C qd + G).
inline ControllerOutput mpc_baseline_step(const ManipulatorParams& params,
                                          const JointState& state,
                                          const ReferencePoint& ref,
                                          const MpcWeights& weights,
                                          const TorqueLimits& limits,
                                          double T) {
  require(T > 0, "mpc_baseline_step: T must be positive");
  const Mat m = mass_matrix(params, state.q);
  const Vec f = -solve_mass(
      m, coriolis_matrix(params, state.q, state.qd) * state.qd +
             gravity_vector(params, state.q));
  const Vec e1 = state.q - ref.q_r;
  const Vec e2 = state.qd - ref.qd_r;
  const Mat quarter = 0.25 * weights.Q1 + weights.Q2;
  const Mat pbar = quarter + m * weights.R * m / std::pow(T, 4);
  const Vec bracket = weights.Q1 * e1 / (T * T) +
                      (0.5 * weights.Q1 + weights.Q2) * e2 / T +
                      quarter * (f - ref.qdd_r);
  Eigen::FullPivLU<Mat> lu(pbar);
  if (!lu.isInvertible()) {
    throw SingularMatrixError("mpc_baseline_step: Pbar is singular");
  }
  ControllerOutput out;
  out.tau_unsaturated = -m * lu.solve(bracket);
  out.tau = saturate(out.tau_unsaturated, limits);
  return out;
}

/// Realizes the local law u_f = H d on the arm. u_f is an acceleration on top
/// of `feedforward_acc` (the reference acceleration), applied by inverse
/// dynamics: tau = M (feedforward_acc + H d) + C qd + G.
inline JointTorque local_law_to_torque(const ManipulatorParams& params,
                                       const JointState& state, const Mat& H,
                                       const Vec& delta,
                                       const Vec& feedforward_acc) {
  const Mat m = mass_matrix(params, state.q);
  inverse_mass(m);  // rejects a singular M
  return m * (feedforward_acc + H * delta) +
         coriolis_matrix(params, state.q, state.qd) * state.qd +
         gravity_vector(params, state.q);
}

struct CesMpcConfig {
  CouplingConfig coupling;
  MpcWeights weights;
  TorqueLimits limits;
  double T = 0.002;
  /// Leave local-law mode only once d' P d exceeds this. 1 disables the
  /// hysteresis.
  double exit_threshold = 1.2;
  HorizonOptions horizon;
};

/// Chooses the mode from d' P d. Enter the terminal set at <= 1; once inside,
/// stay until the value exceeds `exit_threshold`.
inline ControllerMode dual_mode_decision(double value, ControllerMode previous,
                                         double exit_threshold) {
  const double limit =
      previous == ControllerMode::kLocalLaw ? std::max(1.0, exit_threshold)
                                            : 1.0;
  return value <= limit ? ControllerMode::kLocalLaw
                        : ControllerMode::kHorizonQp;
}

/// Stacked corrected reference over the horizon. The correction
/// x_rc1 - x_r1 computed at the current sample is carried along the moving
/// reference; velocities are the reference velocities.
inline Vec stacked_corrected_reference(std::span<const ReferencePoint> refs,
                                       const CorrectedReference& xrc, int Z) {
  require(Index(refs.size()) >= Z + 1,
          "stacked_corrected_reference: need Z + 1 reference points");
  const Index n = xrc.pos.size();
  const Vec correction = xrc.pos - refs[0].q_r;
  Vec out(2 * n * Z);
  for (int i = 1; i <= Z; ++i) {
    out.segment(2 * n * (i - 1), n) = refs[i].q_r + correction;
    out.segment(2 * n * (i - 1) + n, n) = refs[i].qd_r;
  }
  return out;
}

struct CesMpcOutput : ControllerOutput {
  ContourState contour;
};

/// One CES-MPC sample. `refs` holds the reference at the current sample
/// followed by the next Z samples. Only the first torque block of the
/// optimized sequence is applied.
inline CesMpcOutput ces_mpc_step(const ManipulatorParams& params,
                                 const JointState& state,
                                 std::span<const ReferencePoint> refs,
                                 const CesMpcConfig& cfg,
                                 const TerminalIngredients& terminal,
                                 ControllerMode previous_mode,
                                 const std::optional<Vec>& warm_start = {}) {
  require(!refs.empty(), "ces_mpc_step: empty reference window");
  const ReferencePoint& ref = refs[0];
  CesMpcOutput out;
  out.contour = evaluate_contour(params, state, ref, cfg.coupling);
  const Vec delta = out.contour.coupling.stacked();
  out.delta_norm = delta.dot(terminal.P * delta);
  out.mode = dual_mode_decision(out.delta_norm, previous_mode,
                                cfg.exit_threshold);

  if (out.mode == ControllerMode::kLocalLaw) {
    out.tau_unsaturated =
        local_law_to_torque(params, state, terminal.H, delta, ref.qdd_r);
  } else {
    const int Z = cfg.weights.Z;
    const PredictionModel pred =
        build_prediction(discretize(params, state, cfg.T), Z);
    const Vec Xrc = stacked_corrected_reference(refs, out.contour.xrc, Z);
    const HorizonSolution sol = constrained_horizon_solution(
        pred, state.stacked(), Xrc, cfg.weights, cfg.limits, &terminal,
        warm_start, cfg.horizon);
    out.sequence = sol.U;
    out.cost = sol.cost;
    out.qp_exact = sol.exact;
    out.terminal_feasible = sol.terminal_feasible;
    out.regularized = sol.regularized;
    out.tau_unsaturated = sol.U.head(state.q.size());
  }
  out.tau = saturate(out.tau_unsaturated, cfg.limits);
  return out;
}

/// Shifts a torque sequence one block forward, repeating the last block.
inline Vec shift_sequence(const Vec& U, Index n) {
  if (U.size() < n) return U;
  Vec out(U.size());
  out.head(U.size() - n) = U.tail(U.size() - n);
  out.tail(n) = U.tail(n);
  return out;
}

/// Coarse per-joint acceleration budget of the local law: what is left of
/// each torque bound after the largest gravity load, spread over the largest
/// inertia row. Used to size the terminal ellipsoid.
inline Vec local_acceleration_bound(const ManipulatorParams& p,
                                    const TorqueLimits& limits) {
  const double m22 = p.l2 * p.l2 * p.m2;
  const double m12 = m22 + p.l1 * p.l2 * p.m2;
  const double m11 = m22 + 2.0 * p.l1 * p.l2 * p.m2 + p.l1 * p.l1 * p.m1;
  Vec gmax(2), row(2);
  gmax << p.g * (p.l2 * p.m2 + p.m1 * p.l1), p.g * p.l2 * p.m2;
  row << m11 + m12, m12 + m22;
  Vec bound = (limits.tau_max - gmax).cwiseQuotient(row);
  for (Index i = 0; i < bound.size(); ++i) {
    if (!(bound(i) > 0)) throw InvalidArgument(
        "torque limits cannot hold the arm against gravity");
  }
  return bound;
}

/// Terminal ingredients for the feedback-linearized double integrator at T.
inline TerminalIngredients ces_terminal_ingredients(
    const ManipulatorParams& params, const CesMpcConfig& cfg,
    bool size_for_limits = true) {
  const DiscreteModel lin = double_integrator_model(kJoints, cfg.T);
  TerminalOptions opt;
  if (size_for_limits) opt.input_bound = local_acceleration_bound(params, cfg.limits);
  return solve_terminal_lmi(lin.A, lin.B, cfg.weights.stage(), opt);
}

}  // namespace cesmpc
