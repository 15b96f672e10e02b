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

// Contour error and the joint-space coupling error built from it.
//
// The task-space contour error is estimated by dropping the component of the
// tracking error along the desired tangent t:
//
//   eps_o = Tc e_o,   Tc = I - t t'
//
// and pulled back into joint space as the synchronization error
//
//   eps = J^-1 Tc J e1.
//
// The coupling error blends tracking and synchronization error through the
// coefficient lambda. It is measured against the corrected reference
//
//   x_rc1 = (x_r1 + lambda (x1 - eps)) / (1 + lambda),   x_rc2 = x_r2
//
// so that (1 + lambda) (x1 - x_rc1) = e1 + lambda eps.

#pragma once

#include <cesmpc/dynamics.hpp>

namespace cesmpc {

struct ContourTransform {
  Mat Tc = Mat::Identity(2, 2);
};

/// Tangent magnitudes below this (m/s) are treated as a dwell.
inline constexpr double kZeroTangent = 1e-9;

inline ContourTransform contour_transform(const Vec& v_d) {
  require(v_d.size() == 2, "contour_transform: tangent must be planar");
  const double speed = v_d.norm();
  if (!(speed > 0) || !std::isfinite(speed)) {
    throw InvalidArgument("contour_transform: zero tangent");
  }
  const Vec t = v_d / speed;
  return {Mat::Identity(2, 2) - t * t.transpose()};
}

/// Same as contour_transform, except a dwell (|v_d| < kZeroTangent) yields
/// the identity: all tracking error counts as contour error.
inline ContourTransform contour_transform_or_identity(const Vec& v_d) {
  if (v_d.norm() < kZeroTangent) return {};
  return contour_transform(v_d);
}

inline Vec estimate_contour_error(const Vec& e_o, const ContourTransform& tc) {
  return tc.Tc * e_o;
}

struct CouplingConfig {
  double lambda = 1.0;
  double singularity_damping = 1e-3;
  double singularity_threshold = 1e-4;

  void validate() const {
    require(lambda >= 0, "coupling coefficient must be >= 0");
    require(singularity_damping >= 0, "singularity damping must be >= 0");
    require(singularity_threshold >= 0, "singularity threshold must be >= 0");
  }
  friend bool operator==(const CouplingConfig&,
                         const CouplingConfig&) = default;
};

/// Exact J^-1 when |det J| clears the threshold, otherwise the damped
/// least-squares inverse J' (J J' + mu^2 I)^-1.
inline Mat jacobian_inverse(const Mat& J, const CouplingConfig& cfg) {
  const double det = J.determinant();
  if (std::abs(det) >= cfg.singularity_threshold && det != 0.0) {
    return J.inverse();
  }
  const double mu2 = cfg.singularity_damping * cfg.singularity_damping;
  const Mat jjt = J * J.transpose() + mu2 * Mat::Identity(J.rows(), J.rows());
  return J.transpose() * jjt.ldlt().solve(Mat::Identity(J.rows(), J.rows()));
}

/// eps = J^-1 Tc J e1.
inline Vec sync_error(const Mat& J, const ContourTransform& tc, const Vec& e1,
                      const CouplingConfig& cfg) {
  return jacobian_inverse(J, cfg) * (tc.Tc * (J * e1));
}

/// Desired state at one instant, in joint and task space.
struct ReferencePoint {
  Vec q_r = Vec::Zero(2);
  Vec qd_r = Vec::Zero(2);
  Vec qdd_r = Vec::Zero(2);
  Vec p_d = Vec::Zero(2);
  Vec v_d = Vec::Zero(2);
  Vec a_d = Vec::Zero(2);

  Vec stacked() const {
    Vec x(q_r.size() + qd_r.size());
    x << q_r, qd_r;
    return x;
  }
};

struct CorrectedReference {
  Vec pos;  // x_rc1
  Vec vel;  // x_rc2

  Vec stacked() const {
    Vec x(pos.size() + vel.size());
    x << pos, vel;
    return x;
  }
};

inline CorrectedReference corrected_reference(const ReferencePoint& ref,
                                              const Vec& x1, const Vec& eps,
                                              double lambda) {
  require(lambda >= 0, "corrected_reference: lambda must be >= 0");
  const Vec x_c = x1 - eps;
  return {(ref.q_r + lambda * x_c) / (1.0 + lambda), ref.qd_r};
}

struct CouplingError {
  Vec delta_pos;
  Vec delta_vel;
  Vec sync;          // eps
  Vec tracking_pos;  // e1 = q - q_r
  Vec tracking_vel;  // e2 = qd - qd_r

  Vec stacked() const {
    Vec d(delta_pos.size() + delta_vel.size());
    d << delta_pos, delta_vel;
    return d;
  }
};

/// delta = x - x_rc. The lambda argument is only carried for the record;
/// the corrected reference already folds it in.
inline CouplingError coupling_error(const JointState& state,
                                    const CorrectedReference& xrc,
                                    const ReferencePoint& ref, const Vec& eps,
                                    double /*lambda*/) {
  return {state.q - xrc.pos, state.qd - xrc.vel, eps, state.q - ref.q_r,
          state.qd - ref.qd_r};
}

/// Everything the contour-coupled controller needs at one sample.
struct ContourState {
  ContourTransform tc;
  Vec task_error;      // e_o = p - p_d, from forward kinematics
  Vec contour_error;   // Tc e_o
  CorrectedReference xrc;
  CouplingError coupling;
};

/// Evaluates the chain tangent -> Tc -> eps -> x_rc -> delta at `state`.
/// J is taken at the measured joint angles, the tangent at the desired point.
inline ContourState evaluate_contour(const ManipulatorParams& params,
                                     const JointState& state,
                                     const ReferencePoint& ref,
                                     const CouplingConfig& cfg) {
  ContourState out;
  out.tc = contour_transform_or_identity(ref.v_d);
  out.task_error = forward_kinematics(params, state.q) - ref.p_d;
  out.contour_error = estimate_contour_error(out.task_error, out.tc);
  const Vec e1 = state.q - ref.q_r;
  const Vec eps = sync_error(jacobian(params, state.q), out.tc, e1, cfg);
  out.xrc = corrected_reference(ref, state.q, eps, cfg.lambda);
  out.coupling = coupling_error(state, out.xrc, ref, eps, cfg.lambda);
  return out;
}

}  // namespace cesmpc
