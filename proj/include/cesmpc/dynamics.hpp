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

// Rigid-body model of the two-link planar arm.
//
//   tau = M(q) qdd + C(q, qd) qd + G(q)
//
// M, C and G are the closed forms of the reference testbed, taken as given:
// C is consistent with M (Mdot - 2C is skew), G acts in the plane of motion
// and is not the gradient of a point-mass potential. Interfaces take
// dynamically sized vectors so they compose with the horizon machinery, but
// only n = 2 is accepted.

#pragma once

#include <cesmpc/core.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cesmpc {

inline constexpr Index kJoints = 2;

struct ManipulatorParams {
  double m1 = 1.0;   // kg
  double m2 = 0.25;  // kg
  double l1 = 0.2;   // m
  double l2 = 0.2;   // m
  double g = 9.8;    // m/s^2

  /// Masses and lengths must be strictly positive. Gravity may be zero so
  /// the arm can be run as a conservative system.
  void validate() const {
    if (!(m1 > 0 && m2 > 0 && l1 > 0 && l2 > 0) || !(g >= 0) ||
        !std::isfinite(m1 + m2 + l1 + l2 + g)) {
      throw InvalidArgument("manipulator parameters must be positive");
    }
  }

  double reach() const { return l1 + l2; }
  double inner_radius() const { return std::abs(l1 - l2); }

  friend bool operator==(const ManipulatorParams&,
                         const ManipulatorParams&) = default;
};

/// x = [q, qd].
struct JointState {
  Vec q;
  Vec qd;

  JointState() : q(Vec::Zero(kJoints)), qd(Vec::Zero(kJoints)) {}
  JointState(Vec q_, Vec qd_) : q(std::move(q_)), qd(std::move(qd_)) {
    require(q.size() == qd.size(), "q and qd must have equal length");
  }

  Vec stacked() const {
    Vec x(q.size() + qd.size());
    x << q, qd;
    return x;
  }
  static JointState from_stacked(const Vec& x) {
    const Index n = x.size() / 2;
    return {x.head(n), x.tail(n)};
  }
  bool finite() const { return q.allFinite() && qd.allFinite(); }

  friend bool operator==(const JointState& a, const JointState& b) {
    return a.q == b.q && a.qd == b.qd;
  }
};

using JointTorque = Vec;

/// End-effector position and velocity in the plane.
struct TaskPoint {
  Vec p = Vec::Zero(2);
  Vec v = Vec::Zero(2);
};

namespace detail {
inline void check_joints(const Vec& v, const char* what) {
  if (v.size() != kJoints) throw InvalidArgument(what);
}
}  // namespace detail

inline Mat mass_matrix(const ManipulatorParams& p, const Vec& q) {
  detail::check_joints(q, "mass_matrix: q must have 2 entries");
  const double c2 = std::cos(q(1));
  const double m22 = p.l2 * p.l2 * p.m2;
  const double m12 = m22 + p.l1 * p.l2 * p.m2 * c2;
  const double m11 = m22 + 2.0 * p.l1 * p.l2 * p.m2 * c2 + p.l1 * p.l1 * p.m1;
  Mat m(2, 2);
  m << m11, m12,
       m12, m22;
  return m;
}

inline Mat coriolis_matrix(const ManipulatorParams& p, const Vec& q,
                           const Vec& qd) {
  detail::check_joints(q, "coriolis_matrix: q must have 2 entries");
  detail::check_joints(qd, "coriolis_matrix: qd must have 2 entries");
  const double h = p.l1 * p.l2 * p.m2 * std::sin(q(1));
  Mat c(2, 2);
  c << -h * qd(1), -h * (qd(0) + qd(1)),
        h * qd(0), 0.0;
  return c;
}

inline Vec gravity_vector(const ManipulatorParams& p, const Vec& q) {
  detail::check_joints(q, "gravity_vector: q must have 2 entries");
  const double c1 = std::cos(q(0));
  const double c12 = std::cos(q(0) + q(1));
  Vec g(2);
  g << p.l2 * p.m2 * p.g * c12 + p.m1 * p.l1 * p.g * c1,
       p.l2 * p.m2 * p.g * c12;
  return g;
}

/// Solves M x = rhs for the 2x2 inertia matrix, rejecting singular M.
inline Vec solve_mass(const Mat& m, const Vec& rhs) {
  const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  const double scale = m.cwiseAbs().maxCoeff();
  if (!(std::abs(det) > 1e-14 * scale * scale)) {
    throw SingularMatrixError("inertia matrix is singular");
  }
  Vec x(2);
  x(0) = (m(1, 1) * rhs(0) - m(0, 1) * rhs(1)) / det;
  x(1) = (m(0, 0) * rhs(1) - m(1, 0) * rhs(0)) / det;
  return x;
}

inline Mat inverse_mass(const Mat& m) {
  Mat inv(2, 2);
  inv.col(0) = solve_mass(m, Vec::Unit(2, 0));
  inv.col(1) = solve_mass(m, Vec::Unit(2, 1));
  return inv;
}

/// qdd = M^-1 (tau - C qd - G).
inline Vec forward_dynamics(const ManipulatorParams& p, const JointState& s,
                            const JointTorque& tau) {
  detail::check_joints(tau, "forward_dynamics: tau must have 2 entries");
  const Vec rhs = tau - coriolis_matrix(p, s.q, s.qd) * s.qd -
                  gravity_vector(p, s.q);
  return solve_mass(mass_matrix(p, s.q), rhs);
}

/// tau = M qdd + C qd + G.
inline JointTorque inverse_dynamics(const ManipulatorParams& p,
                                    const JointState& s, const Vec& qdd) {
  return mass_matrix(p, s.q) * qdd + coriolis_matrix(p, s.q, s.qd) * s.qd +
         gravity_vector(p, s.q);
}

inline Mat jacobian(const ManipulatorParams& p, const Vec& q) {
  detail::check_joints(q, "jacobian: q must have 2 entries");
  const double s1 = std::sin(q(0)), c1 = std::cos(q(0));
  const double s12 = std::sin(q(0) + q(1)), c12 = std::cos(q(0) + q(1));
  Mat j(2, 2);
  j << -p.l1 * s1 - p.l2 * s12, -p.l2 * s12,
        p.l1 * c1 + p.l2 * c12,  p.l2 * c12;
  return j;
}

inline Vec forward_kinematics(const ManipulatorParams& p, const Vec& q) {
  detail::check_joints(q, "forward_kinematics: q must have 2 entries");
  Vec x(2);
  x << p.l1 * std::cos(q(0)) + p.l2 * std::cos(q(0) + q(1)),
       p.l1 * std::sin(q(0)) + p.l2 * std::sin(q(0) + q(1));
  return x;
}

/// Elbow-down places q2 in [0, pi], elbow-up in [-pi, 0].
enum class ElbowBranch { kDown, kUp };

inline Vec inverse_kinematics(const ManipulatorParams& p, const Vec& target,
                              ElbowBranch elbow) {
  require(target.size() == 2, "inverse_kinematics: target must be planar");
  const double r2 = target.squaredNorm();
  const double r = std::sqrt(r2);
  constexpr double kSlack = 1e-12;
  if (!std::isfinite(r) || r > p.reach() + kSlack ||
      r < p.inner_radius() - kSlack) {
    throw OutOfWorkspaceError("point at radius " + std::to_string(r) +
                              " m is outside the workspace");
  }
  const double c2 = std::clamp(
      (r2 - p.l1 * p.l1 - p.l2 * p.l2) / (2.0 * p.l1 * p.l2), -1.0, 1.0);
  double q2 = std::acos(c2);
  if (elbow == ElbowBranch::kUp) q2 = -q2;
  const double q1 = std::atan2(target(1), target(0)) -
                    std::atan2(p.l2 * std::sin(q2), p.l1 + p.l2 * std::cos(q2));
  Vec q(2);
  q << std::remainder(q1, 2.0 * std::numbers::pi), q2;
  return q;
}

/// 0.5 qd' M(q) qd. With g = 0 and zero torque this is a conserved quantity.
inline double kinetic_energy(const ManipulatorParams& p, const JointState& s) {
  return 0.5 * s.qd.dot(mass_matrix(p, s.q) * s.qd);
}

/// Classical RK4 over `dt` with torque held constant, split into `substeps`
/// equal steps.
inline JointState integrate_plant(const ManipulatorParams& p,
                                  const JointState& s, const JointTorque& tau,
                                  double dt, int substeps) {
  require(dt > 0, "integrate_plant: dt must be positive");
  require(substeps >= 1, "integrate_plant: substeps must be >= 1");
  const double h = dt / substeps;
  const Index n = s.q.size();
  auto deriv = [&](const Vec& x) {
    if (!x.allFinite()) {
      throw DivergenceError("plant integration produced a non-finite state");
    }
    Vec dx(2 * n);
    const JointState js(x.head(n), x.tail(n));
    dx << js.qd, forward_dynamics(p, js, tau);
    return dx;
  };
  Vec x = s.stacked();
  for (int k = 0; k < substeps; ++k) {
    const Vec k1 = deriv(x);
    const Vec k2 = deriv(x + 0.5 * h * k1);
    const Vec k3 = deriv(x + 0.5 * h * k2);
    const Vec k4 = deriv(x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite()) {
      throw DivergenceError("plant integration produced a non-finite state");
    }
  }
  return JointState::from_stacked(x);
}

}  // namespace cesmpc
