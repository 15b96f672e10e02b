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

// Reference paths in task space and their joint-space images.

#pragma once

#include <cesmpc/contour.hpp>

#include <cmath>
#include <numbers>

namespace cesmpc {

enum class PathKind { kCircle, kLine };

struct TrajectorySpec {
  PathKind kind = PathKind::kCircle;
  // circle
  Vec center = (Vec(2) << 0.15, 0.15).finished();
  double radius = 0.05;
  double rate = std::numbers::pi / 2.0;  // rad/s
  double phase = 0.0;                    // rad
  // line
  Vec start = Vec::Zero(2);
  Vec end = Vec::Zero(2);
  double traversal = 1.0;  // s
  ElbowBranch elbow = ElbowBranch::kDown;

  friend bool operator==(const TrajectorySpec& a, const TrajectorySpec& b) {
    return a.kind == b.kind && a.center == b.center && a.radius == b.radius &&
           a.rate == b.rate && a.phase == b.phase && a.start == b.start &&
           a.end == b.end && a.traversal == b.traversal && a.elbow == b.elbow;
  }
};

/// Task-space position, velocity and acceleration at time t.
struct TaskSample {
  Vec p, v, a;
};

inline TaskSample sample_path(const TrajectorySpec& spec, double t) {
  TaskSample s;
  if (spec.kind == PathKind::kCircle) {
    const double th = spec.phase + spec.rate * t;
    const double c = std::cos(th), sn = std::sin(th);
    const double r = spec.radius, w = spec.rate;
    s.p = spec.center + r * (Vec(2) << c, sn).finished();
    s.v = r * w * (Vec(2) << -sn, c).finished();
    s.a = -r * w * w * (Vec(2) << c, sn).finished();
  } else {
    const Vec span = spec.end - spec.start;
    const double u = std::clamp(t / spec.traversal, 0.0, 1.0);
    s.p = spec.start + u * span;
    const bool moving = t >= 0.0 && t < spec.traversal;
    s.v = moving ? Vec(span / spec.traversal) : Vec(Vec::Zero(2));
    s.a = Vec::Zero(2);
  }
  return s;
}

/// Joint reference by inverse kinematics and differential inverse kinematics:
/// qd_r = J^-1 v_d, qdd_r = J^-1 (a_d - Jdot qd_r), Jdot by central difference
/// along qd_r.
inline ReferencePoint generate_reference(const TrajectorySpec& spec,
                                         const ManipulatorParams& params,
                                         double t) {
  const TaskSample s = sample_path(spec, t);
  ReferencePoint ref;
  ref.p_d = s.p;
  ref.v_d = s.v;
  ref.a_d = s.a;
  ref.q_r = inverse_kinematics(params, s.p, spec.elbow);
  const Mat J = jacobian(params, ref.q_r);
  const Eigen::PartialPivLU<Mat> lu(J);
  ref.qd_r = lu.solve(s.v);
  constexpr double kStep = 1e-6;
  const Mat jdot = (jacobian(params, ref.q_r + kStep * ref.qd_r) -
                    jacobian(params, ref.q_r - kStep * ref.qd_r)) /
                   (2.0 * kStep);
  ref.qdd_r = lu.solve(s.a - jdot * ref.qd_r);
  return ref;
}

/// Rejects paths that leave the workspace or pass within `min_det` of a
/// kinematic singularity, sampled every `dt` over [0, duration].
inline void validate_path(const TrajectorySpec& spec,
                          const ManipulatorParams& params, double duration,
                          double dt, double min_det = 1e-4) {
  if (spec.kind == PathKind::kCircle) {
    require(spec.radius > 0, "circle radius must be positive");
  } else {
    require(spec.traversal > 0, "line traversal duration must be positive");
  }
  const long steps = long(std::ceil(duration / dt)) + 1;
  const long stride = std::max(1L, steps / 2000);
  for (long k = 0; k <= steps; k += stride) {
    const double t = std::min(duration, k * dt);
    const TaskSample s = sample_path(spec, t);
    const Vec q = inverse_kinematics(params, s.p, spec.elbow);
    if (std::abs(jacobian(params, q).determinant()) < min_det) {
      throw InvalidArgument("reference path passes a kinematic singularity");
    }
  }
}

/// Exact distance from p to the path, where it has a closed form.
inline double analytic_path_distance(const Vec& p, const TrajectorySpec& spec) {
  if (spec.kind == PathKind::kCircle) {
    return std::abs((p - spec.center).norm() - spec.radius);
  }
  const Vec d = spec.end - spec.start;
  const double len2 = d.squaredNorm();
  const double u = len2 > 0 ? std::clamp((p - spec.start).dot(d) / len2, 0.0, 1.0)
                            : 0.0;
  return (p - (spec.start + u * d)).norm();
}

/// Dense polyline through the path. Circles are closed over one revolution.
inline Mat densify_path(const TrajectorySpec& spec, int oversample) {
  Mat pts(2, oversample + 1);
  for (int k = 0; k <= oversample; ++k) {
    const double u = double(k) / oversample;
    if (spec.kind == PathKind::kCircle) {
      const double th = 2.0 * std::numbers::pi * u;
      pts.col(k) = spec.center +
                   spec.radius * (Vec(2) << std::cos(th), std::sin(th)).finished();
    } else {
      pts.col(k) = spec.start + u * (spec.end - spec.start);
    }
  }
  return pts;
}

/// Brute-force distance from p to a dense polyline.
inline double polyline_distance(const Vec& p, const Mat& pts) {
  double best = std::numeric_limits<double>::infinity();
  const double px = p(0), py = p(1);
  for (Index k = 0; k + 1 < pts.cols(); ++k) {
    const double ax = pts(0, k), ay = pts(1, k);
    const double dx = pts(0, k + 1) - ax, dy = pts(1, k + 1) - ay;
    const double len2 = dx * dx + dy * dy;
    double u = len2 > 0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
    u = std::clamp(u, 0.0, 1.0);
    const double ex = ax + u * dx - px, ey = ay + u * dy - py;
    best = std::min(best, ex * ex + ey * ey);
  }
  return std::sqrt(best);
}

}  // namespace cesmpc
