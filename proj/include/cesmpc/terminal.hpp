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

// Terminal ingredients of the dual-mode controller.
//
// The terminal set is the ellipsoid Omega = {d : d' P d <= 1} and inside it
// the local law u = H d is applied. (P, H) are certified by
//
//   (A + B H)' P (A + B H) - P <= 0                       (contraction)
//   [[S - S Q S, (A S + B Y)'], [A S + B Y, S]] > 0       (LMI, S = P^-1,
//                                                          Y = H S)
//
// The LMI is checked through its Schur complement. Congruence with P turns
// S - S Q S - (A S + B Y)' S^-1 (A S + B Y) into
//
//   P - Q - (A + B H)' P (A + B H),
//
// which is well scaled and is what `lmi_margin` reports.
//
// Candidates come from the discrete Riccati recursion with a small input
// weight R_loc and a stage weight nudged to Q + eta I, which makes the
// Schur complement strictly positive.

#pragma once

#include <cesmpc/linalg.hpp>

#include <algorithm>
#include <array>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

namespace cesmpc {

struct TerminalIngredients {
  Mat P;  // 2n x 2n, symmetric positive definite
  Mat H;  // n x 2n

  // diagnostics
  double contraction = 0.0;  // max eig((A+BH)' P (A+BH) - P)
  double lmi_margin = 0.0;   // min eig(P - Q - (A+BH)' P (A+BH)), > 0
  double scale = 1.0;        // factor applied to the Riccati solution
  double r_loc = 0.0;        // local input weight that certified
  int riccati_iterations = 0;
};

struct TerminalOptions {
  double r_loc = 1e-4;
  double riccati_tol = 1e-12;
  int max_iterations = 100000;
  std::array<double, 3> r_schedule{1.0, 10.0, 100.0};
  /// Relative nudge of the stage weight: Q + eta * max(1, ||Q||) I.
  double stage_margin = 1e-4;
  /// Optional per-input bound on |H d| over Omega. P is scaled up (never
  /// down) until max_{d in Omega} |h_i' d| <= input_bound_i.
  std::optional<Vec> input_bound;
};

/// max eig((A+BH)' P (A+BH) - P). <= 0 certifies ellipsoid invariance.
inline double contraction_certificate(const Mat& A, const Mat& B, const Mat& H,
                                      const Mat& P) {
  require(A.rows() == A.cols() && B.rows() == A.rows() &&
              H.rows() == B.cols() && H.cols() == A.cols() &&
              P.rows() == A.rows() && P.cols() == A.cols(),
          "contraction_certificate: inconsistent dimensions");
  const Mat acl = A + B * H;
  const Mat d = acl.transpose() * P * acl - P;
  return max_eigenvalue(0.5 * (d + d.transpose()));
}

/// min eig(P - Q - (A+BH)' P (A+BH)). > 0 certifies the Q-augmented
/// contraction and, with P > 0, the LMI.
inline double lmi_margin(const Mat& A, const Mat& B, const Mat& Q,
                         const Mat& H, const Mat& P) {
  const Mat acl = A + B * H;
  const Mat d = P - Q - acl.transpose() * P * acl;
  return min_eigenvalue(0.5 * (d + d.transpose()));
}

/// The LMI block matrix in the (S, Y) variables.
inline Mat lmi_block_matrix(const Mat& A, const Mat& B, const Mat& Q,
                            const Mat& S, const Mat& Y) {
  const Index nx = A.rows();
  const Mat ay = A * S + B * Y;
  Mat out(2 * nx, 2 * nx);
  out.topLeftCorner(nx, nx) = S - S.transpose() * Q * S;
  out.topRightCorner(nx, nx) = ay.transpose();
  out.bottomLeftCorner(nx, nx) = ay;
  out.bottomRightCorner(nx, nx) = S;
  return out;
}

inline bool terminal_membership(const Vec& delta, const Mat& P) {
  return delta.dot(P * delta) <= 1.0;
}

namespace detail {

struct RiccatiResult {
  Mat P;
  Mat H;
  int iterations = 0;
  bool converged = false;
};

inline RiccatiResult riccati_fixed_point(const Mat& A, const Mat& B,
                                         const Mat& Q, const Mat& R, double tol,
                                         int max_iterations) {
  RiccatiResult out;
  Mat p = Q;
  const Index nu = B.cols();
  for (int k = 1; k <= max_iterations; ++k) {
    const Mat btp = B.transpose() * p;
    const Mat gain_lhs = R + btp * B;
    Eigen::LDLT<Mat> ldlt(gain_lhs);
    Mat h = Mat::Zero(nu, A.cols());
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      h = -ldlt.solve(btp * A);
    }
    const Mat acl = A + B * h;
    Mat next = Q + acl.transpose() * p * acl + h.transpose() * R * h;
    next = 0.5 * (next + next.transpose());
    const double change = (next - p).norm();
    p = std::move(next);
    out.iterations = k;
    if (!p.allFinite()) break;
    if (change <= tol * std::max(1.0, p.norm())) {
      out.converged = true;
      break;
    }
  }
  const Mat btp = B.transpose() * p;
  out.H = -(R + btp * B).ldlt().solve(btp * A);
  if (!out.H.allFinite()) out.H = Mat::Zero(nu, A.cols());
  out.P = p;
  return out;
}

}  // namespace detail

/// Finds (P, H) with P > 0, (A+BH)' P (A+BH) - P <= 0 and a strictly
/// positive LMI Schur complement for stage weight Q. Throws InfeasibleError
/// with the most violated eigenvalue when the schedule is exhausted.
inline TerminalIngredients solve_terminal_lmi(const Mat& A, const Mat& B,
                                              const Mat& Q,
                                              const TerminalOptions& opt = {}) {
  const Index nx = A.rows();
  require(A.cols() == nx && B.rows() == nx && Q.rows() == nx &&
              Q.cols() == nx,
          "solve_terminal_lmi: inconsistent dimensions");
  require(is_symmetric(Q, 1e-12), "solve_terminal_lmi: Q must be symmetric");
  const Index nu = B.cols();
  const double eta = opt.stage_margin * std::max(1.0, Q.norm());
  const Mat q_hat = Q + eta * Mat::Identity(nx, nx);

  double worst = -std::numeric_limits<double>::infinity();
  std::string reason;
  for (const double factor : opt.r_schedule) {
    const double r = opt.r_loc * factor;
    auto ric = detail::riccati_fixed_point(
        A, B, q_hat, r * Mat::Identity(nu, nu), opt.riccati_tol,
        opt.max_iterations);

    Mat P = 0.5 * (ric.P + ric.P.transpose());
    double scale = 1.0;
    if (opt.input_bound && P.allFinite()) {
      require(opt.input_bound->size() == nu,
              "solve_terminal_lmi: input bound has wrong length");
      const Eigen::LDLT<Mat> ldlt(P);
      for (Index i = 0; i < nu; ++i) {
        const Vec h = ric.H.row(i).transpose();
        const double bound = (*opt.input_bound)(i);
        require(bound > 0, "solve_terminal_lmi: input bound must be positive");
        // max over d'Pd <= 1 of |h'd| is sqrt(h' P^-1 h)
        scale = std::max(scale, h.dot(ldlt.solve(h)) / (bound * bound));
      }
      P *= scale;
    }

    if (!P.allFinite() || !ric.H.allFinite()) {
      reason = "Riccati recursion diverged";
      continue;
    }
    const double min_p = min_eigenvalue(P);
    const double contraction = contraction_certificate(A, B, ric.H, P);
    const double margin = lmi_margin(A, B, Q, ric.H, P);
    const double violation = std::min({min_p, margin, -contraction});
    if (min_p > 0 && margin > 0 && contraction <= 1e-8) {
      TerminalIngredients out;
      out.P = P;
      out.H = ric.H;
      out.contraction = contraction;
      out.lmi_margin = margin;
      out.scale = scale;
      out.r_loc = r;
      out.riccati_iterations = ric.iterations;
      return out;
    }
    if (violation > worst) {
      worst = violation;
      std::ostringstream msg;
      msg << "certificate failed (min eig P = " << min_p
          << ", LMI margin = " << margin << ", contraction = " << contraction
          << ")";
      reason = msg.str();
    }
  }
  throw InfeasibleError("terminal LMI infeasible: " + reason, worst);
}

}  // namespace cesmpc
