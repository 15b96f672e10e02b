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

// Box-constrained convex QP
//
//   min 0.5 u' H u + g' u   s.t.  lo <= u <= hi
//
// solved by a primal active-set method. Each iteration takes the Newton step
// on the free variables, truncated at the first bound it meets; once the
// free subspace is optimal, the bound whose multiplier has the wrong sign is
// released. Subspace solves are direct, so the method is insensitive to the
// condition number (horizon QPs of the arm sit around 1e10) and the objective
// never increases.

#pragma once

#include <cesmpc/core.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace cesmpc {

struct BoxQpOptions {
  int max_iterations = 500;
  double tolerance = 1e-10;  // on multiplier signs, relative to the data scale
  bool record_history = false;
};

struct BoxQpResult {
  Vec u;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;  // objective after each iteration
};

inline double box_qp_objective(const Mat& H, const Vec& g, const Vec& u) {
  return 0.5 * u.dot(H * u) + g.dot(u);
}

inline Vec clamp_box(const Vec& u, const Vec& lo, const Vec& hi) {
  return u.cwiseMax(lo).cwiseMin(hi);
}

/// Largest |component| of the projected gradient u - P(u - grad).
inline double projected_gradient_norm(const Mat& H, const Vec& g, const Vec& lo,
                                      const Vec& hi, const Vec& u) {
  const Vec grad = H * u + g;
  return (u - clamp_box(u - grad, lo, hi)).cwiseAbs().maxCoeff();
}

inline BoxQpResult solve_box_qp(const Mat& H, const Vec& g, const Vec& lo,
                                const Vec& hi,
                                const std::optional<Vec>& warm_start = {},
                                const BoxQpOptions& opt = {}) {
  const Index n = g.size();
  require(H.rows() == n && H.cols() == n && lo.size() == n && hi.size() == n,
          "solve_box_qp: inconsistent dimensions");
  require((lo.array() <= hi.array()).all(), "solve_box_qp: empty box");

  enum Bound : signed char { kFree = 0, kLower = -1, kUpper = 1 };
  BoxQpResult res;
  Vec u = warm_start && warm_start->size() == n
              ? clamp_box(*warm_start, lo, hi)
              : clamp_box(Vec::Zero(n), lo, hi);
  std::vector<signed char> bound(n, kFree);
  for (Index i = 0; i < n; ++i) {
    if (lo(i) == hi(i) || u(i) == lo(i)) bound[i] = kLower;
    else if (u(i) == hi(i)) bound[i] = kUpper;
  }
  double f = box_qp_objective(H, g, u);
  if (opt.record_history) res.history.push_back(f);

  const double scale = 1.0 + g.cwiseAbs().maxCoeff() +
                       H.cwiseAbs().maxCoeff() *
                           std::max(lo.cwiseAbs().maxCoeff(),
                                    hi.cwiseAbs().maxCoeff());
  const double tol = opt.tolerance * scale;

  std::vector<Index> free_idx;
  for (int it = 0; it < opt.max_iterations; ++it) {
    res.iterations = it + 1;
    free_idx.clear();
    for (Index i = 0; i < n; ++i)
      if (bound[i] == kFree) free_idx.push_back(i);

    Vec grad = H * u + g;
    bool subspace_optimal = true;
    if (!free_idx.empty()) {
      const Index nf = Index(free_idx.size());
      Mat hff(nf, nf);
      Vec gf(nf);
      for (Index a = 0; a < nf; ++a) {
        gf(a) = grad(free_idx[a]);
        for (Index b = 0; b < nf; ++b) hff(a, b) = H(free_idx[a], free_idx[b]);
      }
      Eigen::LLT<Mat> llt(hff);
      if (llt.info() != Eigen::Success) {
        throw SingularMatrixError("solve_box_qp: Hessian is not positive definite");
      }
      const Vec d = llt.solve(-gf);
      // step to the first bound along d
      double alpha = 1.0;
      Index blocking = -1;
      for (Index a = 0; a < nf; ++a) {
        const Index i = free_idx[a];
        double room = std::numeric_limits<double>::infinity();
        if (d(a) < 0) room = (lo(i) - u(i)) / d(a);
        else if (d(a) > 0) room = (hi(i) - u(i)) / d(a);
        if (room < alpha) {
          alpha = std::max(room, 0.0);
          blocking = i;
        }
      }
      if (d.cwiseAbs().maxCoeff() > 0) {
        for (Index a = 0; a < nf; ++a) u(free_idx[a]) += alpha * d(a);
      }
      if (blocking >= 0) {
        const Index a = Index(std::find(free_idx.begin(), free_idx.end(),
                                        blocking) - free_idx.begin());
        const bool lower = d(a) < 0;
        u(blocking) = lower ? lo(blocking) : hi(blocking);
        bound[blocking] = lower ? kLower : kUpper;
        subspace_optimal = false;
      }
      u = clamp_box(u, lo, hi);
      const double f_new = box_qp_objective(H, g, u);
      f = std::min(f, f_new);
      if (opt.record_history) res.history.push_back(f);
      if (!subspace_optimal) continue;
      grad = H * u + g;
    }

    // release the bound with the most wrongly signed multiplier
    Index release = -1;
    double worst = tol;
    for (Index i = 0; i < n; ++i) {
      if (bound[i] == kFree || lo(i) == hi(i)) continue;
      const double pull = bound[i] == kLower ? -grad(i) : grad(i);
      if (pull > worst) {
        worst = pull;
        release = i;
      }
    }
    if (release < 0) {
      res.converged = true;
      break;
    }
    bound[release] = kFree;
  }
  res.u = u;
  res.objective = box_qp_objective(H, g, u);
  return res;
}

}  // namespace cesmpc
