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

// Receding-horizon optimization over the stacked prediction X = S x + G U + Cp.
//
// Two objectives are provided. The closed form minimizes
//
//   J = 0.5 (X - Xrc)' Qbar (X - Xrc) + 0.5 U' Rbar U
//
// with the stage weight on every step. The dual-mode problem minimizes
//
//   J = sum_{i<Z} |d_i|^2_Q + |d_Z|^2_P + sum_i |tau_i|^2_R,  d = X - Xrc,
//
// under a torque box and, optionally, the terminal ellipsoid d_Z' P d_Z <= 1.

#pragma once

#include <cesmpc/box_qp.hpp>
#include <cesmpc/discretization.hpp>
#include <cesmpc/terminal.hpp>

namespace cesmpc {

struct MpcWeights {
  Mat Q1 = 10.0 * Mat::Identity(2, 2);  // position
  Mat Q2 = Mat::Zero(2, 2);             // velocity
  Mat R = Mat::Zero(2, 2);              // torque
  int Z = 10;                           // horizon, steps

  Mat stage() const { return block_diagonal(Q1, Q2); }

  void validate() const {
    require(Z >= 1, "horizon must be >= 1");
    require(Q1.rows() == Q1.cols() && Q2.rows() == Q2.cols() &&
                R.rows() == R.cols() && Q1.rows() == Q2.rows() &&
                R.rows() == Q1.rows(),
            "weights must be square and of matching size");
    require(is_symmetric(Q1) && is_symmetric(Q2) && is_symmetric(R),
            "weights must be symmetric");
    require(min_eigenvalue(Q1) >= 0 && min_eigenvalue(Q2) >= 0 &&
                min_eigenvalue(R) >= 0,
            "weights must be positive semidefinite");
  }
  friend bool operator==(const MpcWeights& a, const MpcWeights& b) {
    return a.Q1 == b.Q1 && a.Q2 == b.Q2 && a.R == b.R && a.Z == b.Z;
  }
};

/// Symmetric torque bounds |tau_i| <= tau_max_i.
struct TorqueLimits {
  Vec tau_max = (Vec(2) << 10.0, 1.0).finished();

  void validate() const {
    require((tau_max.array() > 0).all(), "torque limits must be positive");
  }
  friend bool operator==(const TorqueLimits& a, const TorqueLimits& b) {
    return a.tau_max == b.tau_max;
  }
};

/// Tikhonov term added when the normal matrix is numerically singular.
inline constexpr double kTikhonov = 1e-10;

struct UnconstrainedSolution {
  Vec U;
  bool regularized = false;
};

/// U = -(G' Q G + R)^-1 G' Q (S x + Cp - Xrc).
inline UnconstrainedSolution unconstrained_horizon_solution(
    const PredictionModel& pred, const Vec& x, const Vec& Xrc,
    const MpcWeights& weights) {
  const Index nu = pred.input_dim();
  require(Xrc.size() == pred.S.rows(),
          "unconstrained_horizon_solution: Xrc has wrong length");
  const Mat qbar = repeat_block_diagonal(weights.stage(), pred.Z);
  const Mat rbar = repeat_block_diagonal(weights.R, pred.Z);
  Mat normal = pred.Gmat.transpose() * qbar * pred.Gmat + rbar;
  normal = 0.5 * (normal + normal.transpose());
  const Vec rhs = -pred.Gmat.transpose() * qbar * (pred.S * x + pred.Cp - Xrc);

  UnconstrainedSolution out;
  Eigen::LLT<Mat> llt(normal);
  if (llt.info() != Eigen::Success) {
    out.regularized = true;
    llt.compute(normal + kTikhonov * Mat::Identity(nu * pred.Z, nu * pred.Z));
    if (llt.info() != Eigen::Success) {
      throw SingularMatrixError(
          "horizon normal matrix is singular; increase the torque weight R");
    }
  }
  out.U = llt.solve(rhs);
  return out;
}

/// 0.5 |X - Xrc|^2_Qbar + 0.5 |U|^2_Rbar, the objective minimized by
/// unconstrained_horizon_solution.
inline double unconstrained_horizon_objective(const PredictionModel& pred,
                                              const Vec& x, const Vec& Xrc,
                                              const MpcWeights& weights,
                                              const Vec& U) {
  const Mat qbar = repeat_block_diagonal(weights.stage(), pred.Z);
  const Mat rbar = repeat_block_diagonal(weights.R, pred.Z);
  const Vec r = pred.predict(x, U) - Xrc;
  return 0.5 * r.dot(qbar * r) + 0.5 * U.dot(rbar * U);
}

struct HorizonOptions {
  BoxQpOptions qp;
  int penalty_rounds = 20;    // doublings of the ellipsoid multiplier
  int bisection_rounds = 30;  // refinement once a feasible multiplier is known
};

struct HorizonSolution {
  Vec U;
  double cost = 0.0;            // dual-mode objective at U, penalty excluded
  double terminal_value = 0.0;  // d_Z' P d_Z (P of the terminal ingredients)
  bool exact = true;            // every QP solve met its tolerance
  bool terminal_feasible = true;
  bool regularized = false;
  double multiplier = 0.0;      // ellipsoid multiplier that was applied
  int qp_solves = 0;
  std::vector<double> history;  // objective trace of the first QP solve
};

/// Evaluates the dual-mode objective (penalty excluded).
inline double dual_mode_objective(const PredictionModel& pred, const Vec& x,
                                  const Vec& Xrc, const MpcWeights& weights,
                                  const Mat& terminal_weight, const Vec& U) {
  const Index nx = pred.state_dim();
  Mat qbar = repeat_block_diagonal(weights.stage(), pred.Z);
  qbar.bottomRightCorner(nx, nx) = terminal_weight;
  const Mat rbar = repeat_block_diagonal(weights.R, pred.Z);
  const Vec r = pred.predict(x, U) - Xrc;
  return r.dot(qbar * r) + U.dot(rbar * U);
}

/// Minimizes the dual-mode objective over the torque box. With terminal
/// ingredients the terminal weight is their P and the ellipsoid is imposed
/// through a multiplier on d_Z' P d_Z: started at the Hessian scale ratio,
/// doubled while infeasible, then bisected down to the smallest feasible
/// value. Without them, the terminal weight is the stage weight and the
/// problem is the unconstrained one plus the box.
inline HorizonSolution constrained_horizon_solution(
    const PredictionModel& pred, const Vec& x, const Vec& Xrc,
    const MpcWeights& weights, const TorqueLimits& limits,
    const TerminalIngredients* terminal,
    const std::optional<Vec>& warm_start = {},
    const HorizonOptions& opt = {}) {
  const Index nx = pred.state_dim();
  const Index nu = pred.input_dim();
  const int Z = pred.Z;
  require(Xrc.size() == nx * Z,
          "constrained_horizon_solution: Xrc has wrong length");
  require(limits.tau_max.size() == nu,
          "constrained_horizon_solution: limits have wrong length");

  const Mat terminal_weight = terminal ? terminal->P : weights.stage();
  Mat qbar = repeat_block_diagonal(weights.stage(), Z);
  qbar.bottomRightCorner(nx, nx) = terminal_weight;
  const Mat rbar = repeat_block_diagonal(weights.R, Z);

  const Vec r = pred.S * x + pred.Cp - Xrc;
  const Mat gtq = pred.Gmat.transpose() * qbar;
  Mat hess = gtq * pred.Gmat + rbar;
  hess = 0.5 * (hess + hess.transpose());
  const Vec lin = gtq * r;

  HorizonSolution out;
  {
    Eigen::LLT<Mat> llt(hess);
    if (llt.info() != Eigen::Success) {
      hess += kTikhonov * Mat::Identity(nu * Z, nu * Z);
      out.regularized = true;
    }
  }

  Vec lo(nu * Z), hi(nu * Z);
  for (int i = 0; i < Z; ++i) {
    hi.segment(i * nu, nu) = limits.tau_max;
    lo.segment(i * nu, nu) = -limits.tau_max;
  }

  const Mat gz = pred.Gmat.bottomRows(nx);
  const Vec rz = r.tail(nx);
  Mat hz;
  Vec lz;
  if (terminal) {
    hz = gz.transpose() * terminal->P * gz;
    hz = 0.5 * (hz + hz.transpose());
    lz = gz.transpose() * (terminal->P * rz);
  }

  auto terminal_value = [&](const Vec& U) {
    if (!terminal) return 0.0;
    const Vec dz = rz + gz * U;
    return dz.dot(terminal->P * dz);
  };

  BoxQpOptions qp_opt = opt.qp;
  auto solve = [&](double mu, const std::optional<Vec>& start) {
    qp_opt.record_history = opt.qp.record_history && out.qp_solves == 0;
    ++out.qp_solves;
    if (mu == 0.0) return solve_box_qp(hess, lin, lo, hi, start, qp_opt);
    const Mat h = hess + mu * hz;
    const Vec g = lin + mu * lz;
    return solve_box_qp(h, g, lo, hi, start, qp_opt);
  };

  BoxQpResult best = solve(0.0, warm_start);
  out.history = best.history;
  out.exact = best.converged;
  double mu = 0.0;

  if (terminal && terminal_value(best.u) > 1.0) {
    double mu_lo = 0.0;
    const double hz_scale = hz.cwiseAbs().maxCoeff();
    double mu_hi = hz_scale > 0 ? std::max(1.0, hess.cwiseAbs().maxCoeff() / hz_scale) : 1.0;
    BoxQpResult feasible;
    bool found = false;
    BoxQpResult trial = best;
    for (int round = 0; round < opt.penalty_rounds; ++round) {
      trial = solve(mu_hi, trial.u);
      out.exact = out.exact && trial.converged;
      if (terminal_value(trial.u) <= 1.0) {
        feasible = trial;
        found = true;
        break;
      }
      mu_lo = mu_hi;
      mu_hi *= 2.0;
    }
    if (!found) {
      out.terminal_feasible = false;
      best = trial;
      mu = mu_lo;
    } else {
      for (int k = 0; k < opt.bisection_rounds; ++k) {
        const double mid = 0.5 * (mu_lo + mu_hi);
        BoxQpResult t = solve(mid, feasible.u);
        out.exact = out.exact && t.converged;
        if (terminal_value(t.u) <= 1.0) {
          feasible = t;
          mu_hi = mid;
        } else {
          mu_lo = mid;
        }
        if (mu_hi - mu_lo <= 1e-10 * mu_hi) break;
      }
      best = feasible;
      mu = mu_hi;
    }
  }

  out.U = best.u;
  out.multiplier = mu;
  out.terminal_value = terminal_value(best.u);
  out.terminal_feasible = !terminal || out.terminal_value <= 1.0;
  out.cost = dual_mode_objective(pred, x, Xrc, weights, terminal_weight, out.U);
  return out;
}

}  // namespace cesmpc
