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

// Closed-loop simulation: reference sampling, controller, zero-order-hold
// torque on an RK4 plant, and ground-truth contour metrics.

#pragma once

#include <cesmpc/controllers.hpp>
#include <cesmpc/trajectory.hpp>

#include <array>
#include <future>
#include <string>
#include <vector>

namespace cesmpc {

struct SimConfig {
  ManipulatorParams params;
  TrajectorySpec spec;
  ControllerKind controller = ControllerKind::kCesMpc;
  double T = 0.002;        // s
  double duration = 8.0;   // s
  JointState initial;
  CtcGains gains;
  MpcWeights weights;
  TorqueLimits limits;
  CouplingConfig coupling;
  double exit_threshold = 1.2;
  int substeps = 20;

  void validate() const {
    params.validate();
    require(T > 0, "control period must be positive");
    require(duration >= 0, "duration must be >= 0");
    require(substeps >= 1, "substeps must be >= 1");
    require(initial.q.size() == kJoints && initial.qd.size() == kJoints,
            "initial state must have 2 joints");
    weights.validate();
    limits.validate();
    coupling.validate();
    require(exit_threshold >= 1.0, "exit threshold must be >= 1");
    validate_path(spec, params, duration, T);
  }

  CesMpcConfig ces_config() const {
    CesMpcConfig c;
    c.coupling = coupling;
    c.weights = weights;
    c.limits = limits;
    c.T = T;
    c.exit_threshold = exit_threshold;
    return c;
  }

  friend bool operator==(const SimConfig& a, const SimConfig& b) {
    return a.params == b.params && a.spec == b.spec &&
           a.controller == b.controller && a.T == b.T &&
           a.duration == b.duration && a.initial == b.initial &&
           a.gains == b.gains && a.weights == b.weights &&
           a.limits == b.limits && a.coupling == b.coupling &&
           a.exit_threshold == b.exit_threshold && a.substeps == b.substeps;
  }
};

/// Number of control samples in [0, duration).
inline long record_count(double duration, double T) {
  return long(std::floor(duration / T + 1e-9));
}

/// One control period [t - T, t): `tau` was held over it, the state is the one
/// reached at t, and `mode`, `cost` describe the decision that produced tau.
struct SimRecord {
  double t = 0.0;
  Vec q, qd, q_r, qd_r, tau;
  Vec p, p_d;
  Vec eps_o;  // Tc (p - p_d), tangent at the desired point
  ControllerMode mode = ControllerMode::kSingle;
  double cost = std::numeric_limits<double>::quiet_NaN();
  double delta_norm = std::numeric_limits<double>::quiet_NaN();
};

struct SimLog {
  ControllerKind controller = ControllerKind::kCesMpc;
  double T = 0.0;
  std::vector<SimRecord> records;
  bool diverged = false;
  std::string divergence_message;
  long inexact_qp_steps = 0;
  long infeasible_terminal_steps = 0;
};

/// Samples the reference at t, t + T, ..., t + count*T.
inline std::vector<ReferencePoint> reference_window(
    const TrajectorySpec& spec, const ManipulatorParams& params, double t,
    double T, int count) {
  std::vector<ReferencePoint> refs;
  refs.reserve(count + 1);
  for (int i = 0; i <= count; ++i)
    refs.push_back(generate_reference(spec, params, t + i * T));
  return refs;
}

inline SimLog run_closed_loop(const SimConfig& cfg) {
  cfg.validate();
  SimLog log;
  log.controller = cfg.controller;
  log.T = cfg.T;
  const long steps = record_count(cfg.duration, cfg.T);
  log.records.reserve(steps);

  const CesMpcConfig ces = cfg.ces_config();
  TerminalIngredients terminal;
  if (cfg.controller == ControllerKind::kCesMpc) {
    terminal = ces_terminal_ingredients(cfg.params, ces);
  }
  const int window = cfg.controller == ControllerKind::kCesMpc ? cfg.weights.Z : 0;

  JointState state = cfg.initial;
  ControllerMode mode = ControllerMode::kHorizonQp;
  std::optional<Vec> warm;
  for (long k = 0; k < steps; ++k) {
    const double t = k * cfg.T;
    const auto refs = reference_window(cfg.spec, cfg.params, t, cfg.T, window);
    const ReferencePoint& ref = refs.front();

    SimRecord rec;
    switch (cfg.controller) {
      case ControllerKind::kCtc: {
        const auto out = ctc_step(cfg.params, state, ref, cfg.gains, cfg.limits);
        rec.tau = out.tau;
        rec.mode = out.mode;
        break;
      }
      case ControllerKind::kMpc: {
        const auto out = mpc_baseline_step(cfg.params, state, ref, cfg.weights,
                                           cfg.limits, cfg.T);
        rec.tau = out.tau;
        rec.mode = out.mode;
        break;
      }
      case ControllerKind::kCesMpc: {
        const auto out =
            ces_mpc_step(cfg.params, state, refs, ces, terminal, mode, warm);
        rec.tau = out.tau;
        rec.mode = out.mode;
        rec.cost = out.cost;
        rec.delta_norm = out.delta_norm;
        mode = out.mode;
        if (out.mode == ControllerMode::kHorizonQp) {
          warm = shift_sequence(out.sequence, kJoints);
          if (!out.qp_exact) ++log.inexact_qp_steps;
          if (!out.terminal_feasible) ++log.infeasible_terminal_steps;
        } else {
          warm.reset();
        }
        break;
      }
    }

    try {
      state = integrate_plant(cfg.params, state, rec.tau, cfg.T, cfg.substeps);
    } catch (const DivergenceError& e) {
      log.diverged = true;
      log.divergence_message = e.what();
      break;
    }

    // The record describes the state reached at the end of the period.
    rec.t = t + cfg.T;
    const ReferencePoint next =
        window > 0 ? refs[1] : generate_reference(cfg.spec, cfg.params, rec.t);
    rec.q = state.q;
    rec.qd = state.qd;
    rec.q_r = next.q_r;
    rec.qd_r = next.qd_r;
    rec.p = forward_kinematics(cfg.params, state.q);
    rec.p_d = next.p_d;
    rec.eps_o = estimate_contour_error(rec.p - rec.p_d,
                                       contour_transform_or_identity(next.v_d));
    log.records.push_back(std::move(rec));
  }
  return log;
}

/// Ground-truth contour error: distance to the densely sampled path.
class ContourOracle {
 public:
  explicit ContourOracle(const TrajectorySpec& spec, int oversample = 10000)
      : spec_(spec), pts_(densify_path(spec, oversample)) {
    require(oversample >= 1000, "contour oracle needs oversample >= 1000");
    if (spec.kind == PathKind::kCircle) {
      // chords lie between radius R cos(pi/N) and R
      tolerance_ = spec.radius * (1.0 - std::cos(std::numbers::pi / oversample));
    } else {
      tolerance_ = 1e-12;
    }
  }

  /// Brute-force distance; for circles it is cross-checked against the
  /// closed form.
  double operator()(const Vec& p) const {
    const double brute = polyline_distance(p, pts_);
    if (spec_.kind == PathKind::kCircle) {
      const double exact = analytic_path_distance(p, spec_);
      if (std::abs(brute - exact) > tolerance_ + 1e-12) {
        throw std::logic_error("contour oracle disagrees with closed form");
      }
    }
    return brute;
  }

  double tolerance() const { return tolerance_; }

 private:
  TrajectorySpec spec_;
  Mat pts_;
  double tolerance_ = 0.0;
};

inline double true_contour_error(const Vec& p, const TrajectorySpec& spec,
                                 int oversample = 10000) {
  return ContourOracle(spec, oversample)(p);
}

struct Metrics {
  double max_contour_error = 0.0;  // m
  double rms_contour_error = 0.0;  // m
  Vec mean_tracking_error = Vec::Zero(2);  // rad, signed, q - q_r
  Vec max_tracking_error = Vec::Zero(2);   // rad, absolute
  Vec tau_min = Vec::Zero(2);
  Vec tau_max = Vec::Zero(2);
  long settling_step = -1;  // first step after which contour error stays low
  double settling_threshold = 0.0;
  long steps = 0;
  bool diverged = false;
};

inline std::vector<double> contour_series(const SimLog& log,
                                          const ContourOracle& oracle) {
  std::vector<double> out;
  out.reserve(log.records.size());
  for (const auto& r : log.records) out.push_back(oracle(r.p));
  return out;
}

inline Metrics compute_metrics(const SimLog& log, const TrajectorySpec& spec,
                               double settling_threshold = 5e-4,
                               int oversample = 10000) {
  require(!log.records.empty(), "compute_metrics: empty log");
  const ContourOracle oracle(spec, oversample);
  const auto contour = contour_series(log, oracle);
  Metrics m;
  m.steps = long(log.records.size());
  m.diverged = log.diverged;
  m.settling_threshold = settling_threshold;
  m.tau_min = log.records.front().tau;
  m.tau_max = log.records.front().tau;
  double sq = 0.0;
  Vec sum = Vec::Zero(2);
  for (std::size_t k = 0; k < log.records.size(); ++k) {
    const auto& r = log.records[k];
    m.max_contour_error = std::max(m.max_contour_error, contour[k]);
    sq += contour[k] * contour[k];
    const Vec e = r.q - r.q_r;
    sum += e;
    m.max_tracking_error = m.max_tracking_error.cwiseMax(e.cwiseAbs());
    m.tau_min = m.tau_min.cwiseMin(r.tau);
    m.tau_max = m.tau_max.cwiseMax(r.tau);
  }
  m.rms_contour_error = std::sqrt(sq / double(contour.size()));
  m.mean_tracking_error = sum / double(contour.size());
  long settle = long(contour.size());
  while (settle > 0 && contour[settle - 1] < settling_threshold) --settle;
  m.settling_step = settle < long(contour.size()) ? settle : -1;
  return m;
}

struct RunResult {
  ControllerKind controller = ControllerKind::kCtc;
  SimLog log;
  Metrics metrics;
  bool ok = false;
  std::string error;
};

struct ComparisonReport {
  std::array<RunResult, 3> runs;
  std::vector<double> time;  // end of each control period
  std::array<std::vector<double>, 3> contour;  // per run, aligned with time

  /// Index of the run with the smallest max contour error, -1 if none ran.
  int best() const {
    int best = -1;
    for (int i = 0; i < 3; ++i) {
      if (!runs[i].ok) continue;
      if (best < 0 || runs[i].metrics.max_contour_error <
                          runs[best].metrics.max_contour_error)
        best = i;
    }
    return best;
  }
  bool all_ok() const {
    for (const auto& r : runs)
      if (!r.ok) return false;
    return true;
  }
};

inline constexpr std::array<ControllerKind, 3> kAllControllers{
    ControllerKind::kCtc, ControllerKind::kMpc, ControllerKind::kCesMpc};

/// Runs CTC, MPC and CES-MPC from the same initial state and reference. Runs
/// are independent and execute concurrently; a failing run is reported in its
/// slot without affecting the others.
inline ComparisonReport compare_controllers(const SimConfig& base,
                                            int oversample = 10000) {
  ComparisonReport report;
  std::array<std::future<RunResult>, 3> futures;
  for (int i = 0; i < 3; ++i) {
    futures[i] = std::async(std::launch::async, [&base, i, oversample] {
      RunResult r;
      r.controller = kAllControllers[i];
      try {
        SimConfig cfg = base;
        cfg.controller = r.controller;
        r.log = run_closed_loop(cfg);
        if (!r.log.records.empty())
          r.metrics = compute_metrics(r.log, cfg.spec, 5e-4, oversample);
        r.metrics.diverged = r.log.diverged;
        r.ok = !r.log.diverged;
        if (r.log.diverged) r.error = r.log.divergence_message;
      } catch (const std::exception& e) {
        r.error = e.what();
      }
      return r;
    });
  }
  for (int i = 0; i < 3; ++i) report.runs[i] = futures[i].get();

  const ContourOracle oracle(base.spec, oversample);
  std::size_t len = 0;
  for (const auto& r : report.runs) len = std::max(len, r.log.records.size());
  report.time.resize(len);
  for (std::size_t k = 0; k < len; ++k) report.time[k] = double(k + 1) * base.T;
  for (int i = 0; i < 3; ++i) {
    report.contour[i] = contour_series(report.runs[i].log, oracle);
  }
  return report;
}

/// One step of the dual-mode loop on the feedback-linearized model, where the
/// coupling error itself is the state: d+ = A d + B u.
struct LinearizedStep {
  Vec delta;
  double value = 0.0;  // d' P d at decision time
  ControllerMode mode = ControllerMode::kHorizonQp;
  double cost = std::numeric_limits<double>::quiet_NaN();
  Vec u;
};

struct LinearizedRunConfig {
  MpcWeights weights;
  double T = 0.002;
  int steps = 200;
  double exit_threshold = 1.0;
  /// Acceleration bounds for the horizon QP. Large values disable them.
  Vec accel_limit = Vec::Constant(2, 1e12);
};

inline std::vector<LinearizedStep> run_linearized_dual_mode(
    const Vec& delta0, const TerminalIngredients& terminal,
    const LinearizedRunConfig& cfg) {
  const Index n = delta0.size() / 2;
  const DiscreteModel model = double_integrator_model(n, cfg.T);
  const PredictionModel pred = build_prediction(model, cfg.weights.Z);
  TorqueLimits box;
  box.tau_max = cfg.accel_limit;
  const Vec zero_ref = Vec::Zero(2 * n * cfg.weights.Z);

  std::vector<LinearizedStep> trace;
  Vec delta = delta0;
  ControllerMode mode = ControllerMode::kHorizonQp;
  for (int k = 0; k < cfg.steps; ++k) {
    LinearizedStep s;
    s.delta = delta;
    s.value = delta.dot(terminal.P * delta);
    s.mode = dual_mode_decision(s.value, mode, cfg.exit_threshold);
    if (s.mode == ControllerMode::kLocalLaw) {
      s.u = terminal.H * delta;
    } else {
      const auto sol = constrained_horizon_solution(pred, delta, zero_ref,
                                                    cfg.weights, box, &terminal);
      s.u = sol.U.head(n);
      s.cost = sol.cost;
    }
    mode = s.mode;
    delta = model.step(delta, s.u);
    trace.push_back(std::move(s));
  }
  return trace;
}

}  // namespace cesmpc
