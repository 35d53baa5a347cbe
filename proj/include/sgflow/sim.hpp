#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sgflow/qp.hpp"

namespace sgflow {

struct AbortEvent {
  double time = 0.0;
  std::string reason;
};

struct TrajectoryMetadata {
  std::string problem;
  ControllerParams params;
  double beta = 0.0;
  double dt = 0.0, T = 0.0;
  Eigen::VectorXd x0, u0;
  std::uint64_t seed = 0;
  bool feasible_start = true;
  std::vector<std::string> warnings;
  std::optional<AbortEvent> abort;
};

/// Time-stamped closed-loop samples with the per-sample monitor columns.
/// All column vectors have equal length; times are uniform multiples of dt.
struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;   // xi
  std::vector<Eigen::VectorXd> inputs;   // upsilon
  std::vector<double> h, b;
  std::vector<Eigen::VectorXd> h_levels;  // h_1 .. h_r
  std::vector<double> phi_x, phi_wu, g_norm, f_norm;
  std::vector<int> active_b, active_h;
  std::vector<double> lambda_b, lambda_h;
  TrajectoryMetadata metadata;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
};

/// Integrates the interconnection xi' = f(xi, up), up' = g(xi, up) with
/// classical fixed-step RK4; the QP is solved at every stage. On QP
/// infeasibility or non-finite state the partial trajectory is returned with
/// the abort event recorded in the metadata.
inline Trajectory integrate(const ProblemSpec& spec, const HocbfStack& stack,
                            const ControllerParams& params, const Eigen::VectorXd& x0,
                            const Eigen::VectorXd& u0, double T, double dt) {
  validate_params(params);
  if (!(dt > 0.0)) throw ConfigError("integrate: dt must be > 0");
  if (!(T >= dt)) throw ConfigError("integrate: T must be >= dt");
  const long n_steps = std::lround(T / dt);

  Trajectory traj;
  traj.metadata.problem = spec.name;
  traj.metadata.params = params;
  traj.metadata.beta = spec.beta;
  traj.metadata.dt = dt;
  traj.metadata.T = T;
  traj.metadata.x0 = x0;
  traj.metadata.u0 = u0;
  traj.metadata.warnings = spec.warnings;

  MembershipReport start = membership(stack, x0, u0);
  traj.metadata.feasible_start = start.in_intersection;
  if (!start.in_intersection && params.mode == ControllerParams::Mode::hocbf)
    traj.metadata.warnings.push_back(
        "initial condition is outside the forward-invariant set; invariance is not guaranteed");

  Eigen::VectorXd x = x0, u = u0;
  Eigen::VectorXd ss_guess = x0;

  auto record = [&](long k, const FieldEval& fe) {
    traj.times.push_back(double(k) * dt);
    traj.states.push_back(x);
    traj.inputs.push_back(u);
    traj.h.push_back(spec.h.scalar(x));
    traj.b.push_back(spec.b.scalar(u));
    traj.h_levels.push_back(stack.level_values(x, u));
    traj.phi_x.push_back(spec.phi.scalar(x));
    traj.phi_wu.push_back(spec.phi.scalar(fe.x_ss));
    traj.g_norm.push_back(fe.g.norm());
    traj.f_norm.push_back(spec.f(x, u).norm());
    traj.active_b.push_back(fe.qp.active_b ? 1 : 0);
    traj.active_h.push_back(fe.qp.active_h ? 1 : 0);
    traj.lambda_b.push_back(fe.qp.lambda_b);
    traj.lambda_h.push_back(fe.qp.lambda_h);
  };

  for (long k = 0; k <= n_steps; ++k) {
    FieldEval fe;
    try {
      fe = controller_field(spec, stack, params, x, u, &ss_guess);
    } catch (const Error& e) {
      traj.metadata.abort = AbortEvent{double(k) * dt, e.what()};
      break;
    }
    ss_guess = fe.x_ss;
    record(k, fe);
    if (k == n_steps) break;

    // RK4 step; stage 1 reuses the recorded field evaluation.
    Eigen::VectorXd k1x = spec.f(x, u), k1u = fe.g;
    try {
      auto stage = [&](const Eigen::VectorXd& xs, const Eigen::VectorXd& us) {
        FieldEval s = controller_field(spec, stack, params, xs, us, &ss_guess);
        ss_guess = s.x_ss;
        return std::pair{spec.f(xs, us), s.g};
      };
      auto [k2x, k2u] = stage(x + 0.5 * dt * k1x, u + 0.5 * dt * k1u);
      auto [k3x, k3u] = stage(x + 0.5 * dt * k2x, u + 0.5 * dt * k2u);
      auto [k4x, k4u] = stage(x + dt * k3x, u + dt * k3u);
      x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
      u += dt / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    } catch (const Error& e) {
      traj.metadata.abort = AbortEvent{double(k) * dt, e.what()};
      break;
    }
    if (!x.allFinite() || !u.allFinite()) {
      traj.metadata.abort = AbortEvent{double(k + 1) * dt, "non-finite state after step"};
      break;
    }
  }
  return traj;
}

/// Tolerance separating integration error from a genuine safety violation.
inline constexpr double kViolationTol = 1e-6;
/// Excursions below this are reported as hard violations.
inline constexpr double kHardViolationTol = 1e-4;

struct SafetyReport {
  double min_h = 0.0, min_b = 0.0;
  Eigen::VectorXd min_h_levels;  // per level 1..r
  std::optional<double> first_violation_time;
  bool hard_violation = false;
  bool converged = false;
  std::optional<double> final_distance_to_target;
};

inline SafetyReport safety_report(const Trajectory& traj,
                                  std::optional<Eigen::VectorXd> target_x = {}) {
  if (traj.empty()) throw DimensionError("safety_report: empty trajectory");
  SafetyReport rep;
  rep.min_h = traj.h[0];
  rep.min_b = traj.b[0];
  rep.min_h_levels = traj.h_levels[0];
  double worst = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    rep.min_h = std::min(rep.min_h, traj.h[k]);
    rep.min_b = std::min(rep.min_b, traj.b[k]);
    rep.min_h_levels = rep.min_h_levels.cwiseMin(traj.h_levels[k]);
    double m = std::min({traj.h[k], traj.b[k], traj.h_levels[k].minCoeff()});
    worst = std::min(worst, m);
    if (m < -kViolationTol && !rep.first_violation_time)
      rep.first_violation_time = traj.times[k];
  }
  rep.hard_violation = worst < -kHardViolationTol;
  rep.converged = traj.g_norm.back() < 1e-4 && traj.f_norm.back() < 1e-4 &&
                  !traj.metadata.abort.has_value();
  if (target_x) {
    rep.final_distance_to_target = (traj.states.back() - *target_x).norm();
    rep.converged = rep.converged && *rep.final_distance_to_target < 1e-2;
  }
  return rep;
}

/// Maps an initial state to an initial input. The default resolves the
/// steady-state consistent input when one exists and falls back to zero.
using InputRule = std::function<std::optional<Eigen::VectorXd>(const Eigen::VectorXd&)>;

inline InputRule default_input_rule(const ProblemSpec& spec) {
  return [&spec](const Eigen::VectorXd& x0) -> std::optional<Eigen::VectorXd> {
    if (auto u = consistent_input(spec, x0)) return u;
    return Eigen::VectorXd::Zero(spec.input_dim());
  };
}

struct BaselineSearchEntry {
  Eigen::VectorXd x0, u0;
  bool skipped = false;
  std::string note;
  double baseline_min_h = 0.0;
  double hocbf_min_h = 0.0;
};

struct BaselineComparison {
  bool found = false;
  Eigen::VectorXd x0, u0;
  Trajectory baseline, hocbf;
  std::vector<BaselineSearchEntry> log;
};

/// Searches the candidate list for an initial condition where the input-only
/// baseline transiently violates the state constraint (min h < -1e-3) while
/// the barrier-augmented controller keeps min h >= -1e-6 from the same start.
inline BaselineComparison find_baseline_violation(const ProblemSpec& spec, const HocbfStack& stack,
                                                  const ControllerParams& params,
                                                  const std::vector<Eigen::VectorXd>& candidate_x0s,
                                                  double T, double dt) {
  if (candidate_x0s.empty())
    throw DimensionError("find_baseline_violation: empty candidate list");
  BaselineComparison out;
  InputRule rule = default_input_rule(spec);
  for (const auto& x0 : candidate_x0s) {
    BaselineSearchEntry entry;
    entry.x0 = x0;
    auto u0 = rule(x0);
    if (!u0) {
      entry.skipped = true;
      entry.note = "no consistent input";
      out.log.push_back(std::move(entry));
      continue;
    }
    entry.u0 = *u0;
    if (spec.h.scalar(x0) < 0.0 || spec.b.scalar(*u0) < 0.0) {
      entry.skipped = true;
      entry.note = "infeasible start";
      out.log.push_back(std::move(entry));
      continue;
    }
    ControllerParams base = params;
    base.mode = ControllerParams::Mode::input_only;
    Trajectory tb = integrate(spec, stack, base, x0, *u0, T, dt);
    entry.baseline_min_h = safety_report(tb).min_h;
    if (entry.baseline_min_h < -1e-3) {
      ControllerParams safe = params;
      safe.mode = ControllerParams::Mode::hocbf;
      Trajectory ts = integrate(spec, stack, safe, x0, *u0, T, dt);
      entry.hocbf_min_h = safety_report(ts).min_h;
      if (entry.hocbf_min_h >= -1e-6) {
        out.found = true;
        out.x0 = x0;
        out.u0 = *u0;
        out.baseline = std::move(tb);
        out.hocbf = std::move(ts);
        out.log.push_back(std::move(entry));
        break;
      }
    } else {
      entry.note = "baseline stays safe";
    }
    out.log.push_back(std::move(entry));
  }
  return out;
}

struct SweepRun {
  Eigen::VectorXd x0, u0;
  bool skipped = false;
  std::string error;
  std::optional<Trajectory> traj;
  std::optional<SafetyReport> report;
};

/// Independent integrations from a list of initial states; per-run failures
/// are collected, not fatal. Results are ordered by input order.
inline std::vector<SweepRun> sweep(const ProblemSpec& spec, const HocbfStack& stack,
                                   const ControllerParams& params,
                                   const std::vector<Eigen::VectorXd>& x0s, double T, double dt,
                                   InputRule rule = nullptr,
                                   std::optional<Eigen::VectorXd> target_x = {}) {
  if (!rule) rule = default_input_rule(spec);
  std::vector<SweepRun> runs;
  runs.reserve(x0s.size());
  for (const auto& x0 : x0s) {
    SweepRun run;
    run.x0 = x0;
    auto u0 = rule(x0);
    if (!u0) {
      run.skipped = true;
      run.error = "no consistent input";
      runs.push_back(std::move(run));
      continue;
    }
    run.u0 = *u0;
    if (spec.h.scalar(x0) < 0.0 || spec.b.scalar(*u0) < 0.0) {
      run.skipped = true;
      run.error = "infeasible start";
      runs.push_back(std::move(run));
      continue;
    }
    try {
      run.traj = integrate(spec, stack, params, x0, *u0, T, dt);
      run.report = safety_report(*run.traj, target_x);
      if (run.traj->metadata.abort) run.error = run.traj->metadata.abort->reason;
    } catch (const Error& e) {
      run.error = e.what();
    }
    runs.push_back(std::move(run));
  }
  return runs;
}

/// Candidate initial states on a scaled copy of the state-constraint boundary
/// (for the LTI-quadratic family: the ellipse scaled by rho about its center).
inline std::vector<Eigen::VectorXd> boundary_ring_candidates(const ProblemSpec& spec, int count,
                                                             double rho = 0.95) {
  std::vector<Eigen::VectorXd> xs;
  if (spec.lti && spec.state_dim() == 2) {
    const auto& d = *spec.lti;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d.h_shape);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(1e-12);
    Eigen::MatrixXd axes = es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal();
    for (int i = 0; i < count; ++i) {
      double th = 2.0 * std::numbers::pi * double(i) / double(count);
      Eigen::VectorXd dir(2);
      dir << std::cos(th), std::sin(th);
      xs.push_back(d.h_center + rho * std::sqrt(std::max(d.h_level, 0.0)) * (axes * dir));
    }
    return xs;
  }
  // Generic fallback: scale box samples toward the h-interior anchor.
  std::mt19937_64 rng(12345);
  int tries = 0;
  while (int(xs.size()) < count && tries < 10000) {
    ++tries;
    Eigen::VectorXd x = uniform_in(spec.sample_box.x_lo, spec.sample_box.x_hi, rng);
    double hv = spec.h.scalar(x);
    if (hv > 0.0 && hv < 0.2) xs.push_back(x);
  }
  return xs;
}

}  // namespace sgflow
