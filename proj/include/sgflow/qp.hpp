#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sgflow/hocbf.hpp"
#include "sgflow/problem.hpp"

namespace sgflow {

/// Gains of the controller QP. mode == input_only drops the barrier row and
/// reproduces the input-constraints-only baseline.
struct ControllerParams {
  double epsilon = 0.1;
  double alpha = 1.0;
  double gamma = 5.0;
  enum class Mode { hocbf, input_only };
  Mode mode = Mode::hocbf;
};

inline void validate_params(const ControllerParams& p) {
  if (!(p.epsilon > 0.0 && p.alpha > 0.0 && p.gamma > 0.0))
    throw ConfigError("controller gains must be strictly positive");
}

/// Data of the controller QP at one (x, u):
///   min_q 1/2 |q + c|^2  s.t.  a_b.q + s_b >= 0,  a_h.q + s_h >= 0
/// with c = eps (dw/du)' grad phi(x), a_b = grad b(u), s_b = alpha b(u),
/// a_h = (dh_r/du)', s_h = dh_r/dx . f + gamma h_r.
struct QPData {
  Eigen::VectorXd c;
  Eigen::VectorXd a_b;
  double s_b = 0.0;
  Eigen::VectorXd a_h;
  double s_h = 0.0;
  bool include_h = true;  // false in input_only mode (row absent, fields zero)
};

struct QPSolution {
  Eigen::VectorXd q;
  double lambda_b = 0.0;
  double lambda_h = 0.0;
  bool active_b = false;
  bool active_h = false;
  double kkt_residual = 0.0;
};

inline QPData build_qp(const ProblemSpec& spec, const HocbfStack& stack,
                       const ControllerParams& params, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& u, const SteadyStateResult& ss) {
  QPData d;
  d.c = params.epsilon * ss.sensitivity.transpose() * gradient(spec.phi, x);
  d.a_b = gradient(spec.b, u);
  d.s_b = params.alpha * spec.b.scalar(u);
  d.include_h = params.mode == ControllerParams::Mode::hocbf;
  if (d.include_h) {
    auto [dx, du] = hr_partials(stack, x, u);
    d.a_h = du.transpose();
    d.s_h = dx.dot(spec.f(x, u)) + params.gamma * stack.value(stack.relative_degree(), x, u);
  } else {
    d.a_h = Eigen::VectorXd::Zero(u.size());
    d.s_h = 0.0;
  }
  return d;
}

inline QPData build_qp(const ProblemSpec& spec, const HocbfStack& stack,
                       const ControllerParams& params, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& u) {
  return build_qp(spec, stack, params, x, u, steady_state(spec, u));
}

namespace detail {

struct QpRow {
  const Eigen::VectorXd* a;
  double s;
  char tag;
};

inline double row_slack(const QpRow& r, const Eigen::VectorXd& q) { return r.a->dot(q) + r.s; }

}  // namespace detail

/// Exact minimizer by enumeration of the four candidate active sets. The QP
/// is strictly convex, so at most one candidate satisfies all KKT conditions;
/// smaller active sets are tried first so boundary-of-complementarity ties
/// report the smaller set.
inline QPSolution solve_qp(const QPData& data) {
  const int m = int(data.c.size());
  const double scale = 1.0 + data.c.norm() + std::abs(data.s_b) + std::abs(data.s_h) +
                       data.a_b.norm() + (data.include_h ? data.a_h.norm() : 0.0);
  const double feas_tol = 1e-11 * scale;

  std::vector<detail::QpRow> rows;
  rows.push_back({&data.a_b, data.s_b, 'b'});
  if (data.include_h) rows.push_back({&data.a_h, data.s_h, 'h'});

  // Degenerate zero rows: vacuous when their offset is nonnegative,
  // unsatisfiable otherwise.
  std::vector<detail::QpRow> active_candidates;
  for (const auto& r : rows) {
    if (r.a->squaredNorm() <= 1e-28 * scale * scale) {
      if (r.s < -feas_tol)
        throw QpInfeasibleError(std::string("solve_qp: zero-gradient constraint row '") + r.tag +
                                    "' with negative offset",
                                r.tag, -r.s);
    } else {
      active_candidates.push_back(r);
    }
  }

  auto feasible = [&](const Eigen::VectorXd& q, double tol) {
    for (const auto& r : active_candidates)
      if (detail::row_slack(r, q) < -tol) return false;
    return true;
  };

  auto finish = [&](Eigen::VectorXd q, double lb, double lh, bool ab, bool ah) {
    QPSolution sol;
    sol.q = std::move(q);
    sol.lambda_b = std::max(lb, 0.0);
    sol.lambda_h = std::max(lh, 0.0);
    sol.active_b = ab;
    sol.active_h = ah;
    Eigen::VectorXd station = sol.q + data.c - sol.lambda_b * data.a_b;
    if (data.include_h) station -= sol.lambda_h * data.a_h;
    double viol = 0.0;
    viol = std::max(viol, -std::min(0.0, data.a_b.dot(sol.q) + data.s_b));
    if (data.include_h) viol = std::max(viol, -std::min(0.0, data.a_h.dot(sol.q) + data.s_h));
    double compl_res = sol.lambda_b * std::abs(data.a_b.dot(sol.q) + data.s_b);
    if (data.include_h)
      compl_res = std::max(compl_res, sol.lambda_h * std::abs(data.a_h.dot(sol.q) + data.s_h));
    sol.kkt_residual = std::max({station.norm(), viol, compl_res});
    return sol;
  };

  // Empty active set: q = -c.
  {
    Eigen::VectorXd q = -data.c;
    if (feasible(q, feas_tol)) return finish(std::move(q), 0.0, 0.0, false, false);
  }

  // Single active row: q = -c + mu a, mu = (a.c - s)/|a|^2, need mu >= 0.
  for (const auto& r : active_candidates) {
    double mu = (r.a->dot(data.c) - r.s) / r.a->squaredNorm();
    if (mu < 0.0) continue;
    Eigen::VectorXd q = -data.c + mu * (*r.a);
    if (!feasible(q, feas_tol)) continue;
    bool is_b = r.tag == 'b';
    return finish(std::move(q), is_b ? mu : 0.0, is_b ? 0.0 : mu, is_b, !is_b);
  }

  // Both rows active: solve the 2x2 Gram system for the multipliers.
  if (active_candidates.size() == 2) {
    const Eigen::VectorXd& ab = *active_candidates[0].a;
    const Eigen::VectorXd& ah = *active_candidates[1].a;
    const double g11 = ab.squaredNorm(), g22 = ah.squaredNorm(), g12 = ab.dot(ah);
    const double det = g11 * g22 - g12 * g12;
    if (det >= 1e-12 * g11 * g22) {
      const double r1 = ab.dot(data.c) - active_candidates[0].s;
      const double r2 = ah.dot(data.c) - active_candidates[1].s;
      const double lb = (g22 * r1 - g12 * r2) / det;
      const double lh = (g11 * r2 - g12 * r1) / det;
      if (lb >= -feas_tol && lh >= -feas_tol)
        return finish(-data.c + lb * ab + lh * ah, lb, lh, true, true);
      // No candidate admits nonnegative multipliers: the constraints exclude
      // each other's feasible halfspace; report the more violated row at the
      // single-row candidates.
    } else {
      // Near-parallel normals. Fall back to the better single-row candidate
      // under a relaxed feasibility tolerance; otherwise the geometry is
      // genuinely degenerate.
      std::optional<QPSolution> best;
      double best_viol = std::numeric_limits<double>::infinity();
      for (const auto& r : active_candidates) {
        double mu = (r.a->dot(data.c) - r.s) / r.a->squaredNorm();
        if (mu < 0.0) continue;
        Eigen::VectorXd q = -data.c + mu * (*r.a);
        double viol = 0.0;
        for (const auto& o : active_candidates)
          viol = std::max(viol, -std::min(0.0, detail::row_slack(o, q)));
        if (viol < best_viol) {
          best_viol = viol;
          bool is_b = r.tag == 'b';
          best = finish(std::move(q), is_b ? mu : 0.0, is_b ? 0.0 : mu, is_b, !is_b);
        }
      }
      if (best && best_viol <= 1e-7 * scale) return *best;
      throw DegenerateGeometryError(
          "solve_qp: both-active Gram system is singular (near-parallel constraint normals)");
    }
  }

  // Nothing accepted: the QP is infeasible. Report the most violated row at
  // the unconstrained minimizer.
  Eigen::VectorXd q = -data.c;
  char worst = 'b';
  double worst_viol = 0.0;
  for (const auto& r : active_candidates) {
    double v = -std::min(0.0, detail::row_slack(r, q));
    if (v > worst_viol) {
      worst_viol = v;
      worst = r.tag;
    }
  }
  throw QpInfeasibleError(std::string("solve_qp: infeasible QP, most violated row '") + worst +
                              "' by " + std::to_string(worst_viol),
                          worst, worst_viol);
}

/// One controller evaluation: steady-state solve, QP assembly, QP solve.
struct FieldEval {
  Eigen::VectorXd g;  // = qp.q, the controller vector field
  QPSolution qp;
  QPData data;
  Eigen::VectorXd x_ss;  // w(u), reusable as the next warm start
};

inline FieldEval controller_field(const ProblemSpec& spec, const HocbfStack& stack,
                                  const ControllerParams& params, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& u,
                                  const Eigen::VectorXd* ss_guess = nullptr) {
  validate_params(params);
  std::optional<Eigen::VectorXd> guess;
  if (ss_guess) guess = *ss_guess;
  SteadyStateResult ss = steady_state(spec, u, guess);
  FieldEval fe;
  fe.data = build_qp(spec, stack, params, x, u, ss);
  fe.qp = solve_qp(fe.data);
  fe.g = fe.qp.q;
  fe.x_ss = std::move(ss.x_ss);
  return fe;
}

}  // namespace sgflow
