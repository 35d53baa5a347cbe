#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sgflow/qp.hpp"
#include "sgflow/sampling.hpp"

namespace sgflow {

namespace detail {

/// Nonnegative least squares over at most a few columns by subset
/// enumeration: solve min |rhs - A lambda| s.t. lambda >= 0 exactly.
inline Eigen::VectorXd nnls_enumerate(const Eigen::MatrixXd& A, const Eigen::VectorXd& rhs) {
  const int k = int(A.cols());
  Eigen::VectorXd best = Eigen::VectorXd::Zero(k);
  double best_res = rhs.norm();
  for (int mask = 1; mask < (1 << k); ++mask) {
    std::vector<int> idx;
    for (int j = 0; j < k; ++j)
      if (mask & (1 << j)) idx.push_back(j);
    Eigen::MatrixXd As(A.rows(), idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) As.col(j) = A.col(idx[j]);
    Eigen::VectorXd ls = As.completeOrthogonalDecomposition().solve(rhs);
    if ((ls.array() < -1e-12).any()) continue;
    double res = (rhs - As * ls).norm();
    if (res < best_res - 1e-15) {
      best_res = res;
      best.setZero();
      for (std::size_t j = 0; j < idx.size(); ++j) best[idx[j]] = std::max(ls[j], 0.0);
    }
  }
  return best;
}

}  // namespace detail

/// KKT residuals of the steady-state problem at (x, u), with the state
/// multiplier eliminated through the reduced stationarity condition
///   (dw/du)' grad phi = lambda_h (dw/du)' grad h + lambda_b grad b.
/// Reports, never throws.
struct KKTReport {
  Eigen::VectorXd x, u;
  double lambda_h = 0.0, lambda_b = 0.0;
  Eigen::VectorXd mu;
  double stationarity_residual = 0.0;
  double complementarity_residual = 0.0;
  double steady_state_residual = 0.0;
  bool h_active = false, b_active = false;
  bool is_critical = false;
  std::string note;
};

inline constexpr double kActiveTol = 1e-8;

inline KKTReport kkt_steady_state(const ProblemSpec& spec, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& u) {
  KKTReport rep;
  rep.x = x;
  rep.u = u;
  SteadyStateResult ss;
  try {
    ss = steady_state(spec, u, x);
  } catch (const Error& e) {
    rep.steady_state_residual = std::numeric_limits<double>::infinity();
    rep.note = std::string("steady-state solve failed: ") + e.what();
    return rep;
  }
  rep.steady_state_residual = (x - ss.x_ss).norm();

  const Eigen::VectorXd gphi = gradient(spec.phi, x);
  const Eigen::VectorXd gh = gradient(spec.h, x);
  const Eigen::VectorXd gb = gradient(spec.b, u);
  const double hv = spec.h.scalar(x), bv = spec.b.scalar(u);
  rep.h_active = hv <= kActiveTol;
  rep.b_active = bv <= kActiveTol;

  const Eigen::VectorXd lhs = ss.sensitivity.transpose() * gphi;
  std::vector<std::pair<char, Eigen::VectorXd>> cols;
  if (rep.h_active) cols.emplace_back('h', ss.sensitivity.transpose() * gh);
  if (rep.b_active) cols.emplace_back('b', gb);

  if (cols.empty()) {
    rep.stationarity_residual = lhs.norm();
  } else {
    Eigen::MatrixXd A(lhs.size(), cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) A.col(j) = cols[j].second;
    Eigen::VectorXd lam = detail::nnls_enumerate(A, lhs);
    rep.stationarity_residual = (lhs - A * lam).norm();
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (cols[j].first == 'h') rep.lambda_h = lam[j];
      if (cols[j].first == 'b') rep.lambda_b = lam[j];
    }
  }
  rep.complementarity_residual =
      std::max(rep.lambda_h * std::abs(hv), rep.lambda_b * std::abs(bv));
  rep.mu = -gphi + rep.lambda_h * gh;
  rep.is_critical = rep.stationarity_residual <= 1e-6 && rep.complementarity_residual <= 1e-6 &&
                    rep.steady_state_residual <= 1e-6 && rep.lambda_h >= -1e-10 &&
                    rep.lambda_b >= -1e-10;
  return rep;
}

enum class ConditionStatus { holds, fails, inconclusive };

/// Rayleigh-quotient eigen-alignment test. Alignment within 1e-6 (relative)
/// counts as holding, within 1e-4 as inconclusive, otherwise failing;
/// eigenvector membership is measure-zero, so borderline cases are reported
/// rather than forced to a boolean.
struct AlignmentResult {
  ConditionStatus status = ConditionStatus::fails;
  std::optional<double> eigenvalue;  // present when aligned
  bool sign_ok = false;              // e^r < 0
  double relative_residual = 0.0;
};

namespace detail {

inline AlignmentResult eigen_alignment(const Eigen::MatrixXd& M, const Eigen::MatrixXd& V, int r) {
  AlignmentResult res;
  const double vn2 = V.squaredNorm();
  if (vn2 <= 0.0) return res;
  const Eigen::MatrixXd MV = M * V;
  const double e = (MV.array() * V.array()).sum() / vn2;
  res.relative_residual = (MV - e * V).norm() / std::sqrt(vn2);
  if (res.relative_residual <= 1e-6) {
    res.status = ConditionStatus::holds;
    res.eigenvalue = e;
    res.sign_ok = std::pow(e, r) < 0.0;
  } else if (res.relative_residual <= 1e-4) {
    res.status = ConditionStatus::inconclusive;
  }
  return res;
}

/// Max-margin direction for up to two strict rows a_i.q + c_i > 0 over the
/// box |q|_inf <= 1. Exact via enumeration of the dual weight's breakpoints.
struct MaxMargin {
  Eigen::VectorXd q;
  double margin = -std::numeric_limits<double>::infinity();
};

inline MaxMargin max_margin_box(const std::vector<std::pair<Eigen::VectorXd, double>>& rows) {
  MaxMargin out;
  if (rows.empty()) return out;
  const int m = int(rows[0].first.size());
  auto eval_min = [&](const Eigen::VectorXd& q) {
    double v = std::numeric_limits<double>::infinity();
    for (const auto& [a, c] : rows) v = std::min(v, a.dot(q) + c);
    return v;
  };
  auto sign_vec = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd q(m);
    for (int i = 0; i < m; ++i) q[i] = v[i] > 0.0 ? 1.0 : (v[i] < 0.0 ? -1.0 : 0.0);
    return q;
  };

  std::vector<double> mus{0.0, 1.0};
  if (rows.size() == 2) {
    const auto& a1 = rows[0].first;
    const auto& a2 = rows[1].first;
    std::vector<double> brk;
    for (int i = 0; i < m; ++i) {
      double den = a1[i] - a2[i];
      if (std::abs(den) > 1e-300) {
        double mu = -a2[i] / den;
        if (mu > 0.0 && mu < 1.0) brk.push_back(mu);
      }
    }
    std::sort(brk.begin(), brk.end());
    std::vector<double> grid{0.0};
    grid.insert(grid.end(), brk.begin(), brk.end());
    grid.push_back(1.0);
    mus.clear();
    for (std::size_t i = 0; i < grid.size(); ++i) {
      mus.push_back(grid[i]);
      if (i + 1 < grid.size()) mus.push_back(0.5 * (grid[i] + grid[i + 1]));
    }
  }
  for (double mu : mus) {
    Eigen::VectorXd v = rows.size() == 2
                            ? Eigen::VectorXd(mu * rows[0].first + (1.0 - mu) * rows[1].first)
                            : rows[0].first;
    Eigen::VectorXd q = sign_vec(v);
    double val = eval_min(q);
    if (val > out.margin) {
      out.margin = val;
      out.q = q;
    }
  }
  return out;
}

}  // namespace detail

/// Conditions under which critical points of the steady-state problem and
/// closed-loop equilibria coincide: an interior state constraint, or an
/// eigenvector alignment of grad h (right) or the steady-state sensitivity
/// (left) with df/dx whose eigenvalue satisfies e^r < 0; plus a constraint-
/// qualification spot check.
struct EquivalenceConditionsReport {
  bool interior = false;                  // h(x) > 1e-8
  AlignmentResult state_grad_alignment;   // grad h as right eigenvector
  AlignmentResult sensitivity_alignment;  // (dw/du)' as left eigenvector
  bool cq_ok = false;
  bool steady = false;  // |f(x,u)| <= 1e-8; the test is advisory otherwise
  bool any_condition = false;
};

inline EquivalenceConditionsReport equivalence_conditions(const ProblemSpec& spec,
                                                          const HocbfStack& stack,
                                                          const Eigen::VectorXd& x,
                                                          const Eigen::VectorXd& u) {
  EquivalenceConditionsReport rep;
  rep.steady = spec.f(x, u).norm() <= 1e-8;
  rep.interior = spec.h.scalar(x) > 1e-8;

  const Eigen::MatrixXd M = jacobian(spec.f, x, u).first;
  rep.state_grad_alignment = detail::eigen_alignment(M, gradient(spec.h, x), spec.r);

  try {
    SteadyStateResult ss = steady_state(spec, u, x);
    // (dw/du)' M = e (dw/du)'  <=>  M' (dw/du) = e (dw/du)
    rep.sensitivity_alignment =
        detail::eigen_alignment(M.transpose(), ss.sensitivity, spec.r);
  } catch (const Error&) {
    rep.sensitivity_alignment.status = ConditionStatus::inconclusive;
  }

  // MFCQ spot check for the steady-state problem (reduced to u) and the
  // controller QP: the active rows must admit a strictly improving direction.
  rep.cq_ok = true;
  {
    std::vector<std::pair<Eigen::VectorXd, double>> rows;
    const double hv = spec.h.scalar(x), bv = spec.b.scalar(u);
    try {
      SteadyStateResult ss = steady_state(spec, u, x);
      if (hv <= kActiveTol)
        rows.emplace_back(ss.sensitivity.transpose() * gradient(spec.h, x), 0.0);
    } catch (const Error&) {
    }
    if (bv <= kActiveTol) rows.emplace_back(gradient(spec.b, u), 0.0);
    auto [dx, du] = hr_partials(stack, x, u);
    if (std::abs(stack.value(spec.r, x, u)) <= kActiveTol)
      rows.emplace_back(du.transpose(), 0.0);
    if (!rows.empty()) rep.cq_ok = detail::max_margin_box(rows).margin > 0.0;
  }

  rep.any_condition =
      rep.interior ||
      (rep.state_grad_alignment.status == ConditionStatus::holds &&
       rep.state_grad_alignment.sign_ok) ||
      (rep.sensitivity_alignment.status == ConditionStatus::holds &&
       rep.sensitivity_alignment.sign_ok);
  return rep;
}

/// A point is an equilibrium of the closed loop iff the plant and the
/// controller field both vanish.
struct EquilibriumCheck {
  bool is_equilibrium = false;
  double f_residual = 0.0;
  double g_norm = 0.0;
};

inline EquilibriumCheck equilibrium_check(const ProblemSpec& spec, const HocbfStack& stack,
                                          const ControllerParams& params, const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& u) {
  EquilibriumCheck c;
  c.f_residual = spec.f(x, u).norm();
  c.g_norm = controller_field(spec, stack, params, x, u).g.norm();
  c.is_equilibrium = c.f_residual <= 1e-8 && c.g_norm <= 1e-8;
  return c;
}

/// Pointwise feasibility certificate: a direction q with positive margin for
/// the strict inequalities that apply on (near-)active rows,
///   b row:   grad b(u) . q > 0           when |b(u)|   <= active_tol
///   h_r row: dh_r/du . q + dh_r/dx . f > 0  when |h_r| <= active_tol
/// solved as a max-margin problem over |q|_inf <= 1. An absent certificate is
/// a reportable hypothesis failure, not an error.
struct FeasibilityCertificate {
  Eigen::VectorXd x, u;
  std::optional<Eigen::VectorXd> q_cert;
  std::optional<double> b_margin, h_margin;
  bool certified = false;
};

inline FeasibilityCertificate feasibility_certificate(const ProblemSpec& spec,
                                                      const HocbfStack& stack,
                                                      const Eigen::VectorXd& x,
                                                      const Eigen::VectorXd& u,
                                                      double active_tol = 1e-3) {
  FeasibilityCertificate cert;
  cert.x = x;
  cert.u = u;
  const double bv = spec.b.scalar(u);
  const double hrv = stack.value(spec.r, x, u);

  std::vector<std::pair<Eigen::VectorXd, double>> rows;
  bool b_applies = std::abs(bv) <= active_tol;
  bool h_applies = std::abs(hrv) <= active_tol;
  if (b_applies) rows.emplace_back(gradient(spec.b, u), 0.0);
  if (h_applies) {
    auto [dx, du] = hr_partials(stack, x, u);
    rows.emplace_back(du.transpose(), dx.dot(spec.f(x, u)));
  }
  if (rows.empty()) {
    cert.certified = true;
    cert.q_cert = Eigen::VectorXd::Zero(spec.input_dim());
    return cert;
  }
  auto mm = detail::max_margin_box(rows);
  cert.certified = mm.margin > 0.0;
  if (cert.certified) cert.q_cert = mm.q;
  std::size_t idx = 0;
  if (b_applies) cert.b_margin = rows[idx++].first.dot(mm.q);
  if (h_applies) cert.h_margin = rows[idx].first.dot(mm.q) + rows[idx].second;
  return cert;
}

/// Normalized inner product of the two constraint normals on the double
/// boundary b = 0, h_r = 0; linear independence "in a non-vanishing fashion"
/// holds when the maximum stays below c < 1.
struct CrcqReport {
  int sample_count = 0;
  double max_ratio = 0.0;
  double threshold = 0.99;
  bool conclusive = false;
  bool passed = false;
};

inline CrcqReport crcq_sufficient_check(const ProblemSpec& spec, const HocbfStack& stack,
                                        const std::vector<PointXU>& samples, double c = 0.99) {
  CrcqReport rep;
  rep.threshold = c;
  for (const auto& [x, u] : samples) {
    if (std::abs(spec.b.scalar(u)) > 1e-3 || std::abs(stack.value(spec.r, x, u)) > 1e-3) continue;
    Eigen::VectorXd gb = gradient(spec.b, u);
    Eigen::VectorXd ah = hr_partials(stack, x, u).second.transpose();
    double den = gb.norm() * ah.norm();
    if (den <= 0.0) {
      rep.max_ratio = std::max(rep.max_ratio, 1.0);
      ++rep.sample_count;
      continue;
    }
    rep.max_ratio = std::max(rep.max_ratio, std::abs(gb.dot(ah)) / den);
    ++rep.sample_count;
  }
  rep.conclusive = rep.sample_count > 0;
  rep.passed = rep.conclusive && rep.max_ratio <= c;
  return rep;
}

/// Samples points near the double boundary b = 0 and h_r = 0: first lands on
/// b = 0 along random input rays, then root-finds h_r = 0 over state rays.
inline std::vector<PointXU> sample_double_boundary(const ProblemSpec& spec,
                                                   const HocbfStack& stack, const Box& box,
                                                   int count, std::mt19937_64& rng,
                                                   int max_draws = 20000) {
  // bisect value(p(t)) = 0 along the segment between two draws; returns the
  // near-root point when found within tolerance
  auto bisect = [](auto value, Eigen::VectorXd a, Eigen::VectorXd b,
                   double tol) -> std::optional<Eigen::VectorXd> {
    double va = value(a), vb = value(b);
    if (!(va * vb < 0.0)) return std::nullopt;
    Eigen::VectorXd mid = a;
    double vm = va;
    for (int it = 0; it < 80 && std::abs(vm) > tol; ++it) {
      mid = 0.5 * (a + b);
      vm = value(mid);
      if (va * vm <= 0.0) b = mid; else { a = mid; va = vm; }
    }
    if (std::abs(vm) > tol) return std::nullopt;
    return mid;
  };

  std::vector<PointXU> pts;
  for (int draws = 0; int(pts.size()) < count && draws < max_draws; ++draws) {
    auto u = bisect([&](const Eigen::VectorXd& uu) { return spec.b.scalar(uu); },
                    uniform_in(box.u_lo, box.u_hi, rng), uniform_in(box.u_lo, box.u_hi, rng),
                    1e-5);
    if (!u) continue;
    auto x = bisect([&](const Eigen::VectorXd& xx) { return stack.value(spec.r, xx, *u); },
                    uniform_in(box.x_lo, box.x_hi, rng), uniform_in(box.x_lo, box.x_hi, rng),
                    1e-5);
    if (!x) continue;
    if (spec.h.scalar(*x) < 0.0) continue;
    pts.emplace_back(std::move(*x), std::move(*u));
  }
  return pts;
}

/// Interior-rewarding regularization of the objective:
///   phi_new(x) = phi(x) + p (eps_reg - h(x))^2.
/// The added term pulls the optimizer toward the h = eps_reg level set, so a
/// boundary optimizer moves strictly inside at arbitrarily small
/// suboptimality for suitable (p, eps_reg). All other problem data is shared.
inline ProblemSpec regularize(const ProblemSpec& spec, double p, double eps_reg) {
  if (!(p > 0.0) || !(eps_reg > 0.0)) throw ConfigError("regularize: p and eps_reg must be > 0");
  ProblemSpec out = spec;
  out.name = spec.name + "_regularized";
  const int n = spec.state_dim();
  out.phi = state_scalar(n, [phi = spec.phi, h = spec.h, p, eps_reg](auto x) {
    using S = std::remove_cvref_t<decltype(x[0])>;
    S pv, hv;
    phi.eval_into<S>(x, {}, {&pv, 1});
    h.eval_into<S>(x, {}, {&hv, 1});
    S d = eps_reg - hv;
    return pv + p * d * d;
  });
  return out;
}

struct OptimizeSettings {
  int starts = 16;
  int max_iters = 3000;
  std::uint64_t seed = 1;
  std::optional<Box> box;  // defaults to the problem's sample box
};

struct OptimizeResult {
  Eigen::VectorXd x, u;
  double objective = 0.0;
  bool feasible = false;
  KKTReport kkt;
};

namespace detail {

// Escalated-penalty gradient descent on u -> phi(w(u)) with spectral step
// initialization and Armijo backtracking.
inline Eigen::VectorXd penalty_descent(const ProblemSpec& spec, Eigen::VectorXd u, double rho,
                                       int iters) {
  auto eval = [&](const Eigen::VectorXd& uu, Eigen::VectorXd* grad) -> double {
    SteadyStateResult ss = steady_state(spec, uu);
    double f = spec.phi.scalar(ss.x_ss);
    double hv = spec.h.scalar(ss.x_ss), bv = spec.b.scalar(uu);
    double vh = std::min(hv, 0.0), vb = std::min(bv, 0.0);
    if (grad) {
      *grad = ss.sensitivity.transpose() * gradient(spec.phi, ss.x_ss);
      if (vh < 0.0) *grad += rho * 2.0 * vh * (ss.sensitivity.transpose() * gradient(spec.h, ss.x_ss));
      if (vb < 0.0) *grad += rho * 2.0 * vb * gradient(spec.b, uu);
    }
    return f + rho * (vh * vh + vb * vb);
  };
  Eigen::VectorXd g;
  double fval = eval(u, &g);
  double step = 1.0 / (1.0 + g.norm());
  Eigen::VectorXd u_prev = u, g_prev = g;
  for (int it = 0; it < iters; ++it) {
    if (g.norm() <= 1e-12 * (1.0 + std::abs(fval))) break;
    double t = step;
    Eigen::VectorXd u_try;
    double f_try = 0.0;
    int bt = 0;
    for (; bt < 60; ++bt) {
      u_try = u - t * g;
      f_try = eval(u_try, nullptr);
      if (f_try <= fval - 0.25 * t * g.squaredNorm()) break;
      t *= 0.5;
    }
    if (bt == 60) break;
    Eigen::VectorXd g_try;
    eval(u_try, &g_try);
    // Barzilai-Borwein step for the next iteration
    Eigen::VectorXd s = u_try - u, y = g_try - g;
    double sy = s.dot(y);
    step = sy > 1e-300 ? std::min(std::max(s.squaredNorm() / sy, 1e-12), 1e6) : 2.0 * t;
    u = std::move(u_try);
    g = std::move(g_try);
    fval = f_try;
  }
  return u;
}

}  // namespace detail

/// Oracle for the steady-state problem: multistart penalty descent on the
/// input-space reduction phi(w(u)) subject to b(u) >= 0 and h(w(u)) >= 0.
/// Deterministic best-of reduction, ties broken lexicographically in u.
inline OptimizeResult offline_optimize(const ProblemSpec& spec, OptimizeSettings settings = {}) {
  const Box& box = settings.box ? *settings.box : spec.sample_box;
  std::mt19937_64 rng(settings.seed);

  std::vector<Eigen::VectorXd> starts;
  starts.push_back(Eigen::VectorXd::Zero(spec.input_dim()));
  // The input that holds the objective's target as an equilibrium is an
  // excellent start when it exists.
  if (spec.lti) {
    if (auto u0 = consistent_input(spec, spec.lti->phi_target)) starts.push_back(*u0);
  }
  for (int i = int(starts.size()); i < settings.starts; ++i)
    starts.push_back(uniform_in(box.u_lo, box.u_hi, rng));

  std::optional<OptimizeResult> best;
  for (const auto& s : starts) {
    Eigen::VectorXd u = s;
    try {
      u = detail::penalty_descent(spec, u, 1e2, settings.max_iters);
      for (double rho : {1e3, 1e4, 1e6, 1e8}) u = detail::penalty_descent(spec, u, rho, 300);
      SteadyStateResult ss = steady_state(spec, u);
      OptimizeResult cand;
      cand.u = u;
      cand.x = ss.x_ss;
      cand.objective = spec.phi.scalar(ss.x_ss);
      cand.feasible = spec.h.scalar(ss.x_ss) >= -1e-7 && spec.b.scalar(u) >= -1e-7;
      if (!cand.feasible) continue;
      bool better = !best || cand.objective < best->objective - 1e-12;
      if (!better && best && std::abs(cand.objective - best->objective) <= 1e-12) {
        // lexicographic tie-break
        for (int i = 0; i < cand.u.size(); ++i) {
          if (cand.u[i] < best->u[i] - 1e-12) { better = true; break; }
          if (cand.u[i] > best->u[i] + 1e-12) break;
        }
      }
      if (better) best = std::move(cand);
    } catch (const Error&) {
      continue;  // this start failed; others may succeed
    }
  }
  if (!best) throw NonConvergenceError("offline_optimize: no feasible start converged", 0.0);
  best->kkt = kkt_steady_state(spec, best->x, best->u);
  return *best;
}

/// One cell of the regularization sweep.
struct RegularizationPoint {
  double p = 0.0, eps_reg = 0.0;
  Eigen::VectorXd x, u;
  double h_value = 0.0;
  double suboptimality = 0.0;  // |phi(x') - phi(x*)| in the original objective
};

struct RegularizationSweep {
  Eigen::VectorXd x_star, u_star;  // optimizer of the unregularized problem
  double phi_star = 0.0;
  std::vector<RegularizationPoint> grid;
  std::vector<RegularizationPoint> pareto;  // max h for given suboptimality
  std::optional<RegularizationPoint> first_achieving;
};

/// Sweeps the (p, eps_reg) grid, solving the regularized problem in each
/// cell, and reports the first cell with an interior optimizer within the
/// requested suboptimality delta.
inline RegularizationSweep regularization_sweep(const ProblemSpec& spec, double delta,
                                                std::vector<double> p_grid = {},
                                                std::vector<double> eps_grid = {},
                                                OptimizeSettings settings = {}) {
  if (p_grid.empty()) p_grid = {1e-2, 1e-1, 1.0, 1e1, 1e2};
  if (eps_grid.empty()) eps_grid = {1e-4, 1e-3, 1e-2, 1e-1};
  RegularizationSweep sweep;
  OptimizeResult base = offline_optimize(spec, settings);
  sweep.x_star = base.x;
  sweep.u_star = base.u;
  sweep.phi_star = base.objective;
  for (double p : p_grid) {
    for (double eps : eps_grid) {
      ProblemSpec reg = regularize(spec, p, eps);
      RegularizationPoint pt;
      pt.p = p;
      pt.eps_reg = eps;
      try {
        OptimizeResult res = offline_optimize(reg, settings);
        pt.x = res.x;
        pt.u = res.u;
        pt.h_value = spec.h.scalar(res.x);
        pt.suboptimality = std::abs(spec.phi.scalar(res.x) - sweep.phi_star);
      } catch (const Error&) {
        continue;
      }
      sweep.grid.push_back(pt);
      if (!sweep.first_achieving && pt.h_value > 0.0 && pt.suboptimality < delta)
        sweep.first_achieving = pt;
    }
  }
  // Pareto set: keep points not dominated in (higher h, lower suboptimality).
  for (const auto& a : sweep.grid) {
    bool dominated = false;
    for (const auto& b : sweep.grid) {
      if (b.h_value >= a.h_value && b.suboptimality <= a.suboptimality &&
          (b.h_value > a.h_value || b.suboptimality < a.suboptimality)) {
        dominated = true;
        break;
      }
    }
    if (!dominated) sweep.pareto.push_back(a);
  }
  return sweep;
}

}  // namespace sgflow
