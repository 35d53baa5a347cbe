// Test-side oracles, independent of the library's derivative and QP paths:
// central finite differences, brute-force QP minimization, and a dense
// parameterization of the ellipse boundary for the planar problems.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include <sgflow/problem.hpp>
#include <sgflow/qp.hpp>
#include <sgflow/smooth_map.hpp>

namespace oracles {

/// Central finite-difference Jacobians (step 1e-6), evaluating the map only
/// through its plain-double path.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> fd_jacobian(const sgflow::SmoothMap& m,
                                                               const Eigen::VectorXd& x,
                                                               const Eigen::VectorXd& u,
                                                               double step = 1e-6) {
  Eigen::MatrixXd jx(m.out(), m.in_x()), ju(m.out(), m.in_u());
  for (int j = 0; j < m.in_x(); ++j) {
    Eigen::VectorXd xp = x, xm = x;
    xp[j] += step;
    xm[j] -= step;
    jx.col(j) = (m(xp, u) - m(xm, u)) / (2.0 * step);
  }
  for (int j = 0; j < m.in_u(); ++j) {
    Eigen::VectorXd up = u, um = u;
    up[j] += step;
    um[j] -= step;
    ju.col(j) = (m(x, up) - m(x, um)) / (2.0 * step);
  }
  return {jx, ju};
}

inline Eigen::VectorXd fd_gradient(const sgflow::SmoothMap& m, const Eigen::VectorXd& point,
                                   double step = 1e-6) {
  const Eigen::VectorXd empty(0);
  auto [jx, ju] = m.in_u() == 0 ? fd_jacobian(m, point, empty, step)
                                : fd_jacobian(m, empty, point, step);
  return m.in_u() == 0 ? Eigen::VectorXd(jx.row(0).transpose())
                       : Eigen::VectorXd(ju.row(0).transpose());
}

/// Brute-force oracle for m = 2 controller QPs: coarse grid over
/// q in [-10, 10]^2, refined by projecting the unconstrained optimum onto the
/// active constraint lines and their intersection. Returns the best feasible
/// objective value, or nullopt when the grid finds no feasible point.
inline std::optional<double> qp_objective_oracle(const sgflow::QPData& d) {
  auto objective = [&](const Eigen::VectorXd& q) { return 0.5 * (q + d.c).squaredNorm(); };
  auto feasible = [&](const Eigen::VectorXd& q) {
    if (d.a_b.dot(q) + d.s_b < -1e-9) return false;
    if (d.include_h && d.a_h.dot(q) + d.s_h < -1e-9) return false;
    return true;
  };

  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd q(2);
  for (double q1 = -10.0; q1 <= 10.0 + 1e-12; q1 += 0.1) {
    for (double q2 = -10.0; q2 <= 10.0 + 1e-12; q2 += 0.1) {
      q << q1, q2;
      if (feasible(q)) best = std::min(best, objective(q));
    }
  }
  if (!std::isfinite(best)) return std::nullopt;

  std::vector<Eigen::VectorXd> candidates;
  candidates.push_back(-d.c);
  auto project_line = [&](const Eigen::VectorXd& a, double s) {
    // projection of -c onto {q : a.q + s = 0}
    double denom = a.squaredNorm();
    if (denom < 1e-30) return;
    candidates.push_back(-d.c - (a.dot(-d.c) + s) / denom * a);
  };
  project_line(d.a_b, d.s_b);
  if (d.include_h) {
    project_line(d.a_h, d.s_h);
    Eigen::Matrix2d A;
    A << d.a_b(0), d.a_b(1), d.a_h(0), d.a_h(1);
    if (std::abs(A.determinant()) > 1e-12) {
      Eigen::Vector2d rhs(-d.s_b, -d.s_h);
      candidates.push_back(A.colPivHouseholderQr().solve(rhs));
    }
  }
  for (const auto& cand : candidates)
    if (feasible(cand)) best = std::min(best, objective(cand));
  return best;
}

/// Dense parameterization of the state-constraint boundary for the planar
/// LTI-quadratic problems, filtered by input feasibility: the best feasible
/// boundary point of the steady-state problem.
struct BoundaryOptimum {
  Eigen::VectorXd x, u;
  double objective = std::numeric_limits<double>::infinity();
};

inline BoundaryOptimum dense_boundary_optimum(const sgflow::ProblemSpec& spec,
                                              int samples = 2000000) {
  const auto& d = *spec.lti;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d.h_shape);
  Eigen::MatrixXd axes =
      es.eigenvectors() * es.eigenvalues().cwiseMax(1e-12).cwiseSqrt().cwiseInverse().asDiagonal();
  BoundaryOptimum best;
  for (int i = 0; i < samples; ++i) {
    double th = 2.0 * std::numbers::pi * double(i) / double(samples);
    Eigen::VectorXd dir(2);
    dir << std::cos(th), std::sin(th);
    Eigen::VectorXd x = d.h_center + std::sqrt(d.h_level) * (axes * dir);
    // steady-state consistent input: B u = -A x
    Eigen::VectorXd u = d.B.colPivHouseholderQr().solve(-d.A * x);
    if ((d.B * u + d.A * x).norm() > 1e-9) continue;
    if (spec.b.scalar(u) < 0.0) continue;
    double phi = spec.phi.scalar(x);
    if (phi < best.objective) {
      best.objective = phi;
      best.x = x;
      best.u = u;
    }
  }
  return best;
}

}  // namespace oracles
