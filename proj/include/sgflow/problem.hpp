#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "sgflow/derivatives.hpp"
#include "sgflow/smooth_map.hpp"

namespace sgflow {

/// Axis-aligned sampling region in (x, u) space, used by the diagnostic
/// samplers and the offline optimizer.
struct Box {
  Eigen::VectorXd x_lo, x_hi, u_lo, u_hi;
};

/// Data of the LTI-quadratic problem family:
///   f(x,u) = A x + B u
///   phi(x) = (x - t)' W (x - t)
///   h(x)   = level - (x - c)' S (x - c)
///   b(u)   = radius_sq - |u|^2
struct LtiQuadraticData {
  Eigen::MatrixXd A, B;
  Eigen::VectorXd phi_target;
  Eigen::MatrixXd phi_weight;
  Eigen::VectorXd h_center;
  Eigen::MatrixXd h_shape;
  double h_level = 1.0;
  double b_radius_sq = 1.0;
};

/// A feedback-optimization instance: plant f, steady-state objective phi,
/// state constraint h(x) >= 0, input constraint b(u) >= 0, declared relative
/// degree r and barrier gain beta. Immutable in use; cheap to copy.
struct ProblemSpec {
  std::string name;
  SmoothMap f;    // (n, m) -> n
  SmoothMap phi;  // n -> 1
  SmoothMap h;    // n -> 1, state only
  SmoothMap b;    // m -> 1, input only
  int r = 1;
  double beta = 5.0;

  std::optional<LtiQuadraticData> lti;  // set for the LTI-quadratic family
  Box sample_box;
  std::vector<std::string> warnings;

  int state_dim() const { return f.in_x(); }
  int input_dim() const { return f.in_u(); }
};

inline void validate_problem(const ProblemSpec& spec) {
  if (!spec.f.valid() || !spec.phi.valid() || !spec.h.valid() || !spec.b.valid())
    throw ConfigError("problem '" + spec.name + "': missing map");
  if (spec.r < 1) throw ConfigError("problem '" + spec.name + "': r must be >= 1");
  if (spec.r + 1 > kMaxDualDepth)
    throw ConfigError("problem '" + spec.name + "': relative degree exceeds supported maximum " +
                      std::to_string(kMaxDualDepth - 1));
  if (!(spec.beta > 0.0)) throw ConfigError("problem '" + spec.name + "': beta must be > 0");
  const int n = spec.f.in_x(), m = spec.f.in_u();
  if (spec.f.out() != n) throw ConfigError("problem '" + spec.name + "': f must map to the state space");
  if (spec.phi.in_x() != n || spec.phi.in_u() != 0 || spec.phi.out() != 1)
    throw ConfigError("problem '" + spec.name + "': phi must be a scalar map of x");
  if (spec.h.in_x() != n || spec.h.in_u() != 0 || spec.h.out() != 1)
    throw ConfigError("problem '" + spec.name + "': h must be a scalar map of x only");
  if (spec.b.in_x() != 0 || spec.b.in_u() != m || spec.b.out() != 1)
    throw ConfigError("problem '" + spec.name + "': b must be a scalar map of u only");
}

/// Result of solving f(x, u) = 0 for x at fixed u.
struct SteadyStateResult {
  Eigen::VectorXd x_ss;         // the equilibrium w(u)
  Eigen::MatrixXd sensitivity;  // dw/du, n x m
  double residual = 0.0;        // |f(x_ss, u)|
  int iterations = 0;
};

struct NewtonOptions {
  double tol = 1e-10;
  int max_iter = 50;
};

/// Newton iteration on x -> f(x, u); the sensitivity comes from the implicit
/// function theorem, solving (df/dx) dw/du = -df/du at the root.
inline SteadyStateResult steady_state(const ProblemSpec& spec, const Eigen::VectorXd& u,
                                      std::optional<Eigen::VectorXd> guess = {},
                                      NewtonOptions opts = {}) {
  const int n = spec.state_dim();
  if (int(u.size()) != spec.input_dim()) throw DimensionError("steady_state: input size mismatch");
  Eigen::VectorXd x = guess ? *guess : Eigen::VectorXd::Zero(n);
  if (int(x.size()) != n) throw DimensionError("steady_state: guess size mismatch");

  SteadyStateResult res;
  Eigen::VectorXd fval = spec.f(x, u);
  double rnorm = fval.norm();
  int it = 0;
  while (rnorm > opts.tol) {
    if (it >= opts.max_iter)
      throw NonConvergenceError("steady_state: Newton did not converge (residual " +
                                    std::to_string(rnorm) + ")",
                                rnorm);
    auto [jx, ju] = jacobian(spec.f, x, u);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jx);
    if (!lu.isInvertible())
      throw SingularJacobianError("steady_state: singular df/dx during Newton iteration");
    x -= lu.solve(fval);
    fval = spec.f(x, u);
    rnorm = fval.norm();
    ++it;
  }

  auto [jx, ju] = jacobian(spec.f, x, u);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jx);
  if (!lu.isInvertible())
    throw SingularJacobianError("steady_state: singular df/dx at the equilibrium");
  res.x_ss = std::move(x);
  res.sensitivity = lu.solve(-ju);
  res.residual = rnorm;
  res.iterations = it;
  return res;
}

/// Solves f(x0, u) = 0 for u by Gauss-Newton; returns the steady-state
/// consistent input when one exists to tolerance, nullopt otherwise.
inline std::optional<Eigen::VectorXd> consistent_input(const ProblemSpec& spec,
                                                       const Eigen::VectorXd& x0,
                                                       double tol = 1e-9, int max_iter = 50) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(spec.input_dim());
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd fval = spec.f(x0, u);
    if (fval.norm() <= tol) return u;
    Eigen::MatrixXd ju = jacobian(spec.f, x0, u).second;
    Eigen::VectorXd step =
        ju.completeOrthogonalDecomposition().solve(Eigen::VectorXd(-fval));
    if (step.norm() < 1e-15) break;  // stationary but not a root
    u += step;
  }
  if (spec.f(x0, u).norm() <= tol) return u;
  return std::nullopt;
}

/// Builds a ProblemSpec from LTI-quadratic data. Emits a warning when the
/// plant matrix has an eigenvalue with nonnegative real part.
inline ProblemSpec lti_quadratic_problem(std::string name, LtiQuadraticData d, int r, double beta,
                                         std::optional<Box> box = {}) {
  const int n = int(d.A.rows()), m = int(d.B.cols());
  if (d.A.cols() != n || d.B.rows() != n) throw ConfigError("lti problem: A/B dimensions mismatch");
  if (int(d.phi_target.size()) != n || d.phi_weight.rows() != n || d.phi_weight.cols() != n)
    throw ConfigError("lti problem: phi dimensions mismatch");
  if (int(d.h_center.size()) != n || d.h_shape.rows() != n || d.h_shape.cols() != n)
    throw ConfigError("lti problem: h dimensions mismatch");

  ProblemSpec spec;
  spec.name = std::move(name);
  spec.r = r;
  spec.beta = beta;

  const Eigen::MatrixXd A = d.A, B = d.B, W = d.phi_weight, Sh = d.h_shape;
  const Eigen::VectorXd t = d.phi_target, c = d.h_center;
  const double level = d.h_level, rad2 = d.b_radius_sq;

  spec.f = xu_map(n, m, n, [A, B, n, m](auto x, auto u, auto out) {
    using S = std::remove_cvref_t<decltype(out[0])>;
    for (int i = 0; i < n; ++i) {
      S acc(0.0);
      for (int j = 0; j < n; ++j) acc += A(i, j) * x[j];
      for (int k = 0; k < m; ++k) acc += B(i, k) * u[k];
      out[i] = acc;
    }
  });
  spec.phi = state_scalar(n, [W, t, n](auto x) {
    using S = std::remove_cvref_t<decltype(x[0])>;
    S acc(0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) acc += W(i, j) * (x[i] - t[i]) * (x[j] - t[j]);
    return acc;
  });
  spec.h = state_scalar(n, [Sh, c, level, n](auto x) {
    using S = std::remove_cvref_t<decltype(x[0])>;
    S acc(level);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) acc -= Sh(i, j) * (x[i] - c[i]) * (x[j] - c[j]);
    return acc;
  });
  spec.b = input_scalar(m, [rad2, m](auto u) {
    using S = std::remove_cvref_t<decltype(u[0])>;
    S acc(rad2);
    for (int k = 0; k < m; ++k) acc -= u[k] * u[k];
    return acc;
  });
  spec.lti = std::move(d);

  Eigen::EigenSolver<Eigen::MatrixXd> eig(A);
  for (int i = 0; i < n; ++i) {
    if (eig.eigenvalues()[i].real() >= 0.0) {
      spec.warnings.push_back("plant matrix has an eigenvalue with Re >= 0; the steady-state map "
                              "may not be well defined (unique GES equilibrium assumed)");
      break;
    }
  }

  if (box) {
    spec.sample_box = std::move(*box);
  } else {
    // Default region: bounding box of the h sublevel set (when the shape is
    // positive definite along an axis) inflated by 10%, and of the input ball.
    Eigen::VectorXd ext(n);
    for (int i = 0; i < n; ++i) {
      double s = Sh(i, i);
      ext[i] = s > 0.0 ? 1.1 * std::sqrt(std::max(level, 0.0) / s) : 2.0;
    }
    spec.sample_box.x_lo = c - ext;
    spec.sample_box.x_hi = c + ext;
    const double ur = 1.05 * std::sqrt(std::max(rad2, 0.0));
    spec.sample_box.u_lo = Eigen::VectorXd::Constant(m, -ur);
    spec.sample_box.u_hi = Eigen::VectorXd::Constant(m, ur);
  }

  validate_problem(spec);
  return spec;
}

inline std::vector<std::string> builtin_problem_names() {
  return {"paper_lti_r1", "boundary_optimum_lti_r1", "second_order_r2"};
}

/// Built-in problems:
///  - paper_lti_r1: two-state LTI plant with an ellipsoidal state constraint,
///    a disc input constraint and an interior quadratic optimum; r = 1.
///  - boundary_optimum_lti_r1: same plant and constraints with the objective
///    target moved outside the ellipse so the optimizer lands on h = 0.
///  - second_order_r2: oscillatory second-order plant whose state constraint
///    has relative degree 2.
inline ProblemSpec builtin_problem(const std::string& name) {
  if (name == "paper_lti_r1" || name == "boundary_optimum_lti_r1") {
    LtiQuadraticData d;
    d.A = Eigen::MatrixXd{{-1.6, -0.1}, {-1.0, -0.8}};
    d.B = Eigen::MatrixXd::Identity(2, 2);
    d.phi_target = name == "paper_lti_r1" ? Eigen::VectorXd{{1.775, 0.9}} : Eigen::VectorXd{{3.0, 1.5}};
    d.phi_weight = Eigen::MatrixXd::Identity(2, 2);
    d.h_center = Eigen::VectorXd{{0.2, 0.3}};
    d.h_shape = Eigen::MatrixXd{{0.25, 0.0}, {0.0, 1.0}};
    d.h_level = 1.0;
    d.b_radius_sq = 16.0;
    return lti_quadratic_problem(name, std::move(d), 1, 5.0);
  }
  if (name == "second_order_r2") {
    LtiQuadraticData d;
    d.A = Eigen::MatrixXd{{0.0, 1.0}, {-1.0, -1.0}};
    d.B = Eigen::MatrixXd{{0.0}, {1.0}};
    d.phi_target = Eigen::VectorXd{{0.5, 0.0}};
    d.phi_weight = Eigen::MatrixXd::Identity(2, 2);
    d.h_center = Eigen::VectorXd{{0.0, 0.0}};
    d.h_shape = Eigen::MatrixXd{{1.0, 0.0}, {0.0, 0.0}};  // h = 1 - x1^2
    d.h_level = 1.0;
    d.b_radius_sq = 1.0;
    Box box;
    box.x_lo = Eigen::VectorXd{{-1.2, -2.0}};
    box.x_hi = Eigen::VectorXd{{1.2, 2.0}};
    box.u_lo = Eigen::VectorXd{{-1.05}};
    box.u_hi = Eigen::VectorXd{{1.05}};
    return lti_quadratic_problem(name, std::move(d), 2, 5.0, box);
  }
  std::string names;
  for (const auto& s : builtin_problem_names()) names += (names.empty() ? "" : ", ") + s;
  throw UnknownProblemError("unknown problem '" + name + "'; available: " + names);
}

}  // namespace sgflow
