#pragma once

#include <Eigen/Core>
#include <limits>
#include <utility>
#include <vector>

#include "sgflow/derivatives.hpp"
#include "sgflow/problem.hpp"
#include "sgflow/sampling.hpp"

namespace sgflow {

namespace detail {

// One recursion level: next(x, u) = (d prev/dx)(x, u) . f(x, u) + beta * prev(x, u).
// Evaluating the new rule at scalar S evaluates `prev` at Dual<S>, which is
// what makes the recursion differentiable at every level.
inline SmoothMap lie_step(const SmoothMap& prev, const SmoothMap& f, double beta) {
  const int n = f.in_x(), m = f.in_u();
  return xu_scalar(n, m, [prev, f, beta, n](auto x, auto u) {
    using S = std::remove_cvref_t<decltype(x[0])>;
    ScalarBuffer<S> fval(n);
    f.eval_into<S>(x, u, {fval.data(), fval.size()});
    Dual<S> p = directional_x<S>(prev, x, u, {fval.data(), fval.size()});
    return p.dot + beta * p.val;
  });
}

}  // namespace detail

/// The barrier recursion h_0 = h, h_i = (d h_{i-1}/dx) . f + beta h_{i-1},
/// together with the plain Lie-derivative ladder used by the relative-degree
/// diagnostics. Immutable after construction.
class HocbfStack {
 public:
  HocbfStack(ProblemSpec spec, std::vector<SmoothMap> levels, std::vector<SmoothMap> lie)
      : spec_(std::move(spec)), levels_(std::move(levels)), lie_(std::move(lie)) {}

  const ProblemSpec& spec() const { return spec_; }
  int relative_degree() const { return spec_.r; }
  double beta() const { return spec_.beta; }

  /// Level i of the recursion, i in [0, r].
  const SmoothMap& level(int i) const { return levels_.at(i); }
  const SmoothMap& top() const { return levels_.back(); }

  /// i-th Lie derivative of h along f (no beta terms), i in [0, r].
  const SmoothMap& lie(int i) const { return lie_.at(i); }

  double value(int i, const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    return levels_.at(i).scalar(x, u);
  }

  /// Values h_1 .. h_r at (x, u).
  Eigen::VectorXd level_values(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    Eigen::VectorXd v(spec_.r);
    for (int i = 1; i <= spec_.r; ++i) v[i - 1] = value(i, x, u);
    return v;
  }

 private:
  ProblemSpec spec_;
  std::vector<SmoothMap> levels_;
  std::vector<SmoothMap> lie_;
};

inline HocbfStack build_stack(const ProblemSpec& spec) {
  validate_problem(spec);
  const int n = spec.state_dim(), m = spec.input_dim();
  // h lifted to the (x, u) signature; the wrapper forwards x only, so level 0
  // is structurally independent of u.
  SmoothMap h_xu = xu_scalar(n, m, [h = spec.h](auto x, auto) {
    using S = std::remove_cvref_t<decltype(x[0])>;
    S y;
    h.eval_into<S>(x, {}, {&y, 1});
    return y;
  });
  std::vector<SmoothMap> levels{h_xu}, lie{h_xu};
  for (int i = 1; i <= spec.r; ++i) {
    levels.push_back(detail::lie_step(levels.back(), spec.f, spec.beta));
    lie.push_back(detail::lie_step(lie.back(), spec.f, 0.0));
  }
  return HocbfStack(spec, std::move(levels), std::move(lie));
}

/// Exact partials (dh_r/dx, dh_r/du) at (x, u), as row vectors.
inline std::pair<Eigen::RowVectorXd, Eigen::RowVectorXd> hr_partials(const HocbfStack& stack,
                                                                     const Eigen::VectorXd& x,
                                                                     const Eigen::VectorXd& u) {
  auto [jx, ju] = jacobian(stack.top(), x, u);
  return {jx.row(0), ju.row(0)};
}

/// Membership of (x, u) in the sets X_i = {h >= 0, b >= 0, h_i >= 0} and
/// their intersection. Strict sign tests on the stored values.
struct MembershipReport {
  Eigen::VectorXd x, u;
  double h = 0.0, b = 0.0;
  Eigen::VectorXd h_levels;     // h_1 .. h_r
  std::vector<bool> in_Xi;      // index i in [0, r]
  bool in_intersection = false;
};

inline MembershipReport membership(const HocbfStack& stack, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& u) {
  MembershipReport rep;
  rep.x = x;
  rep.u = u;
  rep.h = stack.spec().h.scalar(x);
  rep.b = stack.spec().b.scalar(u);
  rep.h_levels = stack.level_values(x, u);
  const int r = stack.relative_degree();
  rep.in_Xi.resize(r + 1);
  bool base = rep.h >= 0.0 && rep.b >= 0.0;
  rep.in_Xi[0] = base;
  rep.in_intersection = base;
  for (int i = 1; i <= r; ++i) {
    rep.in_Xi[i] = base && rep.h_levels[i - 1] >= 0.0;
    rep.in_intersection = rep.in_intersection && rep.in_Xi[i];
  }
  return rep;
}

/// Diagnostics for the declared relative degree: below level r the input must
/// not appear in the Lie derivatives (max |d(L_f^i h)/du| <= 1e-10 over all
/// samples), and on the h_r boundary it must (min norm > 0 over samples with
/// |h_r| <= 1e-3). A spot check with reported coverage, not a proof.
struct RelativeDegreeReport {
  int r = 1;
  std::vector<double> max_du_below;  // index i in [0, r-1]
  int boundary_samples = 0;
  double min_du_at_r = 0.0;
  bool lower_levels_ok = false;
  bool top_level_ok = false;
  bool passed = false;
};

inline RelativeDegreeReport verify_relative_degree(const HocbfStack& stack,
                                                   const std::vector<PointXU>& samples) {
  if (samples.empty()) throw DimensionError("verify_relative_degree: empty sample set");
  const int r = stack.relative_degree();
  RelativeDegreeReport rep;
  rep.r = r;
  rep.max_du_below.assign(r, 0.0);
  rep.min_du_at_r = std::numeric_limits<double>::infinity();
  for (const auto& [x, u] : samples) {
    for (int i = 0; i < r; ++i) {
      double nrm = gradient_u(stack.lie(i), x, u).norm();
      rep.max_du_below[i] = std::max(rep.max_du_below[i], nrm);
    }
    if (std::abs(stack.value(r, x, u)) <= 1e-3) {
      ++rep.boundary_samples;
      rep.min_du_at_r = std::min(rep.min_du_at_r, gradient_u(stack.lie(r), x, u).norm());
    }
  }
  rep.lower_levels_ok = true;
  for (double mx : rep.max_du_below) rep.lower_levels_ok = rep.lower_levels_ok && mx <= 1e-10;
  rep.top_level_ok = rep.boundary_samples > 0 && rep.min_du_at_r > 0.0;
  rep.passed = rep.lower_levels_ok && rep.top_level_ok;
  return rep;
}

/// Samples for verify_relative_degree: bulk box samples plus points biased to
/// the h_r = 0 boundary (kept inside {h >= 0, b >= 0}).
inline std::vector<PointXU> relative_degree_samples(const HocbfStack& stack, const Box& box,
                                                    int bulk_count, int boundary_count,
                                                    std::mt19937_64& rng) {
  auto pts = sample_box(box, bulk_count, rng);
  auto boundary = sample_level_boundary(
      [&](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
        return stack.value(stack.relative_degree(), x, u);
      },
      [&](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
        return stack.spec().h.scalar(x) >= 0.0 && stack.spec().b.scalar(u) >= 0.0;
      },
      box, boundary_count, rng);
  pts.insert(pts.end(), boundary.begin(), boundary.end());
  return pts;
}

}  // namespace sgflow
