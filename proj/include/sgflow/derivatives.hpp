#pragma once

#include <Eigen/Core>
#include <boost/container/small_vector.hpp>
#include <span>
#include <utility>

#include "sgflow/smooth_map.hpp"

namespace sgflow {

template <class S>
using ScalarBuffer = boost::container::small_vector<S, 8>;

/// Directional derivative of a scalar map in the x slot: returns a dual whose
/// value is m(x, u) and whose dot is (dm/dx)(x, u) . dir. Usable inside
/// evaluation rules at any supported depth, which is how repeated Lie
/// derivatives are formed without symbolic manipulation.
template <class S>
Dual<S> directional_x(const SmoothMap& m, std::span<const S> x, std::span<const S> u,
                      std::span<const S> dir) {
  using D = Dual<S>;
  ScalarBuffer<D> xd(x.size()), ud(u.size());
  for (size_t j = 0; j < x.size(); ++j) xd[j] = D(x[j], dir[j]);
  for (size_t k = 0; k < u.size(); ++k) ud[k] = D(u[k]);
  D y;
  m.eval_into<D>({xd.data(), xd.size()}, {ud.data(), ud.size()}, {&y, 1});
  return y;
}

/// Partial derivative column of a map with respect to x_j (seeded dual pass).
template <class S>
void partial_x(const SmoothMap& m, std::span<const S> x, std::span<const S> u, size_t j,
               std::span<S> col_out) {
  using D = Dual<S>;
  ScalarBuffer<D> xd(x.size()), ud(u.size()), yd(m.out());
  for (size_t i = 0; i < x.size(); ++i) xd[i] = D(x[i], i == j ? S(1.0) : S(0.0));
  for (size_t k = 0; k < u.size(); ++k) ud[k] = D(u[k]);
  m.eval_into<D>({xd.data(), xd.size()}, {ud.data(), ud.size()}, {yd.data(), yd.size()});
  for (int i = 0; i < m.out(); ++i) col_out[i] = yd[i].dot;
}

template <class S>
void partial_u(const SmoothMap& m, std::span<const S> x, std::span<const S> u, size_t j,
               std::span<S> col_out) {
  using D = Dual<S>;
  ScalarBuffer<D> xd(x.size()), ud(u.size()), yd(m.out());
  for (size_t i = 0; i < x.size(); ++i) xd[i] = D(x[i]);
  for (size_t k = 0; k < u.size(); ++k) ud[k] = D(u[k], k == j ? S(1.0) : S(0.0));
  m.eval_into<D>({xd.data(), xd.size()}, {ud.data(), ud.size()}, {yd.data(), yd.size()});
  for (int i = 0; i < m.out(); ++i) col_out[i] = yd[i].dot;
}

/// Exact partial Jacobians (dF/dx, dF/du) at (x, u), one dual pass per input
/// coordinate.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> jacobian(const SmoothMap& m,
                                                            const Eigen::VectorXd& x,
                                                            const Eigen::VectorXd& u) {
  if (int(x.size()) != m.in_x() || int(u.size()) != m.in_u())
    throw DimensionError("jacobian: argument size mismatch");
  Eigen::MatrixXd jx(m.out(), m.in_x()), ju(m.out(), m.in_u());
  std::span<const double> xs{x.data(), size_t(x.size())}, us{u.data(), size_t(u.size())};
  ScalarBuffer<double> col(m.out());
  for (int j = 0; j < m.in_x(); ++j) {
    partial_x<double>(m, xs, us, j, {col.data(), col.size()});
    for (int i = 0; i < m.out(); ++i) jx(i, j) = col[i];
  }
  for (int j = 0; j < m.in_u(); ++j) {
    partial_u<double>(m, xs, us, j, {col.data(), col.size()});
    for (int i = 0; i < m.out(); ++i) ju(i, j) = col[i];
  }
  return {std::move(jx), std::move(ju)};
}

/// Exact gradient of a scalar single-slot map (state-only or input-only).
inline Eigen::VectorXd gradient(const SmoothMap& m, const Eigen::VectorXd& point) {
  if (m.out() != 1) throw DimensionError("gradient: map is not scalar");
  if (m.in_x() > 0 && m.in_u() > 0)
    throw DimensionError("gradient: map takes both x and u, use jacobian");
  const Eigen::VectorXd empty(0);
  auto [jx, ju] = m.in_u() == 0 ? jacobian(m, point, empty) : jacobian(m, empty, point);
  return m.in_u() == 0 ? jx.row(0).transpose() : ju.row(0).transpose();
}

/// Gradient of a scalar (x, u) map with respect to x, as a column vector.
inline Eigen::VectorXd gradient_x(const SmoothMap& m, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& u) {
  if (m.out() != 1) throw DimensionError("gradient_x: map is not scalar");
  return jacobian(m, x, u).first.row(0).transpose();
}

inline Eigen::VectorXd gradient_u(const SmoothMap& m, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& u) {
  if (m.out() != 1) throw DimensionError("gradient_u: map is not scalar");
  return jacobian(m, x, u).second.row(0).transpose();
}

}  // namespace sgflow
