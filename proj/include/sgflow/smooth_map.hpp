#pragma once

#include <Eigen/Core>
#include <memory>
#include <span>
#include <utility>

#include "sgflow/dual.hpp"
#include "sgflow/errors.hpp"

namespace sgflow {

/// Highest derivative-nesting depth the erased evaluation interface exposes.
/// Evaluating partials of the level-r barrier function needs depth r + 1, so
/// this bounds the usable relative degree at kMaxDualDepth - 1.
inline constexpr int kMaxDualDepth = 6;

namespace detail {

template <int K>
struct EvalLayer {
  using Scalar = NestedDual<K>;
  virtual void eval_layer(std::span<const Scalar> x, std::span<const Scalar> u,
                          std::span<Scalar> out) const = 0;

 protected:
  ~EvalLayer() = default;
};

template <class Seq>
struct EvalInterfaceOf;
template <std::size_t... K>
struct EvalInterfaceOf<std::index_sequence<K...>> : EvalLayer<int(K)>... {
  virtual ~EvalInterfaceOf() = default;
};
using EvalInterface = EvalInterfaceOf<std::make_index_sequence<std::size_t(kMaxDualDepth) + 1>>;

// Instantiates one generic evaluation rule at every supported scalar depth.
template <class F, int K>
struct EvalModel : EvalModel<F, K - 1> {
  using EvalModel<F, K - 1>::EvalModel;
  using Scalar = NestedDual<K>;
  void eval_layer(std::span<const Scalar> x, std::span<const Scalar> u,
                  std::span<Scalar> out) const override {
    this->rule(x, u, out);
  }
};
template <class F>
struct EvalModel<F, -1> : EvalInterface {
  explicit EvalModel(F f) : rule(std::move(f)) {}
  F rule;
};

}  // namespace detail

/// A smooth vector-valued map of (x, u) with an evaluation rule that is
/// generic over the scalar type: the same rule runs on plain doubles and on
/// nested dual numbers, which makes every SmoothMap exactly differentiable
/// and closed under repeated differentiation (up to kMaxDualDepth).
///
/// Maps are immutable once constructed and cheap to copy (shared rule).
class SmoothMap {
 public:
  SmoothMap() = default;

  /// `rule` must be callable as rule(span<const S> x, span<const S> u, span<S> out)
  /// for any supported scalar S.
  template <class F>
  SmoothMap(int nx, int nu, int nout, F rule)
      : nx_(nx),
        nu_(nu),
        nout_(nout),
        impl_(std::make_shared<const detail::EvalModel<F, kMaxDualDepth>>(std::move(rule))) {
    if (nx < 0 || nu < 0 || nout < 1) throw DimensionError("SmoothMap: invalid dimensions");
  }

  int in_x() const { return nx_; }
  int in_u() const { return nu_; }
  int out() const { return nout_; }
  bool valid() const { return impl_ != nullptr; }

  template <class S>
  void eval_into(std::span<const S> x, std::span<const S> u, std::span<S> out) const {
    if (int(x.size()) != nx_ || int(u.size()) != nu_ || int(out.size()) != nout_)
      throw DimensionError("SmoothMap: argument size mismatch");
    constexpr int K = dual_depth_v<S>;
    if constexpr (K <= kMaxDualDepth) {
      static_cast<const detail::EvalLayer<K>&>(*impl_).eval_layer(x, u, out);
    } else {
      throw Error("SmoothMap: derivative nesting exceeds compiled depth limit");
    }
  }

  Eigen::VectorXd operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    Eigen::VectorXd y(nout_);
    eval_into<double>({x.data(), size_t(x.size())}, {u.data(), size_t(u.size())},
                      {y.data(), size_t(y.size())});
    return y;
  }

  /// Evaluation for single-slot maps (nx == 0 or nu == 0).
  Eigen::VectorXd operator()(const Eigen::VectorXd& point) const {
    if (nx_ == 0) return (*this)(Eigen::VectorXd(0), point);
    if (nu_ == 0) return (*this)(point, Eigen::VectorXd(0));
    throw DimensionError("SmoothMap: map takes both x and u");
  }

  double scalar(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    if (nout_ != 1) throw DimensionError("SmoothMap: not a scalar map");
    return (*this)(x, u)[0];
  }
  double scalar(const Eigen::VectorXd& point) const {
    if (nout_ != 1) throw DimensionError("SmoothMap: not a scalar map");
    return (*this)(point)[0];
  }

 private:
  int nx_ = 0, nu_ = 0, nout_ = 0;
  std::shared_ptr<const detail::EvalInterface> impl_;
};

/// Vector-valued map of (x, u); rule(x, u, out).
template <class F>
SmoothMap xu_map(int nx, int nu, int nout, F rule) {
  return SmoothMap(nx, nu, nout, std::move(rule));
}

/// Scalar map of (x, u); fn(x, u) -> S.
template <class F>
SmoothMap xu_scalar(int nx, int nu, F fn) {
  return SmoothMap(nx, nu, 1, [fn = std::move(fn)](auto x, auto u, auto out) { out[0] = fn(x, u); });
}

/// Scalar map of the state only; fn(x) -> S.
template <class F>
SmoothMap state_scalar(int nx, F fn) {
  return SmoothMap(nx, 0, 1, [fn = std::move(fn)](auto x, auto, auto out) { out[0] = fn(x); });
}

/// Scalar map of the input only; fn(u) -> S.
template <class F>
SmoothMap input_scalar(int nu, F fn) {
  return SmoothMap(0, nu, 1, [fn = std::move(fn)](auto, auto u, auto out) { out[0] = fn(u); });
}

}  // namespace sgflow
