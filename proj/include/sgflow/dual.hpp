#pragma once

#include <cmath>
#include <ostream>
#include <type_traits>

namespace sgflow {

/// Forward-mode dual number. `val` is the value, `dot` the coefficient of the
/// nilpotent part, so arithmetic propagates exact first derivatives. Nesting
/// (Dual<Dual<...>>) yields exact higher derivatives; every operation below is
/// generic in T and therefore closed under nesting.
template <class T>
struct Dual {
  T val{};
  T dot{};

  constexpr Dual() = default;
  constexpr Dual(const T& v) : val(v) {}
  constexpr Dual(const T& v, const T& d) : val(v), dot(d) {}

  // Broadcast construction from a plain arithmetic scalar. Recurses through
  // nested duals, so a double coefficient combines with any nesting depth.
  template <class U>
    requires(std::is_arithmetic_v<U> && !std::is_same_v<U, T>)
  constexpr Dual(U s) : val(s), dot{} {}

  constexpr Dual& operator+=(const Dual& r) { val += r.val; dot += r.dot; return *this; }
  constexpr Dual& operator-=(const Dual& r) { val -= r.val; dot -= r.dot; return *this; }
  constexpr Dual& operator*=(const Dual& r) { *this = *this * r; return *this; }
  constexpr Dual& operator/=(const Dual& r) { *this = *this / r; return *this; }

  friend constexpr Dual operator+(const Dual& a) { return a; }
  friend constexpr Dual operator-(const Dual& a) { return {-a.val, -a.dot}; }

  friend constexpr Dual operator+(const Dual& a, const Dual& b) { return {a.val + b.val, a.dot + b.dot}; }
  friend constexpr Dual operator-(const Dual& a, const Dual& b) { return {a.val - b.val, a.dot - b.dot}; }

  // (a b)' = a b' + a' b
  friend constexpr Dual operator*(const Dual& a, const Dual& b) {
    return {a.val * b.val, a.val * b.dot + a.dot * b.val};
  }

  // (a/b)' = (a' - (a/b) b') / b
  friend constexpr Dual operator/(const Dual& a, const Dual& b) {
    T q = a.val / b.val;
    return {q, (a.dot - q * b.dot) / b.val};
  }

  // Ordering and equality compare values only; the derivative part does not
  // participate in branching.
  friend constexpr bool operator<(const Dual& a, const Dual& b) { return a.val < b.val; }
  friend constexpr bool operator>(const Dual& a, const Dual& b) { return b.val < a.val; }
  friend constexpr bool operator<=(const Dual& a, const Dual& b) { return !(b.val < a.val); }
  friend constexpr bool operator>=(const Dual& a, const Dual& b) { return !(a.val < b.val); }
  friend constexpr bool operator==(const Dual& a, const Dual& b) { return a.val == b.val; }
  friend constexpr bool operator!=(const Dual& a, const Dual& b) { return !(a.val == b.val); }

  friend std::ostream& operator<<(std::ostream& os, const Dual& a) {
    return os << "(" << a.val << " + " << a.dot << "e)";
  }
};

template <class T>
inline constexpr bool is_dual_v = false;
template <class T>
inline constexpr bool is_dual_v<Dual<T>> = true;

/// Nesting depth of a scalar type: 0 for arithmetic types, 1 + depth(T) for Dual<T>.
template <class S>
struct dual_depth : std::integral_constant<int, 0> {};
template <class T>
struct dual_depth<Dual<T>> : std::integral_constant<int, 1 + dual_depth<T>::value> {};
template <class S>
inline constexpr int dual_depth_v = dual_depth<S>::value;

template <int K>
struct nested_dual {
  using type = Dual<typename nested_dual<K - 1>::type>;
};
template <>
struct nested_dual<0> {
  using type = double;
};
/// The scalar type at nesting depth K: NestedDual<0> = double, NestedDual<1> = Dual<double>, ...
template <int K>
using NestedDual = typename nested_dual<K>::type;

/// Recursively extracts the plain value of a (possibly nested) dual.
constexpr double value_of(double s) { return s; }
template <class T>
constexpr double value_of(const Dual<T>& a) { return value_of(a.val); }

template <class T>
Dual<T> sqrt(const Dual<T>& a) {
  using std::sqrt;
  T r = sqrt(a.val);
  return {r, a.dot / (T(2.0) * r)};
}

template <class T>
Dual<T> exp(const Dual<T>& a) {
  using std::exp;
  T e = exp(a.val);
  return {e, e * a.dot};
}

template <class T>
Dual<T> log(const Dual<T>& a) {
  using std::log;
  return {log(a.val), a.dot / a.val};
}

template <class T>
Dual<T> sin(const Dual<T>& a) {
  using std::cos;
  using std::sin;
  return {sin(a.val), cos(a.val) * a.dot};
}

template <class T>
Dual<T> cos(const Dual<T>& a) {
  using std::cos;
  using std::sin;
  return {cos(a.val), -sin(a.val) * a.dot};
}

template <class T>
Dual<T> tan(const Dual<T>& a) {
  using std::tan;
  T t = tan(a.val);
  return {t, (T(1.0) + t * t) * a.dot};
}

// d(x^p) = p x^(p-1) dx, exponent held constant
template <class T, class P>
  requires std::is_arithmetic_v<P>
Dual<T> pow(const Dual<T>& a, P p) {
  using std::pow;
  T pm1 = pow(a.val, double(p) - 1.0);
  return {pm1 * a.val, double(p) * pm1 * a.dot};
}

template <class T>
Dual<T> abs(const Dual<T>& a) {
  return a.val < T(0.0) ? -a : a;
}

template <class T>
constexpr const Dual<T>& min(const Dual<T>& a, const Dual<T>& b) { return b < a ? b : a; }
template <class T>
constexpr const Dual<T>& max(const Dual<T>& a, const Dual<T>& b) { return a < b ? b : a; }

template <class T>
bool isfinite(const Dual<T>& a) {
  using std::isfinite;
  return isfinite(a.val) && isfinite(a.dot);
}

}  // namespace sgflow
