#pragma once

#include <Eigen/Core>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "sgflow/problem.hpp"

namespace sgflow {

using PointXU = std::pair<Eigen::VectorXd, Eigen::VectorXd>;

inline Eigen::VectorXd uniform_in(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                  std::mt19937_64& rng) {
  Eigen::VectorXd v(lo.size());
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int i = 0; i < lo.size(); ++i) v[i] = lo[i] + (hi[i] - lo[i]) * dist(rng);
  return v;
}

inline std::vector<PointXU> sample_box(const Box& box, int count, std::mt19937_64& rng) {
  std::vector<PointXU> pts;
  pts.reserve(count);
  for (int i = 0; i < count; ++i)
    pts.emplace_back(uniform_in(box.x_lo, box.x_hi, rng), uniform_in(box.u_lo, box.u_hi, rng));
  return pts;
}

/// Draws points near the zero level set of `value` by bisecting between
/// box samples of opposite sign, then filters with `keep`. Used to
/// boundary-bias diagnostic sampling; exhaustive coverage is not attempted.
inline std::vector<PointXU> sample_level_boundary(
    const std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>& value,
    const std::function<bool(const Eigen::VectorXd&, const Eigen::VectorXd&)>& keep,
    const Box& box, int count, std::mt19937_64& rng, double tol = 1e-4, int max_draws = 200000) {
  std::vector<PointXU> pts;
  pts.reserve(count);
  for (int draws = 0; int(pts.size()) < count && draws < max_draws; ++draws) {
    Eigen::VectorXd xa = uniform_in(box.x_lo, box.x_hi, rng);
    Eigen::VectorXd xb = uniform_in(box.x_lo, box.x_hi, rng);
    Eigen::VectorXd ua = uniform_in(box.u_lo, box.u_hi, rng);
    Eigen::VectorXd ub = uniform_in(box.u_lo, box.u_hi, rng);
    double va = value(xa, ua), vb = value(xb, ub);
    if (!(va * vb < 0.0)) continue;
    // bisect along the segment between the two draws
    double lo = 0.0, hi = 1.0;
    Eigen::VectorXd xm, um;
    double vm = va;
    for (int it = 0; it < 60 && std::abs(vm) > tol; ++it) {
      double mid = 0.5 * (lo + hi);
      xm = (1.0 - mid) * xa + mid * xb;
      um = (1.0 - mid) * ua + mid * ub;
      vm = value(xm, um);
      if (va * vm <= 0.0) hi = mid; else lo = mid;
    }
    if (xm.size() == 0 || std::abs(vm) > tol) continue;
    if (keep(xm, um)) pts.emplace_back(std::move(xm), std::move(um));
  }
  return pts;
}

}  // namespace sgflow
