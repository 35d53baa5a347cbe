#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sgflow/derivatives.hpp>
#include <sgflow/problem.hpp>

#include "oracles.hpp"

using namespace sgflow;

TEST_CASE("plain and dual evaluation agree on the value component") {
  SmoothMap f = xu_map(2, 1, 2, [](auto x, auto u, auto out) {
    out[0] = x[0] * x[1] + u[0];
    out[1] = x[0] * x[0] - 2.0 * u[0] * x[1];
  });
  Eigen::VectorXd x(2), u(1);
  x << 1.3, -0.7;
  u << 0.4;
  Eigen::VectorXd plain = f(x, u);

  using D = Dual<double>;
  D xd[2] = {D(1.3, 1.0), D(-0.7, 0.5)};
  D ud[1] = {D(0.4, -2.0)};
  D yd[2];
  f.eval_into<D>({xd, 2}, {ud, 1}, {yd, 2});
  REQUIRE(yd[0].val == plain[0]);
  REQUIRE(yd[1].val == plain[1]);
}

TEST_CASE("gradient examples") {
  auto spec = builtin_problem("paper_lti_r1");

  // gradient of the objective at its minimizer
  Eigen::VectorXd xstar(2);
  xstar << 1.775, 0.9;
  REQUIRE(gradient(spec.phi, xstar).norm() == 0.0);

  // gradient of h at the ellipse center
  Eigen::VectorXd center(2);
  center << 0.2, 0.3;
  REQUIRE(gradient(spec.h, center).norm() == 0.0);

  // gradient of b at (1,2): finite differences as the oracle
  Eigen::VectorXd u(2);
  u << 1.0, 2.0;
  Eigen::VectorXd gb = gradient(spec.b, u);
  Eigen::VectorXd fd = oracles::fd_gradient(spec.b, u);
  REQUIRE_THAT(gb[0], Catch::Matchers::WithinAbs(-2.0, 1e-12));
  REQUIRE_THAT(gb[1], Catch::Matchers::WithinAbs(-4.0, 1e-12));
  REQUIRE((gb - fd).norm() < 1e-6);
}

TEST_CASE("jacobian of the LTI plant is (A, B) everywhere") {
  auto spec = builtin_problem("paper_lti_r1");
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (int i = 0; i < 10; ++i) {
    Eigen::VectorXd x(2), u(2);
    x << dist(rng), dist(rng);
    u << dist(rng), dist(rng);
    auto [jx, ju] = jacobian(spec.f, x, u);
    REQUIRE((jx - spec.lti->A).norm() == 0.0);
    REQUIRE((ju - spec.lti->B).norm() == 0.0);
  }
}

TEST_CASE("jacobian of a constant map is zero") {
  SmoothMap k = xu_map(2, 2, 1, [](auto, auto, auto out) {
    using S = std::remove_cvref_t<decltype(out[0])>;
    out[0] = S(3.0);
  });
  auto [jx, ju] = jacobian(k, Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(2));
  REQUIRE(jx.norm() == 0.0);
  REQUIRE(ju.norm() == 0.0);
}

TEST_CASE("jacobian of the designed second-order plant") {
  SmoothMap f = xu_map(2, 1, 2, [](auto x, auto u, auto out) {
    out[0] = x[1];
    out[1] = -x[0] - x[1] + u[0];
  });
  Eigen::VectorXd x(2), u(1);
  x << 0.3, -1.1;
  u << 0.9;
  auto [jx, ju] = jacobian(f, x, u);
  auto [fx, fu] = oracles::fd_jacobian(f, x, u);
  Eigen::MatrixXd jx_expect(2, 2);
  jx_expect << 0, 1, -1, -1;
  REQUIRE((jx - jx_expect).norm() == 0.0);
  REQUIRE(ju(0, 0) == 0.0);
  REQUIRE(ju(1, 0) == 1.0);
  REQUIRE((jx - fx).norm() < 1e-6);
  REQUIRE((ju - fu).norm() < 1e-6);
}

TEST_CASE("composition jacobian equals the product of jacobians on affine maps") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd F(3, 2), G(2, 3);
    Eigen::VectorXd cf(3), cg(2);
    for (int i = 0; i < F.size(); ++i) F.data()[i] = dist(rng);
    for (int i = 0; i < G.size(); ++i) G.data()[i] = dist(rng);
    for (int i = 0; i < 3; ++i) cf[i] = dist(rng);
    for (int i = 0; i < 2; ++i) cg[i] = dist(rng);

    SmoothMap comp = xu_map(2, 0, 2, [F, cf, G, cg](auto x, auto, auto out) {
      using S = std::remove_cvref_t<decltype(out[0])>;
      S mid[3];
      for (int i = 0; i < 3; ++i) {
        S acc(cf[i]);
        for (int j = 0; j < 2; ++j) acc += F(i, j) * x[j];
        mid[i] = acc;
      }
      for (int i = 0; i < 2; ++i) {
        S acc(cg[i]);
        for (int j = 0; j < 3; ++j) acc += G(i, j) * mid[j];
        out[i] = acc;
      }
    });
    Eigen::VectorXd x(2);
    x << dist(rng), dist(rng);
    Eigen::MatrixXd jx = jacobian(comp, x, Eigen::VectorXd(0)).first;
    // reference product with the same accumulation order as the dual pass
    Eigen::MatrixXd ref(2, 2);
    for (int col = 0; col < 2; ++col)
      for (int row = 0; row < 2; ++row) {
        double acc = 0.0;
        for (int k = 0; k < 3; ++k) acc += G(row, k) * F(k, col);
        ref(row, col) = acc;
      }
    REQUIRE((jx - ref).lpNorm<Eigen::Infinity>() < 1e-14);
  }
}

TEST_CASE("dimension mismatches raise errors") {
  auto spec = builtin_problem("paper_lti_r1");
  Eigen::VectorXd bad(3);
  bad.setZero();
  REQUIRE_THROWS_AS(gradient(spec.phi, bad), DimensionError);
  REQUIRE_THROWS_AS(jacobian(spec.f, bad, bad), DimensionError);
  REQUIRE_THROWS_AS(spec.f(bad, bad), DimensionError);
  // two-slot scalar map rejects the single-point gradient entry point
  SmoothMap both = xu_scalar(1, 1, [](auto x, auto u) { return x[0] * u[0]; });
  Eigen::VectorXd p(1);
  p.setZero();
  REQUIRE_THROWS_AS(gradient(both, p), DimensionError);
}
