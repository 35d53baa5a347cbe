#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sgflow/problem.hpp>

using namespace sgflow;

TEST_CASE("steady state of the LTI plant") {
  auto spec = builtin_problem("paper_lti_r1");

  SECTION("zero input maps to the origin") {
    auto ss = steady_state(spec, Eigen::VectorXd::Zero(2));
    REQUIRE(ss.x_ss.norm() < 1e-12);
  }

  SECTION("u = (1,1): hand elimination of A x = -B u with det A = 1.18") {
    Eigen::VectorXd u(2);
    u << 1.0, 1.0;
    auto ss = steady_state(spec, u);
    REQUIRE_THAT(ss.x_ss[0], Catch::Matchers::WithinAbs(0.7 / 1.18, 1e-10));
    REQUIRE_THAT(ss.x_ss[1], Catch::Matchers::WithinAbs(0.6 / 1.18, 1e-10));
  }

  SECTION("the input paired with the interior optimizer") {
    Eigen::VectorXd u(2);
    u << 2.93, 2.495;
    auto ss = steady_state(spec, u);
    REQUIRE_THAT(ss.x_ss[0], Catch::Matchers::WithinAbs(1.775, 1e-10));
    REQUIRE_THAT(ss.x_ss[1], Catch::Matchers::WithinAbs(0.9, 1e-10));
  }

  SECTION("sensitivity equals -A^{-1} B") {
    Eigen::VectorXd u(2);
    u << -0.3, 1.2;
    auto ss = steady_state(spec, u);
    Eigen::MatrixXd expected = -spec.lti->A.inverse() * spec.lti->B;
    REQUIRE((ss.sensitivity - expected).lpNorm<Eigen::Infinity>() < 1e-10);
  }
}

TEST_CASE("steady-state properties on random inputs") {
  auto spec = builtin_problem("second_order_r2");
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int i = 0; i < 25; ++i) {
    Eigen::VectorXd u(1);
    u << dist(rng);
    auto ss = steady_state(spec, u);
    REQUIRE(spec.f(ss.x_ss, u).norm() <= 1e-10);

    // first-order consistency of the sensitivity
    const double delta = 1e-5;
    for (int j = 0; j < 1; ++j) {
      Eigen::VectorXd up = u;
      up[j] += delta;
      auto ssp = steady_state(spec, up, ss.x_ss);
      Eigen::VectorXd pred = ss.x_ss + delta * ss.sensitivity.col(j);
      REQUIRE((ssp.x_ss - pred).norm() <= 1e-8);
    }

    // the implicit-function identity df/dx . S + df/du = 0
    auto [jx, ju] = jacobian(spec.f, ss.x_ss, u);
    REQUIRE((jx * ss.sensitivity + ju).lpNorm<Eigen::Infinity>() < 1e-8);
  }
}

TEST_CASE("newton failure modes") {
  SECTION("no root: non-convergence error carries the residual") {
    // Newton from 0 cycles 0 -> 1 -> 0 on this cubic and never converges.
    ProblemSpec spec;
    spec.name = "newton_cycle";
    spec.f = xu_map(1, 1, 1, [](auto x, auto u, auto out) {
      out[0] = x[0] * x[0] * x[0] - 2.0 * x[0] + 2.0 + 0.0 * u[0];
    });
    spec.phi = state_scalar(1, [](auto x) { return x[0] * x[0]; });
    spec.h = state_scalar(1, [](auto x) { return 1.0 - x[0] * x[0]; });
    spec.b = input_scalar(1, [](auto u) { return 1.0 - u[0] * u[0]; });
    try {
      steady_state(spec, Eigen::VectorXd::Zero(1));
      FAIL("expected NonConvergenceError");
    } catch (const NonConvergenceError& e) {
      REQUIRE(e.last_residual > 0.0);
    }
  }

  SECTION("singular df/dx is a hard error") {
    ProblemSpec spec;
    spec.name = "singular";
    spec.f = xu_map(2, 2, 2, [](auto x, auto u, auto out) {
      out[0] = x[0] - x[1] + u[0];
      out[1] = x[0] - x[1] + u[1];
    });
    spec.phi = state_scalar(2, [](auto x) { return x[0] * x[0] + x[1] * x[1]; });
    spec.h = state_scalar(2, [](auto x) { return 1.0 - x[0] * x[0]; });
    spec.b = input_scalar(2, [](auto u) { return 1.0 - u[0] * u[0] - u[1] * u[1]; });
    Eigen::VectorXd u(2);
    u << 0.5, 0.2;
    REQUIRE_THROWS_AS(steady_state(spec, u), SingularJacobianError);
  }
}

TEST_CASE("builtin problems") {
  SECTION("paper problem data") {
    auto spec = builtin_problem("paper_lti_r1");
    REQUIRE(spec.r == 1);
    REQUIRE(spec.beta == 5.0);
    Eigen::MatrixXd A_expect(2, 2);
    A_expect << -1.6, -0.1, -1.0, -0.8;
    REQUIRE((spec.lti->A - A_expect).norm() == 0.0);
    REQUIRE(spec.lti->B.isIdentity(0.0));
    REQUIRE(spec.warnings.empty());
  }

  SECTION("second-order problem has the designed relative-degree structure") {
    auto spec = builtin_problem("second_order_r2");
    REQUIRE(spec.r == 2);
    // L_f h = -2 x1 x2 by hand; df/du only enters through the second state
    Eigen::VectorXd x(2), u(1);
    x << 0.7, -0.2;
    u << 0.1;
    auto stackless_lf = [&](const Eigen::VectorXd& xx, const Eigen::VectorXd& uu) {
      return gradient(spec.h, xx).dot(spec.f(xx, uu));
    };
    REQUIRE_THAT(stackless_lf(x, u), Catch::Matchers::WithinAbs(-2.0 * 0.7 * -0.2, 1e-14));
  }

  SECTION("unknown name lists the available problems") {
    try {
      builtin_problem("nope");
      FAIL("expected UnknownProblemError");
    } catch (const UnknownProblemError& e) {
      std::string msg = e.what();
      REQUIRE(msg.find("paper_lti_r1") != std::string::npos);
      REQUIRE(msg.find("second_order_r2") != std::string::npos);
    }
  }

  SECTION("unstable plant triggers the eigenvalue warning") {
    LtiQuadraticData d;
    d.A = Eigen::MatrixXd{{1.0, 0.0}, {0.0, -1.0}};
    d.B = Eigen::MatrixXd::Identity(2, 2);
    d.phi_target = Eigen::VectorXd::Zero(2);
    d.phi_weight = Eigen::MatrixXd::Identity(2, 2);
    d.h_center = Eigen::VectorXd::Zero(2);
    d.h_shape = Eigen::MatrixXd::Identity(2, 2);
    d.h_level = 1.0;
    d.b_radius_sq = 4.0;
    auto spec = lti_quadratic_problem("unstable", std::move(d), 1, 5.0);
    REQUIRE_FALSE(spec.warnings.empty());
  }
}

TEST_CASE("consistent input inverts the steady-state map when possible") {
  auto spec = builtin_problem("paper_lti_r1");
  Eigen::VectorXd x0(2);
  x0 << 0.5, -0.2;
  auto u0 = consistent_input(spec, x0);
  REQUIRE(u0.has_value());
  REQUIRE(spec.f(x0, *u0).norm() <= 1e-9);

  // non-square case: only states with x2 = 0 are equilibria
  auto so = builtin_problem("second_order_r2");
  Eigen::VectorXd ok(2), bad(2);
  ok << 0.4, 0.0;
  bad << 0.4, 0.5;
  REQUIRE(consistent_input(so, ok).has_value());
  REQUIRE_FALSE(consistent_input(so, bad).has_value());
}
