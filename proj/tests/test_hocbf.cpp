#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sgflow/hocbf.hpp>

#include "oracles.hpp"

using namespace sgflow;

TEST_CASE("level zero reproduces h") {
  for (const auto& name : builtin_problem_names()) {
    auto spec = builtin_problem(name);
    auto stack = build_stack(spec);
    std::mt19937_64 rng(1);
    for (const auto& [x, u] : sample_box(spec.sample_box, 20, rng))
      REQUIRE(stack.value(0, x, u) == spec.h.scalar(x));
  }
}

TEST_CASE("first level by hand on the planar problem") {
  auto spec = builtin_problem("paper_lti_r1");
  auto stack = build_stack(spec);
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
  // grad h(0,0) = (0.1, 0.6), f(0,0) = 0, h(0,0) = 0.9, beta = 5 -> h1 = 4.5
  REQUIRE_THAT(stack.value(1, zero, zero), Catch::Matchers::WithinAbs(4.5, 1e-14));

  // cross-check against a finite-difference Lie derivative at a generic point
  Eigen::VectorXd x(2), u(2);
  x << 0.9, -0.1;
  u << 1.0, -2.0;
  Eigen::VectorXd fval = spec.f(x, u);
  double fd_lie = oracles::fd_gradient(spec.h, x).dot(fval);
  REQUIRE_THAT(stack.value(1, x, u),
               Catch::Matchers::WithinAbs(fd_lie + 5.0 * spec.h.scalar(x), 1e-6));
}

TEST_CASE("equilibrium identity: h_i = beta^i h at steady pairs") {
  for (const auto& name : builtin_problem_names()) {
    auto spec = builtin_problem(name);
    auto stack = build_stack(spec);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> dist(-0.5, 0.5);
    for (int trial = 0; trial < 10; ++trial) {
      Eigen::VectorXd u(spec.input_dim());
      for (int i = 0; i < u.size(); ++i) u[i] = dist(rng);
      NewtonOptions tight;
      tight.tol = 1e-14;
      auto ss = steady_state(spec, u, {}, tight);
      double hval = spec.h.scalar(ss.x_ss);
      double scale = 1.0;
      for (int i = 1; i <= spec.r; ++i) {
        scale *= spec.beta;
        REQUIRE_THAT(stack.value(i, ss.x_ss, u),
                     Catch::Matchers::WithinAbs(scale * hval, 1e-10));
      }
    }
  }
}

TEST_CASE("top-level partials") {
  SECTION("r = 1: dh1/du = grad h (B = I)") {
    auto spec = builtin_problem("paper_lti_r1");
    auto stack = build_stack(spec);
    Eigen::VectorXd x(2), u(2);
    x << 1.0, 0.4;
    u << -0.5, 2.0;
    auto [dx, du] = hr_partials(stack, x, u);
    Eigen::VectorXd gh = gradient(spec.h, x);
    REQUIRE((du.transpose() - gh).norm() < 1e-14);
  }

  SECTION("r = 2: the du coefficient is -2 x1, vanishing at x1 = 0") {
    auto spec = builtin_problem("second_order_r2");
    auto stack = build_stack(spec);
    Eigen::VectorXd u(1);
    u << 0.3;
    Eigen::VectorXd x(2);
    x << 0.0, 0.7;
    REQUIRE(hr_partials(stack, x, u).second.norm() == 0.0);
    x << -0.6, 0.7;
    REQUIRE_THAT(hr_partials(stack, x, u).second(0),
                 Catch::Matchers::WithinAbs(-2.0 * -0.6, 1e-12));
  }

  SECTION("all levels below r are independent of u") {
    auto spec = builtin_problem("second_order_r2");
    auto stack = build_stack(spec);
    std::mt19937_64 rng(3);
    for (const auto& [x, u] : sample_box(spec.sample_box, 50, rng)) {
      REQUIRE(gradient_u(stack.level(0), x, u).norm() == 0.0);
      REQUIRE(gradient_u(stack.level(1), x, u).norm() <= 1e-12);
    }
  }
}

TEST_CASE("relative-degree diagnostics") {
  std::mt19937_64 rng(7);

  SECTION("planar problem with r = 1 passes") {
    auto spec = builtin_problem("paper_lti_r1");
    auto stack = build_stack(spec);
    auto samples = relative_degree_samples(stack, spec.sample_box, 2000, 200, rng);
    auto rep = verify_relative_degree(stack, samples);
    REQUIRE(rep.passed);
    REQUIRE(rep.boundary_samples > 0);
    REQUIRE(rep.min_du_at_r > 0.0);
  }

  SECTION("second-order problem passes with exactly zero lower levels") {
    auto spec = builtin_problem("second_order_r2");
    auto stack = build_stack(spec);
    auto samples = relative_degree_samples(stack, spec.sample_box, 2000, 200, rng);
    auto rep = verify_relative_degree(stack, samples);
    REQUIRE(rep.passed);
    REQUIRE(rep.max_du_below[0] == 0.0);
    REQUIRE(rep.max_du_below[1] == 0.0);
  }

  SECTION("mis-declared r = 2 on the planar problem is flagged") {
    auto spec = builtin_problem("paper_lti_r1");
    spec.r = 2;
    auto stack = build_stack(spec);
    auto samples = relative_degree_samples(stack, spec.sample_box, 500, 50, rng);
    auto rep = verify_relative_degree(stack, samples);
    REQUIRE_FALSE(rep.passed);
    REQUIRE(rep.max_du_below[1] > 1e-10);  // dL_f h/du != 0
  }

  SECTION("empty sample set is an error") {
    auto spec = builtin_problem("paper_lti_r1");
    auto stack = build_stack(spec);
    REQUIRE_THROWS_AS(verify_relative_degree(stack, {}), DimensionError);
  }
}

TEST_CASE("membership") {
  auto spec = builtin_problem("paper_lti_r1");
  auto stack = build_stack(spec);

  SECTION("interior point with the hand values") {
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
    auto rep = membership(stack, zero, zero);
    REQUIRE_THAT(rep.h, Catch::Matchers::WithinAbs(0.9, 1e-15));
    REQUIRE_THAT(rep.b, Catch::Matchers::WithinAbs(16.0, 1e-15));
    REQUIRE_THAT(rep.h_levels[0], Catch::Matchers::WithinAbs(4.5, 1e-14));
    REQUIRE(rep.in_intersection);
  }

  SECTION("feasible steady pair lies in the intersection") {
    Eigen::VectorXd u(2);
    u << 2.93, 2.495;
    auto ss = steady_state(spec, u);
    REQUIRE(membership(stack, ss.x_ss, u).in_intersection);
  }

  SECTION("h < 0 excludes every set") {
    Eigen::VectorXd x(2), u(2);
    x << 3.0, 3.0;
    u.setZero();
    auto rep = membership(stack, x, u);
    for (bool in : rep.in_Xi) REQUIRE_FALSE(in);
    REQUIRE_FALSE(rep.in_intersection);
  }

  SECTION("points in the intersection satisfy h >= 0 and b >= 0") {
    std::mt19937_64 rng(11);
    for (const auto& [x, u] : sample_box(spec.sample_box, 500, rng)) {
      auto rep = membership(stack, x, u);
      if (rep.in_intersection) {
        REQUIRE(rep.h >= 0.0);
        REQUIRE(rep.b >= 0.0);
      }
    }
  }
}

TEST_CASE("large beta pushes h1/beta toward h") {
  auto base = builtin_problem("paper_lti_r1");
  std::mt19937_64 rng(13);
  auto grid = sample_box(base.sample_box, 200, rng);
  double prev = std::numeric_limits<double>::infinity();
  for (double beta : {10.0, 100.0, 1000.0}) {
    auto spec = base;
    spec.beta = beta;
    auto stack = build_stack(spec);
    double worst = 0.0;
    for (const auto& [x, u] : grid)
      worst = std::max(worst, std::abs(stack.value(1, x, u) / beta - spec.h.scalar(x)));
    INFO("beta=" << beta << " max |h1/beta - h| = " << worst);
    REQUIRE(worst < prev);
    prev = worst;
  }
}
