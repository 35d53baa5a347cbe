#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sgflow/dual.hpp>

using sgflow::Dual;
using sgflow::value_of;

namespace {
using D1 = Dual<double>;
using D2 = Dual<D1>;
}  // namespace

TEST_CASE("product rule holds exactly") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    D1 a{dist(rng), dist(rng)}, b{dist(rng), dist(rng)};
    D1 p = a * b;
    REQUIRE(p.val == a.val * b.val);
    REQUIRE(p.dot == a.val * b.dot + a.dot * b.val);
  }
}

TEST_CASE("constants lift with zero derivative") {
  D1 c = 4.25;
  REQUIRE(c.val == 4.25);
  REQUIRE(c.dot == 0.0);
  D2 nested = 4.25;
  REQUIRE(value_of(nested) == 4.25);
  REQUIRE(nested.dot.val == 0.0);
  REQUIRE(nested.val.dot == 0.0);
}

TEST_CASE("quotient and chain rules") {
  D1 x{2.0, 1.0};
  D1 y = (x * x + 3.0) / x;  // f = x + 3/x, f' = 1 - 3/x^2
  REQUIRE_THAT(y.val, Catch::Matchers::WithinAbs(2.0 + 1.5, 1e-15));
  REQUIRE_THAT(y.dot, Catch::Matchers::WithinAbs(1.0 - 0.75, 1e-15));

  using sgflow::exp;
  using sgflow::sin;
  D1 z = exp(sin(x));  // z' = cos(x) e^{sin x}
  REQUIRE_THAT(z.dot, Catch::Matchers::WithinRel(std::cos(2.0) * std::exp(std::sin(2.0)), 1e-14));
}

TEST_CASE("nested duals produce second derivatives") {
  // f(t) = t^3: f'' = 6t
  D2 t{{2.0, 1.0}, {1.0, 0.0}};
  D2 f = t * t * t;
  REQUIRE(value_of(f) == 8.0);
  REQUIRE(f.val.dot == 12.0);  // f'
  REQUIRE(f.dot.val == 12.0);  // f' (mixed component)
  REQUIRE(f.dot.dot == 12.0);  // f''

  using sgflow::sqrt;
  D2 g = sqrt(t);  // g'' = -1/(4 t^{3/2})
  REQUIRE_THAT(g.dot.dot, Catch::Matchers::WithinRel(-0.25 * std::pow(2.0, -1.5), 1e-13));
}

TEST_CASE("comparisons branch on the value part") {
  D1 a{1.0, 100.0}, b{2.0, -100.0};
  REQUIRE(a < b);
  REQUIRE(sgflow::max(a, b).val == 2.0);
  REQUIRE(sgflow::min(a, b).dot == 100.0);
  using sgflow::abs;
  REQUIRE(abs(D1{-3.0, 2.0}).dot == -2.0);
}

TEST_CASE("math functions against finite differences") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(0.2, 2.5);
  const double step = 1e-6;
  auto check = [&](auto fn) {
    for (int i = 0; i < 50; ++i) {
      double x = dist(rng);
      D1 y = fn(D1{x, 1.0});
      double fd = (value_of(fn(D1{x + step})) - value_of(fn(D1{x - step}))) / (2.0 * step);
      REQUIRE_THAT(y.dot, Catch::Matchers::WithinAbs(fd, 1e-6 * (1.0 + std::abs(y.dot))));
    }
  };
  check([](auto v) { using sgflow::sqrt; return sqrt(v); });
  check([](auto v) { using sgflow::exp; return exp(v); });
  check([](auto v) { using sgflow::log; return log(v); });
  check([](auto v) { using sgflow::sin; return sin(v); });
  check([](auto v) { using sgflow::cos; return cos(v); });
  check([](auto v) { using sgflow::tan; return tan(v); });
  check([](auto v) { using sgflow::pow; return pow(v, 2.5); });
}
