#include <doctest.h>

#include <random>

#include "veclyap/poly.hpp"

using namespace veclyap;

namespace {

VarSetPtr xy() { return make_varset({"x1", "x2"}); }

Polynomial random_poly(const VarSetPtr& vars, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> coef(-3, 3), expo(0, 2), count(1, 4);
  Polynomial p(vars);
  for (int t = count(rng); t > 0; --t) {
    Polynomial term = Polynomial::constant(vars, coef(rng));
    for (std::size_t v = 0; v < vars->size(); ++v) term = term * Polynomial::variable(vars, v).pow(expo(rng));
    p += term;
  }
  return p;
}

}  // namespace

TEST_CASE("difference of squares and additive inverse") {
  auto vars = make_varset({"x"});
  auto x = Polynomial::variable(vars, "x");
  CHECK((x + 1.0) * (x - 1.0) == x * x - 1.0);
  auto p = 3.0 * x.pow(3) - x + 2.0;
  CHECK((p + (-1.0) * p).terms().empty());
}

TEST_CASE("binomial expansion") {
  auto vars = xy();
  auto x1 = Polynomial::variable(vars, "x1"), x2 = Polynomial::variable(vars, "x2");
  CHECK((x1 + x2).pow(2) == x1 * x1 + 2.0 * x1 * x2 + x2 * x2);
}

TEST_CASE("evaluation") {
  auto vars = xy();
  auto x1 = Polynomial::variable(vars, "x1"), x2 = Polynomial::variable(vars, "x2");
  const std::vector<double> pt{2.0, 3.0};
  CHECK((x1 * x1 + x2).evaluate(pt) == doctest::Approx(7.0));
  auto p = 5.0 * x1 * x2 + x2.pow(3) - 4.5;
  const std::vector<double> zero{0.0, 0.0};
  CHECK(p.evaluate(zero) == p.constant_term());
}

TEST_CASE("second-subsystem field entry at a fixed point") {
  auto vars = make_varset({"x21", "x22", "x31", "x32"});
  auto f = parse_polynomial(vars, "0.12*x21*x32 - x21 - 0.41*x22*(1 - x21^2)");
  const std::vector<double> pt{1.0, 1.0, 0.0, 0.0};
  CHECK(f.evaluate(pt) == doctest::Approx(-1.0));
}

TEST_CASE("differentiation") {
  auto vars = xy();
  auto x1 = Polynomial::variable(vars, "x1"), x2 = Polynomial::variable(vars, "x2");
  CHECK((x1 * x1 * x2).differentiate("x1") == 2.0 * x1 * x2);
  CHECK(Polynomial::constant(vars, 4.0).differentiate("x2").is_zero());
  CHECK(x1.pow(4).differentiate("x1") == 4.0 * x1.pow(3));
  CHECK_THROWS_AS(x1.differentiate("y"), UsageError);
}

TEST_CASE("Lie derivatives") {
  auto vars = xy();
  auto x1 = Polynomial::variable(vars, "x1"), x2 = Polynomial::variable(vars, "x2");
  auto V = x1 * x1 + x2 * x2;
  CHECK(lie_derivative(V, {x2, -x1}).is_zero());

  auto one = make_varset({"x"});
  auto x = Polynomial::variable(one, "x");
  CHECK(lie_derivative(x * x, {-x}) == -2.0 * x * x);

  // hand expansion: 2x₁x₂ + 2x₂(−x₂(1 − x₁²) − x₁)
  const PolyVec vdp{x2, -1.0 * x2 * (1.0 - x1 * x1) - x1};
  CHECK(lie_derivative(V, vdp) == -2.0 * x2 * x2 * (1.0 - x1 * x1));

  CHECK_THROWS_AS(lie_derivative(V, {x2}), UsageError);
}

TEST_CASE("ring axioms on random polynomials") {
  auto vars = make_varset({"a", "b", "c"});
  std::mt19937_64 rng(11);
  for (int t = 0; t < 50; ++t) {
    auto p = random_poly(vars, rng), q = random_poly(vars, rng), r = random_poly(vars, rng);
    CHECK((p * q) * r == p * (q * r));
    CHECK(p * (q + r) == p * q + p * r);
    CHECK(p + q == q + p);
  }
}

TEST_CASE("render and parse round trip") {
  auto vars = make_varset({"x11", "x12", "x21"});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int t = 0; t < 20; ++t) {
    Polynomial p(vars);
    for (int k = 0; k < 5; ++k)
      p += u(rng) * Polynomial::variable(vars, static_cast<std::size_t>(k % 3)).pow(static_cast<unsigned>(k % 4));
    CHECK(parse_polynomial(vars, p.render()) == p);
  }
  CHECK_THROWS_AS(parse_polynomial(vars, "x11 +* 2"), UsageError);
  CHECK_THROWS_AS(parse_polynomial(vars, "y"), UsageError);
}

TEST_CASE("mismatched variable sets are rejected") {
  auto a = Polynomial::variable(make_varset({"x"}), "x");
  auto b = Polynomial::variable(make_varset({"y"}), "y");
  CHECK_THROWS_AS(a + b, UsageError);
}

TEST_CASE("compiled evaluation matches the term map") {
  auto vars = make_varset({"a", "b", "c"});
  std::mt19937_64 rng(5);
  const std::vector<double> pt{0.3, -1.2, 0.7};
  for (int t = 0; t < 20; ++t) {
    auto p = random_poly(vars, rng);
    CHECK(CompiledPolynomial(p)(pt.data()) == doctest::Approx(p.evaluate(pt)).epsilon(1e-12));
  }
}
