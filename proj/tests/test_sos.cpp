#include <doctest.h>

#include <cmath>

#include "veclyap/sos.hpp"

using namespace veclyap;
using namespace veclyap::sos;

TEST_CASE("monomial basis sizes") {
  const std::vector<std::size_t> x{0}, xy{0, 1}, x4{0, 1, 2, 3};
  CHECK(monomial_basis(x, 2) == std::vector<Monomial>{Monomial(), Monomial::var(0)});
  CHECK(monomial_basis(xy, 4).size() == 6);
  CHECK(monomial_basis(x4, 2).size() == 5);
  CHECK_THROWS_AS(monomial_basis(x, 3), UsageError);
}

TEST_CASE("perfect square is SOS with the expected Gram matrix") {
  auto vars = make_varset({"x", "y"});
  auto x = Polynomial::variable(vars, "x"), y = Polynomial::variable(vars, "y");
  auto r = check_sos(x * x + 2.0 * x * y + y * y);
  REQUIRE(r.outcome == Outcome::Feasible);
  REQUIRE(r.certificate);
  CHECK(certificate_valid(*r.certificate));
  CHECK(r.certificate->relative_residual <= 1e-6);
  CHECK((r.certificate->reconstruct(vars) - (x * x + 2.0 * x * y + y * y)).max_abs_coefficient() <= 1e-6);
  // z = [x, y] after pruning the constant
  if (r.certificate->gram.rows() == 2) {
    CHECK(r.certificate->gram(0, 0) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(r.certificate->gram(0, 1) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(r.certificate->gram(1, 1) == doctest::Approx(1.0).epsilon(1e-5));
  }
}

TEST_CASE("x^2 - 1 is rejected") {
  auto vars = make_varset({"x"});
  auto x = Polynomial::variable(vars, "x");
  CHECK(check_sos(x * x - 1.0).outcome == Outcome::Infeasible);
}

TEST_CASE("Motzkin polynomial is nonnegative but not SOS") {
  auto vars = make_varset({"x", "y"});
  auto x = Polynomial::variable(vars, "x"), y = Polynomial::variable(vars, "y");
  auto m = x.pow(4) * y * y + x * x * y.pow(4) - 3.0 * x * x * y * y + 1.0;
  // nonnegativity by grid sampling
  double lowest = 1e9;
  for (int i = -40; i <= 40; ++i)
    for (int j = -40; j <= 40; ++j) {
      const std::vector<double> pt{i / 20.0, j / 20.0};
      lowest = std::min(lowest, m.evaluate(pt));
    }
  CHECK(lowest >= -1e-12);
  auto r = check_sos(m);
  CHECK(r.outcome == Outcome::Infeasible);
  CHECK_FALSE(r.infeasibility_certificate.empty());
}

TEST_CASE("odd degree input is a usage error") {
  auto vars = make_varset({"x"});
  CHECK_THROWS_AS(check_sos(Polynomial::variable(vars, "x").pow(3)), UsageError);
}

TEST_CASE("multiplier program: sigma = 2 cancels -2x^2") {
  auto vars = make_varset({"x"});
  auto x = Polynomial::variable(vars, "x");
  SosProgram prog(vars, "sigma");
  const auto& s = prog.new_sos("s", monomial_basis(std::vector<std::size_t>{0}, 0));
  prog.add_sos(AffinePoly(-2.0 * x * x) - s.expr * (-1.0 * x * x), "residual");
  auto sol = prog.solve();
  REQUIRE(sol.feasible());
  CHECK(sol.value(s).constant_term() >= 2.0 - 1e-6);
}

TEST_CASE("Lyapunov coefficients for a stable scalar system") {
  auto vars = make_varset({"x"});
  auto x = Polynomial::variable(vars, "x");
  SosProgram prog(vars, "scalar_lyap");
  const auto& c = prog.new_scalar("c");
  AffinePoly V = (x * x) * c.expr();
  prog.add_sos(V - AffinePoly(1e-6 * x * x), "positive");
  prog.add_sos(AffinePoly(-1e-6 * x * x) + (2.0 * x * x) * c.expr(), "decrease");
  prog.add_equality(c.expr(), 1.0);
  auto sol = prog.solve();
  REQUIRE(sol.feasible());
  CHECK(sol.value(c) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("Putinar certificates") {
  auto vars = make_varset({"x"});
  auto x = Polynomial::variable(vars, "x");
  SUBCASE("x = 1*(x-1) + 1") {
    auto r = putinar_certificate(x, {x - 1.0}, 0);
    REQUIRE(r.outcome == Outcome::Feasible);
    CHECK(r.multipliers[0].constant_term() == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(r.sigma0->constant_term() == doctest::Approx(1.0).epsilon(1e-5));
  }
  SUBCASE("already SOS") {
    auto r = putinar_certificate(1.0 + x * x, {x}, 0);
    REQUIRE(r.outcome == Outcome::Feasible);
    CHECK(((*r.sigma0 + r.multipliers[0] * x) - (1.0 + x * x)).max_abs_coefficient() <= 1e-6);
  }
  SUBCASE("2 - x^2 on the unit interval") {
    auto r = putinar_certificate(2.0 - x * x, {1.0 - x * x}, 0);
    REQUIRE(r.outcome == Outcome::Feasible);
    CHECK(((*r.sigma0 + r.multipliers[0] * (1.0 - x * x)) - (2.0 - x * x)).max_abs_coefficient() <= 1e-6);
    CHECK(r.multipliers[0].constant_term() >= 1.0 - 1e-6);
  }
  SUBCASE("negative on the region") {
    CHECK(putinar_certificate(-1.0 - x * x, {1.0 - x * x}, 2).outcome == Outcome::Infeasible);
  }
}

TEST_CASE("polish repairs a perturbed low-rank Gram matrix") {
  auto vars = make_varset({"x", "y"});
  auto x = Polynomial::variable(vars, "x"), y = Polynomial::variable(vars, "y");
  auto h = x * x - 2.0 * x * y + 3.0;
  const auto p = h * h;
  const std::vector<std::size_t> xy{0, 1};
  const auto basis = monomial_basis(xy, 4);
  // rank-one Gram vvᵀ from the coefficients of h in the basis
  Eigen::VectorXd v(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) v[static_cast<Eigen::Index>(i)] = h.coefficient(basis[i]);
  // PSD and low rank like a first-order iterate, but off in scale and range
  Eigen::VectorXd w = Eigen::VectorXd::Zero(v.size());
  w[0] = 1.0;
  w[w.size() - 1] = -0.5;
  const Eigen::MatrixXd noisy = (1.0 + 1e-4) * v * v.transpose() + 1e-4 * w * w.transpose();
  CHECK_FALSE(certificate_valid(make_certificate(p, basis, noisy)));
  auto fixed = polish_gram(p, basis, noisy);
  REQUIRE(fixed);
  CHECK(fixed->residual <= 1e-9);
  CHECK(fixed->eigen_floor >= -1e-9);
  CHECK((fixed->reconstruct(vars) - p).max_abs_coefficient() <= 1e-9);
}

TEST_CASE("ill-conditioned univariate square sum is certified") {
  auto vars = make_varset({"y1"});
  auto p = parse_polynomial(vars,
                            "0.7516021015092694*y1^2 - 1.374101272405255*y1^3 + 2.5099287353517656*y1^4 + "
                            "0.1244756593274148*y1^5 + 0.006167645062935074*y1^6");
  auto r = check_sos(p);
  REQUIRE(r.outcome == Outcome::Feasible);
  CHECK(certificate_valid(*r.certificate));
}
