#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <random>
#include <sstream>

#include "veclyap/sdp.hpp"

using namespace veclyap::sdp;

TEST_CASE("1x1 trace minimization") {
  SdpProblem p;
  auto b = p.add_block(1);
  p.add_constraint({{p.entry(b, 0, 0), 1.0}}, 1.0);
  p.set_objective({{p.entry(b, 0, 0), 1.0}});
  auto s = solve(p);
  REQUIRE(s.succeeded());
  CHECK(s.objective_value == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(s.block_values[0](0, 0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("1x1 infeasible with a checked certificate") {
  SdpProblem p;
  auto b = p.add_block(1);
  p.add_constraint({{p.entry(b, 0, 0), 1.0}}, -1.0);
  auto s = solve(p);
  REQUIRE(s.status == Status::Infeasible);
  CHECK(certificate_residual(p, s.infeasibility_certificate) < 1e-6);
}

TEST_CASE("2x2 Schur-complement forced entry") {
  SdpProblem p;
  auto b = p.add_block(2);
  p.add_constraint({{p.entry(b, 0, 0), 1.0}}, 1.0);
  p.add_constraint({{p.entry(b, 0, 1), 1.0}}, 2.0);
  p.set_objective({{p.entry(b, 1, 1), 1.0}});
  auto s = solve(p);
  REQUIRE(s.succeeded());
  CHECK(s.block_values[0](1, 1) == doctest::Approx(4.0).epsilon(1e-5));
}

TEST_CASE("residual report on hand-built values") {
  SdpProblem p;
  auto b = p.add_block(2);
  p.add_constraint({{p.entry(b, 0, 0), 1.0}}, 1.0);
  p.add_constraint({{p.entry(b, 0, 1), 1.0}}, 2.0);
  std::vector<double> v(p.num_vars(), 0.0);
  v[p.entry(b, 0, 0)] = 1.0;
  v[p.entry(b, 0, 1)] = 2.0;
  v[p.entry(b, 1, 1)] = 4.0;
  auto r = check_values(p, v);
  CHECK(r.max_violation <= 1e-12);
  CHECK(r.min_eigenvalue >= -1e-12);
  v[p.entry(b, 0, 0)] = 1.0 + 1e-3;
  CHECK(check_values(p, v).max_violation == doctest::Approx(1e-3).epsilon(1e-9));
}

TEST_CASE("random feasible instances are never reported infeasible") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g;
  for (int t = 0; t < 10; ++t) {
    const std::size_t n = 3;
    Eigen::MatrixXd L(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) L(i, j) = g(rng);
    const Eigen::MatrixXd X0 = L * L.transpose();
    SdpProblem p;
    auto b = p.add_block(n);
    auto f = p.add_free(1);
    for (int c = 0; c < 4; ++c) {
      LinearForm form;
      double rhs = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
          const double a = g(rng);
          form.push_back({p.entry(b, i, j), a});
          rhs += a * X0(i, j);
        }
      form.push_back({f, 1.0});
      p.add_constraint(form, rhs + 0.5);
    }
    auto s = solve(p);
    REQUIRE(s.succeeded());
    auto r = check_solution(p, s);
    CHECK(r.max_violation <= 1e-6 * (1.0 + X0.cwiseAbs().maxCoeff()));
    CHECK(r.min_eigenvalue >= -1e-6);
  }
}

TEST_CASE("dump round trip") {
  SdpProblem p("dumped");
  auto b = p.add_block(2);
  auto f = p.add_free(2);
  p.add_constraint({{p.entry(b, 0, 1), 2.0}, {f + 1, -1.0}}, 0.25);
  p.set_objective({{p.entry(b, 1, 1), 1.0}});
  std::stringstream ss;
  p.dump(ss);
  auto q = SdpProblem::read_dump(ss);
  std::stringstream again;
  q.dump(again);
  std::stringstream first;
  p.dump(first);
  CHECK(first.str() == again.str());
}
