#include <doctest.h>

#include <Eigen/Dense>
#include <filesystem>

#include "helpers.hpp"
#include "veclyap/lyap.hpp"
#include "veclyap/sos.hpp"

using namespace veclyap;
using namespace veclyap::lyap;

namespace {

InterconnectedSystem vdp(double mu) {
  VdpNetworkSpec s;
  s.mu = {mu};
  s.zeta = Eigen::MatrixXd::Zero(1, 1);
  s.grouping = {{0}};
  return build_vdp_network(s);
}

Eigen::Matrix4d kron(const Eigen::Matrix2d& X, const Eigen::Matrix2d& Y) {
  Eigen::Matrix4d K;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) K.block<2, 2>(2 * i, 2 * j) = X(i, j) * Y;
  return K;
}

// AᵀP + PA = −I via column-major vectorization.
Eigen::Matrix2d lyapunov_equation(const Eigen::Matrix2d& A) {
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  const Eigen::Matrix4d M = kron(I, A.transpose()) + kron(A.transpose(), I);
  const Eigen::Vector4d p = M.fullPivLu().solve(Eigen::Vector4d(-1.0, 0.0, 0.0, -1.0));
  return Eigen::Map<const Eigen::Matrix2d>(p.data());
}

}  // namespace

TEST_CASE("stable scalar system gives V proportional to x^2") {
  auto sys = testing::scalar_system({{"-x1", "0"}});
  auto cert = find_initial_lyapunov(sys.subsystem(0), 2, 1.0);
  REQUIRE(cert);
  auto x = Polynomial::variable(sys.vars(), "x1");
  CHECK((cert->V - x * x).max_abs_coefficient() <= 1e-6);
}

TEST_CASE("unstable scalar system has no certificate") {
  auto sys = testing::scalar_system({{"x1", "0"}});
  for (double beta : {4.0, 1.0, 0.25}) CHECK_FALSE(find_initial_lyapunov(sys.subsystem(0), 2, beta));
  CHECK_FALSE(certify_subsystem(sys.subsystem(0)));
  CHECK_THROWS_AS(certify_all(sys), std::runtime_error);
}

TEST_CASE("VdP: linearization oracle and the need for a cross term") {
  auto sys = vdp(-1.0);
  const Subsystem& sub = sys.subsystem(0);
  const auto& vars = sys.vars();
  auto x1 = Polynomial::variable(vars, "x11"), x2 = Polynomial::variable(vars, "x12");
  const Polynomial ball = 1.0 - x1 * x1 - x2 * x2;
  const Polynomial nrm = x1 * x1 + x2 * x2;

  Eigen::Matrix2d A;
  A << 0.0, 1.0, -1.0, -1.0;  // linearization with μ = −1
  const Eigen::Matrix2d P = lyapunov_equation(A);
  CHECK((A.transpose() * P + P * A + Eigen::Matrix2d::Identity()).norm() < 1e-12);
  const Polynomial Vp = P(0, 0) * x1 * x1 + 2.0 * P(0, 1) * x1 * x2 + P(1, 1) * x2 * x2;
  CHECK(sos::check_sos(Vp - 1e-6 * nrm).outcome == sos::Outcome::Feasible);
  const Polynomial dVp = lie_derivative(Vp, sub.embed(sub.f));
  CHECK(sos::putinar_certificate(-1.0 * dVp - 1e-6 * nrm, {ball}, 2).outcome == sos::Outcome::Feasible);

  const Polynomial dVn = lie_derivative(nrm, sub.embed(sub.f));
  CHECK(dVn == -2.0 * x2 * x2 * (1.0 - x1 * x1));
  CHECK(sos::putinar_certificate(-1.0 * dVn - 1e-6 * nrm, {ball}, 2).outcome != sos::Outcome::Feasible);

  auto cert = find_initial_lyapunov(sub, 2, 1.0);
  REQUIRE(cert);
  CHECK(std::abs(cert->V.coefficient(Monomial::var(0) * Monomial::var(1))) > 1e-4);
}

TEST_CASE("scaling: x' = -x on the unit ball") {
  auto sys = testing::scalar_system({{"-x1", "0"}});
  auto x = Polynomial::variable(sys.vars(), "x1");
  auto r = scale_to_unit_roa(sys.subsystem(0), x * x, 1.0);
  CHECK(r.gamma_max == doctest::Approx(1.0).epsilon(2e-3));
  CHECK((r.V - (1.0 / r.gamma_max) * x * x).max_abs_coefficient() <= 1e-12);
}

TEST_CASE("scaling: x' = -x + x^3 stops before |x| = 1") {
  auto sys = testing::scalar_system({{"-x1 + x1^3", "0"}});
  const Subsystem& sub = sys.subsystem(0);
  auto x = Polynomial::variable(sys.vars(), "x1");
  auto r = scale_to_unit_roa(sub, x * x, 4.0);
  // decrease holds exactly on |x| < 1, so the certified level sits just below 1
  CHECK(r.gamma_max <= 1.0);
  CHECK(r.gamma_max >= 0.9);
  CHECK(sample_violations(sub, r.V, 1000, 1) == 0);
}

TEST_CASE("certified VdP estimates pass sampling and stay inside the domain") {
  for (double mu : {-0.5, -1.0, -1.5}) {
    auto sys = vdp(mu);
    auto cert = certify_subsystem(sys.subsystem(0));
    REQUIRE(cert);
    CHECK(sample_violations(sys.subsystem(0), cert->V, 1000, 2) == 0);
    const std::vector<double> zero{0.0, 0.0};
    CHECK(cert->V.evaluate(zero) == 0.0);
    // boundary points of {V = 1} along rays lie within ‖x‖² ≤ β
    for (int k = 0; k < 360; ++k) {
      const double th = k * 3.14159265358979 / 180.0;
      const double c = std::cos(th), s = std::sin(th);
      const std::vector<double> dir{c, s};
      const double q = cert->V.evaluate(dir);
      REQUIRE(q > 0.0);
      CHECK(1.0 / q <= cert->beta * (1.0 + 1e-6));
    }
  }
}

TEST_CASE("expanding interior: stable scalar radius does not move") {
  auto sys = testing::scalar_system({{"-x1", "0"}});
  auto cert = certify_subsystem(sys.subsystem(0));
  REQUIRE(cert);
  auto e = expand_roa(sys.subsystem(0), *cert, 3);
  REQUIRE(e.radii.size() >= 2);
  for (std::size_t k = 1; k < e.radii.size(); ++k) CHECK(e.radii[k] >= e.radii[k - 1]);
  CHECK(e.radii.back() == doctest::Approx(e.radii.front()).epsilon(1e-2));
}

TEST_CASE("expanding interior on VdP is monotone") {
  auto sys = vdp(-1.0);
  auto cert = certify_subsystem(sys.subsystem(0));
  REQUIRE(cert);
  auto e = expand_roa(sys.subsystem(0), *cert, 5);
  for (std::size_t k = 1; k < e.radii.size(); ++k) CHECK(e.radii[k] >= e.radii[k - 1]);
  CHECK(sample_violations(sys.subsystem(0), e.certificate.V, 1000, 4) == 0);
}

TEST_CASE("certificate JSON round trip") {
  auto sys = build_decoupled_linear(2);
  auto certs = certify_all(sys);
  const auto path = std::filesystem::temp_directory_path() / "veclyap_certs_roundtrip.json";
  save_certificates(certs, path);
  auto back = load_certificates(sys.vars(), path);
  REQUIRE(back.size() == certs.size());
  for (std::size_t i = 0; i < certs.size(); ++i) {
    CHECK(back[i].V == certs[i].V);
    CHECK(back[i].subsystem_id == certs[i].subsystem_id);
    CHECK(back[i].gamma_max == certs[i].gamma_max);
  }
  CHECK(certificates_to_json(back) == certificates_to_json(certs));
  std::filesystem::remove(path);
  CHECK_THROWS(certificates_from_json(sys.vars(), "[{\"V\": 3}]"));
}
