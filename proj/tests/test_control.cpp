#include <doctest.h>

#include "helpers.hpp"
#include "veclyap/certifier.hpp"
#include "veclyap/control.hpp"

using namespace veclyap;

namespace {

std::vector<Polynomial> squares(const InterconnectedSystem& sys) {
  std::vector<Polynomial> out;
  for (const auto& sub : sys.subsystems()) out.push_back(squared_norm(sys.vars(), sub.sorted_states()));
  return out;
}

}  // namespace

TEST_CASE("needs_control on stable and unstable scalars") {
  auto stable = testing::scalar_system({{"-x1", "0"}});
  for (double eps : {0.1, 1.0, 3.0}) CHECK_FALSE(control::needs_control(stable, 0, squares(stable), {eps}));
  auto unstable = testing::scalar_system({{"x1", "0"}});
  CHECK(control::needs_control(unstable, 0, squares(unstable), {1.0}));
}

TEST_CASE("synthesis for x' = +x") {
  auto sys = testing::scalar_system({{"x1", "0"}});
  auto V = squares(sys);
  auto law = control::synthesize(sys, 0, V, {1.0}, 0);
  REQUIRE(law);
  REQUIRE(law->F.size() == 1);
  const Polynomial& F = law->F[0];
  CHECK(F.degree() == 1);
  CHECK(F.constant_term() == 0.0);
  const double c = -F.coefficient(Monomial::var(0));
  CHECK(c > 1.0);  // closed loop ẋ = (1 − c)x
  CHECK(control::level_set_violations(sys, 0, V, {1.0}, &law->F, 1000, 3) == 0);
  auto next = certifier::min_next_epsilon(sys, 0, V, {1.0}, &law->F);
  CHECK(next.value.has_value());
}

TEST_CASE("controllers act only on input channels of own states") {
  auto sys = system_from_json(R"({"variables":["a","b"],"subsystems":[
      {"id":1,"states":["a","b"],"f":["-a + b","a + b"],"g":["0","0"],"input_channels":["b"]}]})");
  auto V = squares(sys);
  auto law = control::synthesize(sys, 0, V, {1.0}, 0);
  REQUIRE(law);
  CHECK(law->F[0].is_zero());
  CHECK_FALSE(law->F[1].is_zero());
  const std::vector<std::size_t> own{0, 1};
  CHECK(law->F[1].depends_only_on(own));
  CHECK(law->F[1].degree() == 1);
}

TEST_CASE("certify with control on an unstable scalar") {
  auto sys = testing::scalar_system({{"x1", "0"}});
  lyap::LyapunovCertificate c(squares(sys)[0]);
  c.subsystem_id = 1;
  certifier::CertifyOptions off;
  CHECK(certifier::certify(sys, {c}, {1.0}, off).verdict == certifier::Verdict::NotCertified);
  certifier::CertifyOptions on;
  on.control = true;
  auto r = certifier::certify(sys, {c}, {1.0}, on);
  CHECK(r.verdict == certifier::Verdict::CertifiedWithControl);
  CHECK(r.controlled_subsystems == std::vector<int>{1});
  REQUIRE(r.schedule.controller(1, 0));
  CHECK(certifier::schedule_to_csv(r).find('*') != std::string::npos);
}
