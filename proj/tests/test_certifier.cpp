#include <doctest.h>

#include <json.hpp>

#include "helpers.hpp"
#include "veclyap/certifier.hpp"

using namespace veclyap;
using namespace veclyap::certifier;

namespace {

std::vector<lyap::LyapunovCertificate> squares(const InterconnectedSystem& sys) {
  std::vector<lyap::LyapunovCertificate> out;
  for (const auto& sub : sys.subsystems()) {
    lyap::LyapunovCertificate c(squared_norm(sys.vars(), sub.sorted_states()));
    c.subsystem_id = sub.id;
    out.push_back(std::move(c));
  }
  return out;
}

std::string without_wall_time(const std::string& json_text) {
  auto j = nlohmann::json::parse(json_text);
  j.erase("wall_time");
  return j.dump();
}

}  // namespace

TEST_CASE("decoupled linear pair certifies in one round") {
  auto sys = build_decoupled_linear(2);
  auto certs = lyap::certify_all(sys);
  auto r = certify(sys, certs, {1.0, 1.0});
  CHECK(r.verdict == Verdict::Certified);
  REQUIRE(r.schedule.rounds() == 2);
  CHECK(r.schedule.levels[0] == std::vector<double>{1.0, 1.0});
  CHECK(r.schedule.levels[1] == std::vector<double>{0.0, 0.0});
  CHECK(schedule_to_csv(r) == "k,S1,S2\n0,1.000000,1.000000\n1,0.000000,0.000000\n");
  CHECK(r.iterations_used == 1);
}

TEST_CASE("scalar decrease reaches zero in one step") {
  auto sys = testing::scalar_system({{"-x1", "0"}});
  auto V = lyapunov_by_position(sys, squares(sys));
  auto next = min_next_epsilon(sys, 0, V, {1.0}, nullptr);
  REQUIRE(next.value);
  CHECK(*next.value == 0.0);
}

TEST_CASE("round-0 failure without control") {
  auto sys = testing::scalar_system({{"-x1", "0"}, {"x2", "0"}});
  auto V = lyapunov_by_position(sys, squares(sys));
  CHECK_FALSE(min_next_epsilon(sys, 1, V, {1.0, 1.0}, nullptr).value);
  auto r = certify(sys, squares(sys), {1.0, 1.0});
  CHECK(r.verdict == Verdict::NotCertified);
  CHECK(r.failing_subsystems == std::vector<int>{2});
  CHECK(schedule_to_csv(r).find("×") != std::string::npos);
}

TEST_CASE("cascade: first level matches the analytic bound") {
  // ẋ₁ = −x₁ + a x₂: with V = x², decrease on {x₁² = ε} holds iff ε > a² x₂²
  const double a = 0.5;
  auto sys = testing::scalar_system({{"-x1", "0.5*x2"}, {"-x2", "0"}});
  CertifyOptions opts;
  auto r = certify(sys, squares(sys), {1.0, 1.0}, opts);
  CHECK(r.verdict == Verdict::Certified);
  REQUIRE(r.schedule.rounds() == 3);
  // sound side is exact up to the bisection resolution; SDP conservatism only raises the level
  CHECK(r.schedule.levels[1][0] >= a * a - opts.eps_bar / 4.0);
  CHECK(r.schedule.levels[1][0] <= a * a * 1.02);
  CHECK(r.schedule.levels[1][1] == 0.0);
  CHECK(r.schedule.levels[2][0] == 0.0);

  auto check = check_shells(sys, lyapunov_by_position(sys, squares(sys)), r, 1000, 5);
  CHECK(check.violations == 0);
  CHECK(check.shells == 3);
}

TEST_CASE("round limit gives Undetermined") {
  auto sys = testing::scalar_system({{"-x1", "0.5*x2"}, {"-x2", "0"}});
  CertifyOptions opts;
  opts.max_rounds = 1;
  auto r = certify(sys, squares(sys), {1.0, 1.0}, opts);
  CHECK(r.verdict == Verdict::Undetermined);
  CHECK_FALSE(r.diagnostics.empty());
}

TEST_CASE("stalled progress at a nonzero level is not certified") {
  auto sys = testing::scalar_system({{"-x1", "0.99*x2"}, {"-x2", "0"}});
  CertifyOptions opts;
  opts.eps_bar = 0.05;
  auto r = certify(sys, squares(sys), {1.0, 1.0}, opts);
  CHECK(r.verdict == Verdict::NotCertified);
  CHECK(r.nonzero_limits);
}

TEST_CASE("mailbox delivers only after the barrier and only to listeners") {
  auto sys = testing::scalar_system({{"-x1", "0"}, {"-x2", "x1"}, {"-x3", "x2"}});
  Mailbox box(sys);
  box.post({1, 0, 0.7});
  CHECK(box.inbox(1).empty());
  const std::size_t delivered = box.barrier();
  CHECK(delivered == 2);  // S1 itself and S2
  CHECK(box.inbox(0).count(0) == 1);
  CHECK(box.inbox(1).at(0).value == 0.7);
  CHECK(box.inbox(2).empty());
}

TEST_CASE("certification is deterministic") {
  auto sys = testing::scalar_system({{"-x1", "0.5*x2"}, {"-x2", "0.2*x1"}});
  auto a = certify(sys, squares(sys), {1.0, 0.8});
  auto b = certify(sys, squares(sys), {1.0, 0.8});
  CHECK(schedule_to_csv(a) == schedule_to_csv(b));
  CHECK(without_wall_time(result_to_json(a)) == without_wall_time(result_to_json(b)));
}

TEST_CASE("result JSON round trip") {
  auto sys = testing::scalar_system({{"-x1", "0.5*x2"}, {"-x2", "0"}});
  auto r = certify(sys, squares(sys), {1.0, 1.0});
  auto back = result_from_json(sys.vars(), result_to_json(r));
  CHECK(result_to_json(back) == result_to_json(r));
  CHECK_THROWS_AS(result_from_json(sys.vars(), "{\"verdict\": \"Maybe\"}"), ModelError);
}

TEST_CASE("levels from a concrete state") {
  auto sys = build_decoupled_linear(2);
  auto certs = squares(sys);
  auto lv = levels_from_state(certs, {0.5, 0.0, 0.0, 0.2});
  CHECK(lv[0] == doctest::Approx(0.25));
  CHECK(lv[1] == doctest::Approx(0.04));
}
