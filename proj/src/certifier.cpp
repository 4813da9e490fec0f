#include "veclyap/certifier.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <random>
#include <sstream>

#include "veclyap/sampling.hpp"

namespace veclyap::certifier {

using sos::AffinePoly;
using sos::SosProgram;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t binomial(std::size_t n, std::size_t k) {
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

// ------------------------------------------------------------------ Mailbox

Mailbox::Mailbox(const InterconnectedSystem& sys) : sys_(&sys), inboxes_(sys.size()) {}

void Mailbox::post(const EpsilonMessage& m) { pending_.push_back(m); }

std::size_t Mailbox::barrier() {
  std::size_t delivered = 0;
  for (const auto& m : pending_) {
    const std::size_t sender = sys_->position(m.sender);
    for (std::size_t j = 0; j < sys_->size(); ++j) {
      const auto& nb = sys_->neighbors(j);
      if (std::binary_search(nb.begin(), nb.end(), sender)) {
        inboxes_[j][sender] = m;
        ++delivered;
      }
    }
  }
  pending_.clear();
  return delivered;
}

// ------------------------------------------------------- min_next_epsilon

NextEpsilon min_next_epsilon(const InterconnectedSystem& sys, std::size_t pos, const std::vector<Polynomial>& V,
                             const std::vector<double>& levels, const PolyVec* F, const CertifyOptions& opts) {
  NextEpsilon out;
  const double top = levels.at(pos);
  if (!(top > 0.0)) {
    out.value = 0.0;
    return out;
  }
  const Subsystem& sub = sys.subsystem(pos);
  const VarSetPtr& vars = sys.vars();
  const auto nvars = sys.neighborhood_vars(pos);
  const Polynomial nrm = squared_norm(vars, sub.sorted_states());
  const Polynomial dV = lie_derivative(V.at(pos), control::closed_loop_field(sub, F));
  const Polynomial fixed = -1.0 * dV - opts.margin * nrm;

  sos::ProgramOptions po = opts.sos;
  po.solver.max_iters = std::min(po.solver.max_iters, opts.bisection_max_iters);

  auto attempt = [&](double eps, unsigned mdeg) -> std::optional<ShellCertificate> {
    ++out.solves;
    const auto basis = sos::monomial_basis(nvars, mdeg);
    SosProgram prog(vars, fmt::format("shell_s{}", sub.id));
    const auto& s0 = prog.new_sos("sigma0", basis);
    const AffinePoly nb = control::neighbor_terms(prog, sys, pos, V, levels, basis, true);
    prog.add_sos(AffinePoly(fixed) - s0.expr * (V.at(pos) - eps) - nb, "shell");
    auto sol = prog.solve(po);
    if (!sol.feasible()) return std::nullopt;
    ShellCertificate c;
    c.multiplier_degree = mdeg;
    c.sigma0 = sol.value(s0);
    for (const auto& d : prog.decisions())
      if (d.name != "sigma0") c.sigmas.push_back(sol.value(d));
    c.relative_residual = sol.constraint_certificates.front().relative_residual;
    c.eigen_floor = sol.constraint_certificates.front().eigen_floor;
    return c;
  };

  auto gram_order = [&](unsigned mdeg) {
    unsigned vdeg = 0;
    for (std::size_t j : sys.neighbors(pos)) vdeg = std::max(vdeg, V.at(j).degree());
    const unsigned d = std::max(dV.degree(), mdeg + vdeg);
    return binomial(nvars.size() + (d + 1) / 2, (d + 1) / 2);
  };

  const unsigned d0 = opts.multiplier_degree;
  if (auto c = attempt(0.0, d0)) {
    out.value = 0.0;
    out.certificate = std::move(c);
    return out;
  }
  std::optional<ShellCertificate> best;
  unsigned degree = d0;
  for (unsigned d = d0; d <= std::max(d0, opts.multiplier_degree_cap); d += 2) {
    if (d > d0 && gram_order(d) > opts.max_gram_order) break;
    if ((best = attempt(top, d))) {
      degree = d;
      break;
    }
  }
  if (!best) return out;
  double lo = 0.0, hi = top;
  while (hi - lo > opts.eps_bar / 4.0) {
    const double mid = 0.5 * (lo + hi);
    if (auto c = attempt(mid, degree)) {
      hi = mid;
      best = std::move(c);
    } else {
      lo = mid;
    }
  }
  out.value = hi;
  out.certificate = std::move(best);
  return out;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Certified: return "Certified";
    case Verdict::CertifiedWithControl: return "CertifiedWithControl";
    case Verdict::NotCertified: return "NotCertified";
    case Verdict::Undetermined: return "Undetermined";
  }
  return "?";
}

const control::ControlLaw* EpsilonSchedule::controller(int subsystem_id, int k) const {
  for (const auto& c : controllers)
    if (c.subsystem_id == subsystem_id && c.iteration == k) return &c;
  return nullptr;
}

std::vector<Polynomial> lyapunov_by_position(const InterconnectedSystem& sys,
                                             const std::vector<lyap::LyapunovCertificate>& certs) {
  std::vector<Polynomial> out;
  for (const auto& sub : sys.subsystems()) {
    auto it = std::find_if(certs.begin(), certs.end(), [&](const auto& c) { return c.subsystem_id == sub.id; });
    if (it == certs.end()) throw ModelError(fmt::format("no Lyapunov certificate for subsystem {}", sub.id));
    if (!(*it->V.vars() == *sys.vars()))
      throw ModelError(fmt::format("certificate of subsystem {} uses another variable set", sub.id));
    out.push_back(it->V);
  }
  return out;
}

std::vector<double> levels_from_state(const std::vector<lyap::LyapunovCertificate>& certs,
                                      const std::vector<double>& x0) {
  std::vector<double> out;
  for (const auto& c : certs) out.push_back(c.V.evaluate(x0));
  return out;
}

// ------------------------------------------------------------------ certify

CertificationResult certify(const InterconnectedSystem& sys, const std::vector<lyap::LyapunovCertificate>& certs,
                            const std::vector<double>& v_o, const CertifyOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t m = sys.size();
  if (v_o.size() != m) throw UsageError(fmt::format("expected {} initial levels, got {}", m, v_o.size()));
  for (std::size_t i = 0; i < m; ++i)
    if (!(v_o[i] > 0.0 && v_o[i] <= 1.0))
      throw UsageError(fmt::format("initial level of subsystem {} is {}, outside (0, 1]", sys.subsystem(i).id, v_o[i]));
  if (!(opts.eps_bar > 0.0)) throw UsageError("eps_bar must be positive");
  const std::vector<Polynomial> V = lyapunov_by_position(sys, certs);

  CertificationResult res;
  for (const auto& sub : sys.subsystems()) res.subsystem_ids.push_back(sub.id);
  auto& sch = res.schedule;
  sch.levels.push_back(v_o);
  sch.controlled.emplace_back(m, false);

  Mailbox mailbox(sys);
  for (std::size_t i = 0; i < m; ++i) mailbox.post({sys.subsystem(i).id, 0, v_o[i]});
  mailbox.barrier();

  auto finish = [&](Verdict v) {
    res.verdict = v;
    res.iterations_used = static_cast<int>(sch.levels.size()) - 1;
    res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
  };

  for (int k = 0;; ++k) {
    if (k >= opts.max_rounds) {
      res.diagnostics.push_back(fmt::format("round limit {} reached before termination", opts.max_rounds));
      return finish(Verdict::Undetermined);
    }
    const std::vector<double> current = sch.levels[static_cast<std::size_t>(k)];
    struct Outcome {
      NextEpsilon next;
      std::optional<control::ControlLaw> law;
      bool control_refused = false;
    };
    std::vector<Outcome> outcomes(m);
    parallel_for(m, [&](std::size_t i) {
      std::vector<double> view(m, kNaN);
      for (const auto& [sender, msg] : mailbox.inbox(i)) view[sender] = msg.value;
      Outcome& o = outcomes[i];
      o.next = min_next_epsilon(sys, i, V, view, nullptr, opts);
      if (o.next.value || !opts.control) return;
      control::ControlOptions co = opts.control_options;
      co.sos = opts.sos;
      if (!control::needs_control(sys, i, V, view, co)) {
        o.control_refused = true;
        return;
      }
      o.law = control::synthesize(sys, i, V, view, k, co);
      if (o.law) o.next = min_next_epsilon(sys, i, V, view, &o.law->F, opts);
    });

    std::vector<double> next(m);
    std::vector<bool> controlled(m, false);
    std::vector<std::optional<ShellCertificate>> shell(m);
    std::vector<int> failing;
    for (std::size_t i = 0; i < m; ++i) {
      Outcome& o = outcomes[i];
      const int id = sys.subsystem(i).id;
      if (o.control_refused)
        res.diagnostics.push_back(fmt::format(
            "round {}: S{} infeasible but decrease on its level set is certified; no controller synthesized", k, id));
      if (o.law) {
        controlled[i] = true;
        if (std::find(res.controlled_subsystems.begin(), res.controlled_subsystems.end(), id) ==
            res.controlled_subsystems.end())
          res.controlled_subsystems.push_back(id);
        sch.controllers.push_back(*o.law);
      } else if (opts.control && !o.next.value && !o.control_refused) {
        res.diagnostics.push_back(fmt::format("round {}: controller synthesis failed for S{}", k, id));
      }
      if (o.next.value) {
        next[i] = *o.next.value;
        shell[i] = o.next.certificate;
      } else {
        next[i] = kNaN;
        failing.push_back(id);
      }
    }
    sch.levels.push_back(next);
    sch.controlled.push_back(controlled);
    sch.certificates.push_back(shell);

    if (!failing.empty()) {
      if (k == 0) {
        res.failing_subsystems = failing;
        std::string ids;
        for (int id : failing) ids += fmt::format("{}S{}", ids.empty() ? "" : ", ", id);
        res.diagnostics.push_back("round 0 infeasible for " + ids + "; iteration aborted");
        return finish(Verdict::NotCertified);
      }
      for (int id : failing)
        res.diagnostics.push_back(fmt::format(
            "round {}: S{} infeasible after a feasible round 0; treated as a solver limitation", k, id));
      return finish(Verdict::Undetermined);
    }

    for (std::size_t i = 0; i < m; ++i) mailbox.post({sys.subsystem(i).id, k + 1, next[i]});
    mailbox.barrier();

    if (std::all_of(next.begin(), next.end(), [](double e) { return e == 0.0; }))
      return finish(sch.controllers.empty() ? Verdict::Certified : Verdict::CertifiedWithControl);
    for (std::size_t i = 0; i < m; ++i) {
      if (current[i] > 0.0 && current[i] - next[i] < opts.eps_bar) {
        res.nonzero_limits = true;
        res.diagnostics.push_back(fmt::format(
            "round {}: progress of S{} below eps_bar with nonzero level {:.6f}; stability in the sense of Lyapunov only",
            k + 1, sys.subsystem(i).id, next[i]));
      }
    }
    if (res.nonzero_limits) return finish(Verdict::NotCertified);
  }
}

// ------------------------------------------------------------- shell check

ShellCheck check_shells(const InterconnectedSystem& sys, const std::vector<Polynomial>& V,
                        const CertificationResult& result, std::size_t samples_per_shell, std::uint64_t seed) {
  ShellCheck out;
  const auto& sch = result.schedule;
  std::vector<LevelSampler> samplers;
  for (std::size_t j = 0; j < sys.size(); ++j) samplers.emplace_back(V[j], sys.subsystem(j).sorted_states());
  std::mt19937_64 rng(seed);
  std::vector<double> x(sys.dim(), 0.0);
  for (std::size_t k = 0; k + 1 < sch.rounds(); ++k) {
    for (std::size_t i = 0; i < sys.size(); ++i) {
      const double top = sch.levels[k][i];
      const double bottom = sch.levels[k + 1][i];
      if (!(top > 0.0) || std::isnan(bottom)) continue;
      const Subsystem& sub = sys.subsystem(i);
      const control::ControlLaw* law = sch.controller(sub.id, static_cast<int>(k));
      CompiledPolynomial dv(lie_derivative(V[i], control::closed_loop_field(sub, law ? &law->F : nullptr)));
      ++out.shells;
      for (std::size_t s = 0; s < samples_per_shell; ++s) {
        std::fill(x.begin(), x.end(), 0.0);
        bool ok = samplers[i].sample(rng, std::max(bottom, 1e-9 * top), top, x);
        for (std::size_t j : sys.neighbors(i))
          if (j != i) ok = samplers[j].sample(rng, 0.0, std::max(sch.levels[k][j], 0.0), x) && ok;
        ++out.samples;
        if (!ok || !(dv(x.data()) < 0.0)) ++out.violations;
      }
    }
  }
  return out;
}

// ----------------------------------------------------------------- export

std::string schedule_to_csv(const CertificationResult& result) {
  const auto& sch = result.schedule;
  std::string out = "k";
  for (int id : result.subsystem_ids) out += fmt::format(",S{}", id);
  out += '\n';
  for (std::size_t k = 0; k < sch.rounds(); ++k) {
    out += fmt::format("{}", k);
    for (std::size_t i = 0; i < sch.levels[k].size(); ++i) {
      const double e = sch.levels[k][i];
      if (std::isnan(e))
        out += ",×";
      else
        out += fmt::format(",{:.6f}{}", e, sch.controlled[k][i] ? "*" : "");
    }
    out += '\n';
  }
  return out;
}

namespace {

using nlohmann::json;

json poly_list(const std::vector<Polynomial>& ps) {
  json a = json::array();
  for (const auto& p : ps) a.push_back(p.render());
  return a;
}

}  // namespace

std::string result_to_json(const CertificationResult& r) {
  const auto& sch = r.schedule;
  json levels = json::array(), controlled = json::array();
  for (std::size_t k = 0; k < sch.rounds(); ++k) {
    json row = json::array(), crow = json::array();
    for (std::size_t i = 0; i < sch.levels[k].size(); ++i) {
      if (std::isnan(sch.levels[k][i]))
        row.push_back(nullptr);
      else
        row.push_back(sch.levels[k][i]);
      crow.push_back(static_cast<bool>(sch.controlled[k][i]));
    }
    levels.push_back(row);
    controlled.push_back(crow);
  }
  json ctrl = json::array();
  for (const auto& c : sch.controllers) {
    json j{{"subsystem", c.subsystem_id},
           {"iteration", c.iteration},
           {"degree", c.degree},
           {"F", poly_list(c.F)},
           {"effort", c.effort}};
    if (c.rho) j["rho"] = c.rho->render();
    ctrl.push_back(std::move(j));
  }
  json shells = json::array();
  for (std::size_t k = 0; k < sch.certificates.size(); ++k)
    for (std::size_t i = 0; i < sch.certificates[k].size(); ++i) {
      const auto& c = sch.certificates[k][i];
      if (!c) continue;
      json j{{"k", k},
             {"subsystem", r.subsystem_ids.at(i)},
             {"multiplier_degree", c->multiplier_degree},
             {"sigmas", poly_list(c->sigmas)},
             {"relative_residual", c->relative_residual},
             {"eigen_floor", c->eigen_floor}};
      if (c->sigma0) j["sigma0"] = c->sigma0->render();
      shells.push_back(std::move(j));
    }
  json j{{"verdict", std::string(to_string(r.verdict))},
         {"subsystems", r.subsystem_ids},
         {"levels", levels},
         {"controlled", controlled},
         {"controllers", ctrl},
         {"shell_certificates", shells},
         {"failing_subsystems", r.failing_subsystems},
         {"controlled_subsystems", r.controlled_subsystems},
         {"iterations_used", r.iterations_used},
         {"nonzero_limits", r.nonzero_limits},
         {"diagnostics", r.diagnostics},
         {"wall_time", r.wall_time}};
  return j.dump(2);
}

CertificationResult result_from_json(const VarSetPtr& vars, const std::string& text) {
  CertificationResult r;
  try {
    const json j = json::parse(text);
    const std::string verdict = j.at("verdict").get<std::string>();
    bool known = false;
    for (Verdict v : {Verdict::Certified, Verdict::CertifiedWithControl, Verdict::NotCertified, Verdict::Undetermined})
      if (to_string(v) == verdict) {
        r.verdict = v;
        known = true;
      }
    if (!known) throw ModelError(fmt::format("unknown verdict '{}'", verdict));
    r.subsystem_ids = j.at("subsystems").get<std::vector<int>>();
    auto& sch = r.schedule;
    for (const auto& row : j.at("levels")) {
      std::vector<double> lv;
      for (const auto& e : row) lv.push_back(e.is_null() ? kNaN : e.get<double>());
      sch.levels.push_back(std::move(lv));
    }
    for (const auto& row : j.at("controlled")) {
      std::vector<bool> c;
      for (const auto& e : row) c.push_back(e.get<bool>());
      sch.controlled.push_back(std::move(c));
    }
    for (const auto& c : j.at("controllers")) {
      control::ControlLaw law;
      law.subsystem_id = c.at("subsystem").get<int>();
      law.iteration = c.at("iteration").get<int>();
      law.degree = c.at("degree").get<unsigned>();
      law.effort = c.value("effort", 0.0);
      for (const auto& p : c.at("F")) law.F.push_back(parse_polynomial(vars, p.get<std::string>()));
      if (c.contains("rho")) law.rho = parse_polynomial(vars, c.at("rho").get<std::string>());
      sch.controllers.push_back(std::move(law));
    }
    sch.certificates.assign(sch.levels.empty() ? 0 : sch.levels.size() - 1,
                            std::vector<std::optional<ShellCertificate>>(r.subsystem_ids.size()));
    for (const auto& s : j.value("shell_certificates", json::array())) {
      ShellCertificate c;
      c.multiplier_degree = s.at("multiplier_degree").get<unsigned>();
      for (const auto& p : s.at("sigmas")) c.sigmas.push_back(parse_polynomial(vars, p.get<std::string>()));
      if (s.contains("sigma0")) c.sigma0 = parse_polynomial(vars, s.at("sigma0").get<std::string>());
      c.relative_residual = s.value("relative_residual", 0.0);
      c.eigen_floor = s.value("eigen_floor", 0.0);
      const auto k = s.at("k").get<std::size_t>();
      const int id = s.at("subsystem").get<int>();
      auto it = std::find(r.subsystem_ids.begin(), r.subsystem_ids.end(), id);
      if (k < sch.certificates.size() && it != r.subsystem_ids.end())
        sch.certificates[k][static_cast<std::size_t>(it - r.subsystem_ids.begin())] = std::move(c);
    }
    r.failing_subsystems = j.value("failing_subsystems", std::vector<int>{});
    r.controlled_subsystems = j.value("controlled_subsystems", std::vector<int>{});
    r.iterations_used = j.value("iterations_used", 0);
    r.nonzero_limits = j.value("nonzero_limits", false);
    r.diagnostics = j.value("diagnostics", std::vector<std::string>{});
    r.wall_time = j.value("wall_time", 0.0);
  } catch (const json::exception& e) {
    throw ModelError(fmt::format("malformed certification result JSON: {}", e.what()));
  } catch (const UsageError& e) {
    throw ModelError(fmt::format("invalid certification result: {}", e.what()));
  }
  return r;
}

void save_result(const CertificationResult& result, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  os << result_to_json(result) << '\n';
}

CertificationResult load_result(const VarSetPtr& vars, const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error(fmt::format("cannot read {}", path.string()));
  std::stringstream ss;
  ss << is.rdbuf();
  return result_from_json(vars, ss.str());
}

}  // namespace veclyap::certifier
