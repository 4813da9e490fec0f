#include "veclyap/control.hpp"

#include <fmt/format.h>
#include <random>

#include "veclyap/sampling.hpp"

namespace veclyap::control {

using sos::AffineExpr;
using sos::AffinePoly;
using sos::SosProgram;

PolyVec closed_loop_field(const Subsystem& sub, const PolyVec* F) {
  PolyVec local;
  for (std::size_t k = 0; k < sub.dim(); ++k) {
    Polynomial p = sub.f[k] + sub.g[k];
    if (F) p += F->at(k);
    local.push_back(std::move(p));
  }
  return sub.embed(local);
}

AffinePoly neighbor_terms(SosProgram& prog, const InterconnectedSystem& sys, std::size_t pos,
                          const std::vector<Polynomial>& V, const std::vector<double>& levels,
                          const std::vector<Monomial>& basis, bool include_self) {
  AffinePoly out(sys.vars());
  for (std::size_t j : sys.neighbors(pos)) {
    if (j == pos && !include_self) continue;
    const auto& s = prog.new_sos(fmt::format("sigma_{}_{}", sys.subsystem(pos).id, sys.subsystem(j).id), basis);
    out += s.expr * (levels.at(j) - V.at(j));
  }
  return out;
}

bool needs_control(const InterconnectedSystem& sys, std::size_t pos, const std::vector<Polynomial>& V,
                   const std::vector<double>& levels, const ControlOptions& opts) {
  const Subsystem& sub = sys.subsystem(pos);
  const VarSetPtr& vars = sys.vars();
  const auto nvars = sys.neighborhood_vars(pos);
  const auto basis = sos::monomial_basis(nvars, opts.multiplier_degree);
  SosProgram prog(vars, fmt::format("needs_control_s{}", sub.id));
  const auto& rho = prog.new_free("rho", sos::monomials_up_to(nvars, opts.multiplier_degree));
  const AffinePoly nb = neighbor_terms(prog, sys, pos, V, levels, basis, false);
  const Polynomial dV = lie_derivative(V.at(pos), closed_loop_field(sub));
  const Polynomial nrm = squared_norm(vars, sub.sorted_states());
  prog.add_sos(AffinePoly(-1.0 * dV - opts.check_margin * nrm) - rho.expr * (levels.at(pos) - V.at(pos)) - nb,
               "level_decrease");
  return !prog.solve(opts.sos).feasible();
}

namespace {

std::optional<ControlLaw> synthesize_at(const InterconnectedSystem& sys, std::size_t pos,
                                        const std::vector<Polynomial>& V, const std::vector<double>& levels,
                                        int iteration, unsigned degree, const ControlOptions& opts) {
  const Subsystem& sub = sys.subsystem(pos);
  const VarSetPtr& vars = sys.vars();
  const auto own = sub.sorted_states();
  const auto nvars = sys.neighborhood_vars(pos);
  const auto basis = sos::monomial_basis(nvars, opts.multiplier_degree);

  std::vector<std::size_t> channels = sub.input_channels;
  if (opts.full_actuation) {
    channels.clear();
    for (std::size_t k = 0; k < sub.dim(); ++k) channels.push_back(k);
  }
  if (channels.empty()) return std::nullopt;

  SosProgram prog(vars, fmt::format("synthesize_s{}_k{}", sub.id, iteration));
  const auto feedback_monomials = sos::monomials_up_to(own, degree, 1);
  std::vector<const sos::DecisionPoly*> gains;
  AffinePoly dV_F(vars);
  for (std::size_t c : channels) {
    const auto& K = prog.new_free(fmt::format("F{}", c), feedback_monomials);
    gains.push_back(&K);
    dV_F += V.at(pos).differentiate(sub.states[c]) * K.expr;
  }
  const auto& rho = prog.new_free("rho", sos::monomials_up_to(nvars, opts.multiplier_degree));
  const AffinePoly nb = neighbor_terms(prog, sys, pos, V, levels, basis, false);
  const Polynomial dV = lie_derivative(V.at(pos), closed_loop_field(sub));
  const Polynomial nrm = squared_norm(vars, own);
  prog.add_sos(AffinePoly(-1.0 * dV - opts.margin * nrm) - dV_F - rho.expr * (levels.at(pos) - V.at(pos)) - nb,
               "closed_loop_decrease");

  std::vector<AffineExpr> coeffs;
  for (const auto* K : gains)
    for (std::size_t m = 0; m < K->basis.size(); ++m) coeffs.push_back(AffineExpr{0.0, {{K->first_var + m, 1.0}}});
  prog.minimize_squared_norm(coeffs);

  auto sol = prog.solve(opts.sos);
  if (!sol.feasible()) return std::nullopt;

  ControlLaw law;
  law.subsystem_id = sub.id;
  law.iteration = iteration;
  law.degree = degree;
  law.F.assign(sub.dim(), Polynomial(vars));
  for (std::size_t c = 0; c < channels.size(); ++c) law.F[channels[c]] = sol.value(*gains[c]);
  for (const auto& e : coeffs) {
    const double v = sol.value(e);
    law.effort += v * v;
  }
  law.rho = sol.value(rho);
  for (const auto& d : prog.decisions())
    if (d.kind == sos::DecisionPoly::Kind::Sos) law.sigmas.push_back(sol.value(d));
  return law;
}

}  // namespace

std::optional<ControlLaw> synthesize(const InterconnectedSystem& sys, std::size_t pos, const std::vector<Polynomial>& V,
                                     const std::vector<double>& levels, int iteration, const ControlOptions& opts) {
  if (opts.degree < 1) throw UsageError("controller degree must be at least 1");
  for (unsigned d = opts.degree; d <= std::max(opts.degree, opts.max_degree); ++d)
    if (auto law = synthesize_at(sys, pos, V, levels, iteration, d, opts)) return law;
  return std::nullopt;
}

std::size_t level_set_violations(const InterconnectedSystem& sys, std::size_t pos, const std::vector<Polynomial>& V,
                                 const std::vector<double>& levels, const PolyVec* F, std::size_t samples,
                                 std::uint64_t seed) {
  const Subsystem& sub = sys.subsystem(pos);
  CompiledPolynomial dv(lie_derivative(V.at(pos), closed_loop_field(sub, F)));
  std::vector<LevelSampler> samplers;
  for (std::size_t j : sys.neighbors(pos)) samplers.emplace_back(V.at(j), sys.subsystem(j).sorted_states());
  std::mt19937_64 rng(seed);
  std::vector<double> x(sys.dim(), 0.0);
  std::size_t bad = 0;
  const auto& nb = sys.neighbors(pos);
  for (std::size_t s = 0; s < samples; ++s) {
    bool ok = true;
    for (std::size_t q = 0; q < nb.size(); ++q) {
      const std::size_t j = nb[q];
      const double lo = j == pos ? levels[j] * (1.0 - 1e-6) : 0.0;
      const double hi = j == pos ? levels[j] * (1.0 + 1e-6) : levels[j];
      ok = samplers[q].sample(rng, lo, hi, x) && ok;
    }
    if (!ok || !(dv(x.data()) < 0.0)) ++bad;
  }
  return bad;
}

}  // namespace veclyap::control
