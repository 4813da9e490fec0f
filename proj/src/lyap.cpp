#include "veclyap/lyap.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "veclyap/sampling.hpp"

namespace veclyap::lyap {

using sos::AffineExpr;
using sos::AffinePoly;
using sos::SosProgram;

namespace {

unsigned even_ceil(unsigned d) { return d + (d % 2); }

unsigned field_degree(const PolyVec& f) {
  unsigned d = 0;
  for (const auto& p : f) d = std::max(d, p.degree());
  return d;
}

/// Lie derivative of an affine V along a fixed field.
AffinePoly affine_lie(const AffinePoly& V, const PolyVec& field) {
  AffinePoly out(V.vars());
  for (const auto& [m, e] : V.terms()) {
    const Polynomial dm = lie_derivative(Polynomial::monomial(V.vars(), m), field);
    out += dm * e;
  }
  return out;
}

/// Degree of the SOS multiplier σ such that σ·h matches degree `target` for deg h = hdeg.
unsigned multiplier_degree(unsigned target, unsigned hdeg) {
  const unsigned t = even_ceil(target);
  return t > hdeg ? even_ceil(t - hdeg) : 0;
}

std::vector<Monomial> sos_basis(const std::vector<std::size_t>& vars, unsigned degree) {
  return sos::monomial_basis(vars, degree);
}

/// Smallest ‖x‖² over sampled points of {V = level} (along random rays).
double min_norm_on_level(const Polynomial& V, const std::vector<std::size_t>& own, double level, std::size_t rays,
                         std::uint64_t seed) {
  LevelSampler sampler(V, own);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> d(own.size()), scratch;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < rays; ++r) {
    double n2 = 0.0;
    for (double& v : d) {
      v = normal(rng);
      n2 += v * v;
    }
    const double n = std::sqrt(n2);
    if (n < 1e-12) continue;
    for (double& v : d) v /= n;
    const double rad = sampler.radius_for_level(d, level, scratch);
    if (rad >= 0.0) best = std::min(best, rad * rad);
  }
  return best;
}

/// Smallest V over sampled points of the sphere ‖x‖² = beta.
double min_value_on_sphere(const Polynomial& V, const std::vector<std::size_t>& own, double beta, std::size_t rays,
                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> x(V.vars()->size(), 0.0);
  CompiledPolynomial cv(V);
  double best = std::numeric_limits<double>::infinity();
  const double r = std::sqrt(beta);
  for (std::size_t k = 0; k < rays; ++k) {
    double n2 = 0.0;
    for (std::size_t c : own) {
      x[c] = normal(rng);
      n2 += x[c] * x[c];
    }
    const double n = std::sqrt(n2);
    if (n < 1e-12) continue;
    for (std::size_t c : own) x[c] *= r / n;
    best = std::min(best, cv(x.data()));
  }
  return best;
}

struct DecreaseFit {
  bool ok = false;
  std::optional<Polynomial> s2;
};

/// −∇V·f − λ‖x‖² − s₂(level − V) ∈ Σ with s₂ ∈ Σ of the given degree,
/// together with V − λ‖x‖² ∈ Σ.
DecreaseFit fit_decrease(const Subsystem& sub, const Polynomial& V, double level, unsigned s2_degree,
                         const LyapOptions& opts) {
  const VarSetPtr& vars = V.vars();
  const auto own = sub.sorted_states();
  const Polynomial nrm = squared_norm(vars, own);
  SosProgram prog(vars, fmt::format("decrease_s{}", sub.id));
  const auto& s2 = prog.new_sos("s2", sos_basis(own, s2_degree));
  const Polynomial dV = lie_derivative(V, sub.embed(sub.f));
  prog.add_sos(AffinePoly(-1.0 * dV - opts.margin * nrm) - s2.expr * (level - V), "decrease");
  prog.add_sos(AffinePoly(V - opts.margin * nrm), "positivity");
  auto sol = prog.solve(opts.sos);
  DecreaseFit out;
  if (!sol.feasible()) return out;
  out.ok = true;
  out.s2 = sol.value(prog.decisions()[0]);
  return out;
}

struct BallFit {
  double r = 0.0;
  std::optional<Polynomial> s1;
};

/// Largest certified r with 1 − V − s₁(r − ‖x‖²) ∈ Σ.
BallFit fit_ball(const Subsystem& sub, const Polynomial& V, unsigned s1_degree, const LyapOptions& opts) {
  const VarSetPtr& vars = V.vars();
  const auto own = sub.sorted_states();
  const Polynomial nrm = squared_norm(vars, own);
  auto attempt = [&](double r) -> std::optional<Polynomial> {
    SosProgram prog(vars, fmt::format("ball_s{}", sub.id));
    const auto& s1 = prog.new_sos("s1", sos_basis(own, s1_degree));
    prog.add_sos(AffinePoly(1.0 - V) - s1.expr * (r - nrm), "containment");
    auto sol = prog.solve(opts.sos);
    if (!sol.feasible()) return std::nullopt;
    return sol.value(prog.decisions()[0]);
  };
  BallFit out;
  double hi = min_norm_on_level(V, own, 1.0, 2000, 11);
  if (!std::isfinite(hi)) hi = 1e3;
  if (auto s = attempt(hi)) return {hi, s};
  double lo = 0.0;
  while (hi - lo > opts.gamma_rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    if (auto s = attempt(mid)) {
      lo = mid;
      out = {mid, s};
    } else {
      hi = mid;
    }
  }
  return out;
}

}  // namespace

std::optional<LyapunovCertificate> find_initial_lyapunov(const Subsystem& sub, unsigned degree, double beta,
                                                         const LyapOptions& opts) {
  if (degree < 2 || degree % 2 != 0) throw UsageError(fmt::format("Lyapunov degree must be even and ≥ 2, got {}", degree));
  if (!(beta > 0.0)) throw UsageError("domain radius beta must be positive");
  const VarSetPtr& vars = sub.f.front().vars();
  const auto own = sub.sorted_states();
  const Polynomial nrm = squared_norm(vars, own);
  const Polynomial ball = beta - nrm;

  SosProgram prog(vars, fmt::format("lyap_s{}", sub.id));
  const auto& vdec = prog.new_free("V", sos::monomials_up_to(own, degree, 2));
  const AffinePoly V = vdec.expr;
  const auto& s1 = prog.new_sos("s1", sos_basis(own, multiplier_degree(degree, 2)));
  const AffinePoly dV = affine_lie(V, sub.embed(sub.f));
  const auto& s2 = prog.new_sos("s2", sos_basis(own, multiplier_degree(degree - 1 + field_degree(sub.f), 2)));
  prog.add_sos(V - AffinePoly(opts.margin * nrm) - s1.expr * ball, "positivity");
  prog.add_sos(-1.0 * dV - AffinePoly(opts.margin * nrm) - s2.expr * ball, "decrease");
  AffineExpr trace;
  for (std::size_t k = 0; k < vdec.basis.size(); ++k)
    if (vdec.basis[k].degree() == 2 && vdec.basis[k].factors().size() == 1) trace.linear[vdec.first_var + k] = 1.0;
  prog.add_equality(trace, static_cast<double>(own.size()));

  auto sol = prog.solve(opts.sos);
  if (!sol.feasible()) return std::nullopt;
  LyapunovCertificate cert(sol.value(vdec));
  cert.subsystem_id = sub.id;
  cert.degree = degree;
  cert.beta = beta;
  cert.gamma_max = 1.0;
  cert.positivity = sol.constraint_certificates.at(0);
  cert.decrease = sol.constraint_certificates.at(1);
  return cert;
}

ScaleResult scale_to_unit_roa(const Subsystem& sub, const Polynomial& V, double beta, const LyapOptions& opts) {
  const VarSetPtr& vars = V.vars();
  const auto own = sub.sorted_states();
  const Polynomial nrm = squared_norm(vars, own);
  const unsigned vdeg = V.degree();
  const unsigned s2_degree = multiplier_degree(vdeg - 1 + field_degree(sub.f), vdeg);

  auto feasible = [&](double gamma) {
    SosProgram contain(vars, fmt::format("contain_s{}", sub.id));
    const auto& s = contain.new_sos("s", sos_basis(own, multiplier_degree(vdeg, vdeg)));
    contain.add_sos(AffinePoly(beta - nrm) - s.expr * (gamma - V), "containment");
    if (!contain.solve(opts.sos).feasible()) return false;
    return fit_decrease(sub, V, gamma, s2_degree, opts).ok;
  };

  double hi = min_value_on_sphere(V, own, beta, 4000, 7);
  if (!(hi > 0.0) || !std::isfinite(hi)) throw std::runtime_error(fmt::format("subsystem {}: V is not positive on the domain boundary", sub.id));
  double lo = 0.0;
  if (feasible(hi)) {
    lo = hi;
  } else {
    while (hi - lo > opts.gamma_rel_tol * hi) {
      const double mid = 0.5 * (lo + hi);
      (feasible(mid) ? lo : hi) = mid;
    }
  }
  if (lo <= 0.0) throw std::runtime_error(fmt::format("subsystem {}: no positive certified level of V", sub.id));
  return {V * (1.0 / lo), lo};
}

double inscribed_ball(const Subsystem& sub, const Polynomial& V, unsigned s1_degree, const LyapOptions& opts) {
  return fit_ball(sub, V, s1_degree, opts).r;
}

Expansion expand_roa(const Subsystem& sub, const LyapunovCertificate& start, int iterations, const LyapOptions& opts) {
  const unsigned degree = std::max(opts.degree, start.degree);
  const VarSetPtr& vars = start.V.vars();
  const auto own = sub.sorted_states();
  const Polynomial nrm = squared_norm(vars, own);
  const PolyVec f = sub.embed(sub.f);
  const unsigned s1_degree = multiplier_degree(degree, 2);
  const unsigned s2_degree = multiplier_degree(degree - 1 + field_degree(sub.f), degree);

  Expansion out{start, {}};
  Polynomial best = start.V;
  BallFit ball = fit_ball(sub, best, s1_degree, opts);
  out.radii.push_back(ball.r);
  DecreaseFit dec = fit_decrease(sub, best, 1.0, s2_degree, opts);
  if (!dec.ok || !ball.s1) return out;

  const double domain_cap = *std::max_element(opts.betas.begin(), opts.betas.end());
  sos::ProgramOptions solve_opts = opts.sos;
  for (int it = 0; it < iterations; ++it) {
    SosProgram prog(vars, fmt::format("expand_s{}", sub.id));
    const auto& vdec = prog.new_free("V", sos::monomials_up_to(own, degree, 2));
    const auto& r = prog.new_scalar("r");
    const AffinePoly V = vdec.expr;
    prog.add_sos(V - AffinePoly(opts.margin * nrm), "positivity");
    prog.add_sos(-1.0 * affine_lie(V, f) - AffinePoly(opts.margin * nrm) - *dec.s2 * (AffinePoly(Polynomial::constant(vars, 1.0)) - V),
                 "decrease");
    prog.add_sos(AffinePoly(Polynomial::constant(vars, 1.0)) - V - (*ball.s1 * r.expr() - *ball.s1 * nrm),
                 "containment");
    prog.add_sos(Polynomial::constant(vars, 1.0) * AffineExpr{domain_cap, {{r.var, -1.0}}}, "domain_cap");
    AffineExpr objective;
    objective.linear[r.var] = -1.0;
    prog.minimize(objective);
    auto sol = prog.solve(solve_opts);
    const auto st = sol.raw.status;
    if (st != sdp::Status::Optimal && st != sdp::Status::MaxIterations) break;
    if (sol.raw.values.empty()) break;
    const Polynomial raw = sol.value(vdec);
    // re-certify with V fixed; convex combinations with the current V satisfy
    // the same fixed-multiplier constraints, so shorter steps are tried too
    std::optional<Polynomial> accepted;
    DecreaseFit cdec;
    BallFit cball;
    for (double theta : {1.0, 0.5, 0.25, 0.125}) {
      const Polynomial candidate = theta * raw + (1.0 - theta) * best;
      cdec = fit_decrease(sub, candidate, 1.0, s2_degree, opts);
      if (!cdec.ok) continue;
      cball = fit_ball(sub, candidate, s1_degree, opts);
      if (cball.s1 && cball.r > ball.r && cball.r <= domain_cap) {
        accepted = candidate;
        break;
      }
    }
    if (!accepted) {
      out.radii.push_back(ball.r);
      break;
    }
    const double growth = (cball.r - ball.r) / std::max(ball.r, 1e-12);
    best = *accepted;
    ball = cball;
    dec = cdec;
    out.radii.push_back(ball.r);
    if (growth < 1e-3) break;
  }
  out.certificate.V = best;
  out.certificate.degree = best.degree();
  return out;
}

std::optional<LyapunovCertificate> certify_subsystem(const Subsystem& sub, const LyapOptions& opts) {
  std::vector<double> betas = opts.betas;
  std::sort(betas.begin(), betas.end(), std::greater<>());
  for (double beta : betas) {
    auto cert = find_initial_lyapunov(sub, opts.degree, beta, opts);
    if (!cert) continue;
    try {
      ScaleResult s = scale_to_unit_roa(sub, cert->V, beta, opts);
      cert->V = s.V;
      cert->gamma_max = s.gamma_max;
      return cert;
    } catch (const std::runtime_error&) {
      continue;
    }
  }
  return std::nullopt;
}

std::vector<LyapunovCertificate> certify_all(const InterconnectedSystem& sys, const LyapOptions& opts,
                                             int expand_iterations) {
  std::vector<std::optional<LyapunovCertificate>> found(sys.size());
  parallel_for(sys.size(), [&](std::size_t s) {
    found[s] = certify_subsystem(sys.subsystem(s), opts);
    if (found[s] && expand_iterations > 0)
      found[s] = expand_roa(sys.subsystem(s), *found[s], expand_iterations, opts).certificate;
  });
  std::vector<LyapunovCertificate> out;
  std::string failed;
  for (std::size_t s = 0; s < sys.size(); ++s) {
    if (found[s])
      out.push_back(std::move(*found[s]));
    else
      failed += fmt::format("{}S{}", failed.empty() ? "" : ", ", sys.subsystem(s).id);
  }
  if (!failed.empty()) throw std::runtime_error("no Lyapunov function found for subsystem(s) " + failed);
  return out;
}

std::size_t sample_violations(const Subsystem& sub, const Polynomial& V, std::size_t samples, std::uint64_t seed) {
  const VarSetPtr& vars = V.vars();
  LevelSampler sampler(V, sub.sorted_states());
  CompiledPolynomial cv(V);
  CompiledPolynomial cdv(lie_derivative(V, sub.embed(sub.f)));
  std::mt19937_64 rng(seed);
  std::vector<double> x(vars->size(), 0.0);
  std::size_t bad = 0;
  for (std::size_t k = 0; k < samples; ++k) {
    if (!sampler.sample(rng, 1e-9, 1.0, x)) {
      ++bad;
      continue;
    }
    if (!(cv(x.data()) > 0.0) || !(cdv(x.data()) < 0.0)) ++bad;
  }
  return bad;
}

// -------------------------------------------------------------------- JSON

namespace {

using nlohmann::json;

json gram_to_json(const sos::GramCertificate& g, const VarSetPtr& vars) {
  json basis = json::array();
  for (const auto& m : g.basis) basis.push_back(Polynomial::monomial(vars, m).render());
  json rows = json::array();
  for (Eigen::Index i = 0; i < g.gram.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < g.gram.cols(); ++j) row.push_back(g.gram(i, j));
    rows.push_back(row);
  }
  return {{"basis", basis}, {"gram", rows}, {"eigen_floor", g.eigen_floor}, {"relative_residual", g.relative_residual}};
}

sos::GramCertificate gram_from_json(const json& j, const VarSetPtr& vars) {
  sos::GramCertificate g;
  for (const auto& b : j.at("basis")) {
    const Polynomial p = parse_polynomial(vars, b.get<std::string>());
    if (p.terms().size() != 1) throw UsageError("Gram basis entry is not a monomial");
    g.basis.push_back(p.terms().begin()->first);
  }
  const auto& rows = j.at("gram");
  const auto n = static_cast<Eigen::Index>(rows.size());
  g.gram.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k) g.gram(i, k) = rows.at(i).at(k).get<double>();
  g.eigen_floor = j.value("eigen_floor", 0.0);
  g.relative_residual = j.value("relative_residual", 0.0);
  return g;
}

}  // namespace

std::string certificates_to_json(const std::vector<LyapunovCertificate>& certs) {
  json arr = json::array();
  for (const auto& c : certs) {
    json j{{"subsystem", c.subsystem_id},
           {"V", c.V.render()},
           {"degree", c.degree},
           {"beta", c.beta},
           {"gamma_max", c.gamma_max}};
    if (c.positivity) j["positivity"] = gram_to_json(*c.positivity, c.V.vars());
    if (c.decrease) j["decrease"] = gram_to_json(*c.decrease, c.V.vars());
    arr.push_back(std::move(j));
  }
  return json{{"certificates", arr}}.dump(2);
}

std::vector<LyapunovCertificate> certificates_from_json(const VarSetPtr& vars, const std::string& text) {
  std::vector<LyapunovCertificate> out;
  try {
    const json j = json::parse(text);
    for (const auto& c : j.at("certificates")) {
      LyapunovCertificate cert(parse_polynomial(vars, c.at("V").get<std::string>()));
      cert.subsystem_id = c.at("subsystem").get<int>();
      cert.degree = c.value("degree", cert.V.degree());
      cert.beta = c.value("beta", 0.0);
      cert.gamma_max = c.value("gamma_max", 1.0);
      if (c.contains("positivity")) cert.positivity = gram_from_json(c.at("positivity"), vars);
      if (c.contains("decrease")) cert.decrease = gram_from_json(c.at("decrease"), vars);
      out.push_back(std::move(cert));
    }
  } catch (const json::exception& e) {
    throw ModelError(fmt::format("malformed certificate JSON: {}", e.what()));
  } catch (const UsageError& e) {
    throw ModelError(fmt::format("invalid certificate file: {}", e.what()));
  }
  return out;
}

void save_certificates(const std::vector<LyapunovCertificate>& certs, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  os << certificates_to_json(certs) << '\n';
}

std::vector<LyapunovCertificate> load_certificates(const VarSetPtr& vars, const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error(fmt::format("cannot read {}", path.string()));
  std::stringstream ss;
  ss << is.rdbuf();
  return certificates_from_json(vars, ss.str());
}

}  // namespace veclyap::lyap
