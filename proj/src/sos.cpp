#include "veclyap/sos.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <ostream>
#include <set>
#include <unordered_map>

namespace veclyap::sos {

namespace {

constexpr double kPrune = Polynomial::kZeroThreshold;

bool is_zero(const AffineExpr& e) { return std::abs(e.constant) < kPrune && e.linear.empty(); }

}  // namespace

// --------------------------------------------------------------- AffineExpr

AffineExpr& AffineExpr::operator+=(const AffineExpr& o) {
  constant += o.constant;
  for (const auto& [v, a] : o.linear) {
    auto [it, inserted] = linear.emplace(v, a);
    if (!inserted) {
      it->second += a;
      if (std::abs(it->second) < kPrune) linear.erase(it);
    }
  }
  return *this;
}

AffineExpr& AffineExpr::operator-=(const AffineExpr& o) {
  constant -= o.constant;
  for (const auto& [v, a] : o.linear) {
    auto [it, inserted] = linear.emplace(v, -a);
    if (!inserted) {
      it->second -= a;
      if (std::abs(it->second) < kPrune) linear.erase(it);
    }
  }
  return *this;
}

AffineExpr& AffineExpr::operator*=(double s) {
  constant *= s;
  for (auto it = linear.begin(); it != linear.end();) {
    it->second *= s;
    if (std::abs(it->second) < kPrune)
      it = linear.erase(it);
    else
      ++it;
  }
  return *this;
}

double AffineExpr::evaluate(const std::vector<double>& values) const {
  double out = constant;
  for (const auto& [v, a] : linear) out += a * values.at(v);
  return out;
}

AffineExpr operator+(AffineExpr a, const AffineExpr& b) { return a += b; }
AffineExpr operator-(AffineExpr a, const AffineExpr& b) { return a -= b; }
AffineExpr operator*(double s, AffineExpr a) { return a *= s; }

// --------------------------------------------------------------- AffinePoly

AffinePoly::AffinePoly(VarSetPtr vars) : vars_(std::move(vars)) {}

AffinePoly::AffinePoly(const Polynomial& p) : vars_(p.vars()) {
  for (const auto& [m, c] : p.terms()) terms_.emplace(m, AffineExpr{c, {}});
}

unsigned AffinePoly::degree() const { return terms_.empty() ? 0 : terms_.rbegin()->first.degree(); }
unsigned AffinePoly::min_degree() const { return terms_.empty() ? 0 : terms_.begin()->first.degree(); }

std::vector<Monomial> AffinePoly::support() const {
  std::vector<Monomial> out;
  for (const auto& [m, e] : terms_) out.push_back(m);
  return out;
}

void AffinePoly::require_same_vars(const AffinePoly& o) const {
  if (vars_ != o.vars_ && !(*vars_ == *o.vars_))
    throw UsageError("affine polynomial operands use different variable sets");
}

void AffinePoly::add_term(const Monomial& m, const AffineExpr& e) {
  auto [it, inserted] = terms_.emplace(m, e);
  if (!inserted) it->second += e;
  if (is_zero(it->second)) terms_.erase(it);
}

AffinePoly& AffinePoly::operator+=(const AffinePoly& o) {
  require_same_vars(o);
  for (const auto& [m, e] : o.terms_) add_term(m, e);
  return *this;
}

AffinePoly& AffinePoly::operator-=(const AffinePoly& o) {
  require_same_vars(o);
  for (const auto& [m, e] : o.terms_) add_term(m, -1.0 * e);
  return *this;
}

AffinePoly AffinePoly::operator+(const AffinePoly& o) const {
  AffinePoly out = *this;
  out += o;
  return out;
}

AffinePoly AffinePoly::operator-(const AffinePoly& o) const {
  AffinePoly out = *this;
  out -= o;
  return out;
}

AffinePoly AffinePoly::operator-() const { return *this * -1.0; }

AffinePoly AffinePoly::operator*(double s) const {
  AffinePoly out(vars_);
  for (const auto& [m, e] : terms_) out.add_term(m, s * e);
  return out;
}

AffinePoly AffinePoly::operator*(const Polynomial& p) const {
  if (vars_ != p.vars() && !(*vars_ == *p.vars()))
    throw UsageError("affine polynomial operands use different variable sets");
  std::unordered_map<Monomial, AffineExpr, MonomialHash> acc;
  for (const auto& [ma, ea] : terms_)
    for (const auto& [mb, cb] : p.terms()) acc[ma * mb] += cb * ea;
  AffinePoly out(vars_);
  for (auto& [m, e] : acc)
    if (!is_zero(e)) out.terms_.emplace(m, std::move(e));
  return out;
}

AffinePoly AffinePoly::operator*(const AffinePoly& o) const {
  const bool lhs_const =
      std::all_of(terms_.begin(), terms_.end(), [](const auto& kv) { return kv.second.is_constant(); });
  const bool rhs_const =
      std::all_of(o.terms_.begin(), o.terms_.end(), [](const auto& kv) { return kv.second.is_constant(); });
  if (!lhs_const && !rhs_const)
    throw UsageError("product of two decision-dependent polynomials is not affine in the decisions");
  const AffinePoly& fixed = lhs_const ? *this : o;
  const AffinePoly& other = lhs_const ? o : *this;
  Polynomial::TermMap t;
  for (const auto& [m, e] : fixed.terms_) t.emplace(m, e.constant);
  return other * Polynomial(fixed.vars_, std::move(t));
}

Polynomial AffinePoly::evaluate(const std::vector<double>& values) const {
  Polynomial::TermMap t;
  for (const auto& [m, e] : terms_) t.emplace(m, e.evaluate(values));
  return Polynomial(vars_, std::move(t));
}

AffinePoly operator*(const Polynomial& p, const AffineExpr& e) {
  AffinePoly out(p.vars());
  for (const auto& [m, c] : p.terms()) out.add_term(m, c * e);
  return out;
}

// ------------------------------------------------------------------ bases

std::vector<Monomial> monomials_up_to(std::span<const std::size_t> vars, unsigned max_degree, unsigned min_degree) {
  std::vector<std::size_t> sorted(vars.begin(), vars.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<Monomial> out;
  std::vector<Monomial::Factor> current;
  // depth-first over exponent vectors with total degree ≤ max_degree
  auto rec = [&](auto&& self, std::size_t pos, unsigned remaining) -> void {
    if (pos == sorted.size()) {
      Monomial m(current);
      if (m.degree() >= min_degree) out.push_back(std::move(m));
      return;
    }
    for (unsigned e = 0; e <= remaining; ++e) {
      if (e > 0) current.emplace_back(static_cast<std::uint32_t>(sorted[pos]), e);
      self(self, pos + 1, remaining - e);
      if (e > 0) current.pop_back();
    }
  };
  rec(rec, 0, max_degree);
  std::sort(out.begin(), out.end(), GrlexLess{});
  return out;
}

std::vector<Monomial> monomial_basis(std::span<const std::size_t> vars, unsigned degree) {
  if (degree % 2 != 0) throw UsageError(fmt::format("SOS degree must be even, got {}", degree));
  return monomials_up_to(vars, degree / 2);
}

// --------------------------------------------------------- Gram certificates

Polynomial GramCertificate::reconstruct(const VarSetPtr& vars) const {
  Polynomial::TermMap acc;
  const std::size_t n = basis.size();
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i <= j; ++i) {
      const double q = gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      acc[basis[i] * basis[j]] += (i == j ? 1.0 : 2.0) * q;
    }
  return Polynomial(vars, std::move(acc));
}

GramCertificate make_certificate(const Polynomial& p, std::vector<Monomial> basis, Eigen::MatrixXd gram) {
  GramCertificate c;
  c.basis = std::move(basis);
  c.gram = std::move(gram);
  if (c.gram.rows() == 0) {
    c.eigen_floor = 0.0;
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.gram, Eigen::EigenvaluesOnly);
    c.eigen_floor = es.eigenvalues().minCoeff();
  }
  // exact coefficient difference, computed without pruning
  std::map<Monomial, double, GrlexLess> diff;
  for (const auto& [m, v] : p.terms()) diff[m] += v;
  const std::size_t n = c.basis.size();
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i <= j; ++i)
      diff[c.basis[i] * c.basis[j]] -=
          (i == j ? 1.0 : 2.0) * c.gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  for (const auto& [m, v] : diff) c.residual = std::max(c.residual, std::abs(v));
  c.relative_residual = c.residual / (1.0 + p.max_abs_coefficient());
  return c;
}

bool certificate_valid(const GramCertificate& c) {
  return c.relative_residual <= kGramRelTol && c.eigen_floor >= -kEigenFloorTol;
}

std::optional<GramCertificate> polish_gram(const Polynomial& p, const std::vector<Monomial>& basis,
                                           const Eigen::MatrixXd& approx) {
  const auto n = static_cast<Eigen::Index>(basis.size());
  if (n == 0 || approx.rows() != n || approx.cols() != n || !approx.allFinite()) return std::nullopt;
  const Eigen::MatrixXd sym = 0.5 * (approx + approx.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  const Eigen::VectorXd lambda = es.eigenvalues();
  const double top = lambda.maxCoeff();
  if (!(top > 0.0)) return std::nullopt;

  // Coefficient rows: one per monomial of zᵀQz, over the (i, j) pairs producing it.
  std::map<Monomial, std::vector<std::pair<Eigen::Index, Eigen::Index>>, GrlexLess> pairs;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      pairs[basis[static_cast<std::size_t>(i)] * basis[static_cast<std::size_t>(j)]].push_back({i, j});
  for (const auto& [m, v] : p.terms())
    if (!pairs.count(m)) return std::nullopt;

  for (double tau : {1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3}) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index k = 0; k < n; ++k)
      if (lambda[k] > tau * top) keep.push_back(k);
    const auto r = static_cast<Eigen::Index>(keep.size());
    Eigen::MatrixXd U(n, r);
    for (Eigen::Index c = 0; c < r; ++c) U.col(c) = es.eigenvectors().col(keep[static_cast<std::size_t>(c)]);

    // unknowns: upper triangle of S
    std::vector<std::pair<Eigen::Index, Eigen::Index>> slots;
    for (Eigen::Index b = 0; b < r; ++b)
      for (Eigen::Index a = 0; a <= b; ++a) slots.push_back({a, b});
    const auto cols = static_cast<Eigen::Index>(slots.size());
    Eigen::MatrixXd A(static_cast<Eigen::Index>(pairs.size()), cols);
    Eigen::VectorXd rhs(A.rows());
    Eigen::Index row = 0;
    for (const auto& [m, ij] : pairs) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        const auto [a, b] = slots[static_cast<std::size_t>(c)];
        double coef = 0.0;
        for (const auto& [i, j] : ij) coef += U(i, a) * U(j, b) + (a == b ? 0.0 : U(i, b) * U(j, a));
        A(row, c) = coef;
      }
      rhs[row] = p.coefficient(m);
      ++row;
    }
    const Eigen::MatrixXd S0 = U.transpose() * sym * U;
    Eigen::VectorXd s0(cols);
    for (Eigen::Index c = 0; c < cols; ++c) s0[c] = S0(slots[static_cast<std::size_t>(c)].first, slots[static_cast<std::size_t>(c)].second);
    const Eigen::VectorXd delta = A.completeOrthogonalDecomposition().solve(rhs - A * s0);
    Eigen::MatrixXd S(r, r);
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto [a, b] = slots[static_cast<std::size_t>(c)];
      S(a, b) = S(b, a) = s0[c] + delta[c];
    }
    GramCertificate cert = make_certificate(p, basis, U * S * U.transpose());
    if (certificate_valid(cert)) return cert;
  }
  return std::nullopt;
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Feasible: return "Feasible";
    case Outcome::Infeasible: return "Infeasible";
    case Outcome::Undetermined: return "Undetermined";
  }
  return "?";
}

// --------------------------------------------------------------- SosProgram

SosProgram::SosProgram(VarSetPtr vars, std::string name, bool prune_zero_diagonals)
    : vars_(std::move(vars)), prune_zero_diagonals_(prune_zero_diagonals), sdp_(std::move(name)) {
  if (!vars_) throw UsageError("SOS program requires a variable set");
}

const DecisionPoly& SosProgram::new_sos(std::string name, std::vector<Monomial> basis) {
  if (basis.empty()) throw UsageError("SOS decision polynomial needs a nonempty basis");
  const std::size_t blk = sdp_.add_block(basis.size());
  AffinePoly expr(vars_);
  for (std::size_t j = 0; j < basis.size(); ++j)
    for (std::size_t i = 0; i <= j; ++i)
      expr.add_term(basis[i] * basis[j], AffineExpr{0.0, {{sdp_.entry(blk, i, j), i == j ? 1.0 : 2.0}}});
  decisions_.push_back({std::move(name), DecisionPoly::Kind::Sos, std::move(basis), blk, 0, std::move(expr)});
  return decisions_.back();
}

const DecisionPoly& SosProgram::new_free(std::string name, std::vector<Monomial> monomials) {
  if (monomials.empty()) throw UsageError("free decision polynomial needs at least one monomial");
  const sdp::VarIndex first = sdp_.add_free(monomials.size());
  AffinePoly expr(vars_);
  for (std::size_t k = 0; k < monomials.size(); ++k) expr.add_term(monomials[k], AffineExpr{0.0, {{first + k, 1.0}}});
  decisions_.push_back({std::move(name), DecisionPoly::Kind::Free, std::move(monomials), 0, first, std::move(expr)});
  return decisions_.back();
}

const ScalarDecision& SosProgram::new_scalar(std::string name) {
  scalars_.push_back({std::move(name), sdp_.add_free(1)});
  return scalars_.back();
}

std::vector<Monomial> SosProgram::choose_basis(const AffinePoly& expr) const {
  const std::vector<Monomial> support = expr.support();
  if (support.empty()) return {};
  const unsigned hi = expr.degree() / 2;
  const unsigned lo = (expr.min_degree() + 1) / 2;
  std::map<std::size_t, unsigned> max_exp;
  for (const Monomial& m : support)
    for (const auto& [v, e] : m.factors()) max_exp[v] = std::max(max_exp[v], e);
  std::vector<std::size_t> vars;
  for (const auto& [v, e] : max_exp) vars.push_back(v);
  std::vector<Monomial> basis;
  for (Monomial& m : monomials_up_to(vars, hi, lo)) {
    bool ok = true;
    for (const auto& [v, e] : m.factors()) ok = ok && 2 * e <= max_exp[v];
    if (ok) basis.push_back(std::move(m));
  }
  if (prune_zero_diagonals_) {
    const std::set<Monomial, GrlexLess> supp(support.begin(), support.end());
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t k = 0; k < basis.size(); ++k) {
        const Monomial sq = basis[k] * basis[k];
        if (supp.count(sq)) continue;
        bool cross = false;
        for (std::size_t a = 0; a < basis.size() && !cross; ++a)
          for (std::size_t b = a + 1; b < basis.size() && !cross; ++b)
            cross = a != k && b != k && basis[a] * basis[b] == sq;
        if (!cross) {
          basis.erase(basis.begin() + static_cast<std::ptrdiff_t>(k));
          changed = true;
          break;
        }
      }
    }
  }
  return basis;
}

void SosProgram::add_sos(const AffinePoly& expr, std::string name) {
  if (expr.vars() != vars_ && !(*expr.vars() == *vars_))
    throw UsageError("SOS constraint uses a different variable set");
  std::vector<Monomial> basis = choose_basis(expr);
  ConstraintInfo info{std::move(name), expr, basis, 0};
  if (basis.empty()) {
    // only the zero polynomial is representable; require every coefficient to vanish
    add_zero(expr, info.name);
    constraints_.push_back(std::move(info));
    return;
  }
  info.block = sdp_.add_block(basis.size());
  std::map<Monomial, sdp::LinearForm, GrlexLess> rows;
  for (std::size_t j = 0; j < basis.size(); ++j)
    for (std::size_t i = 0; i <= j; ++i)
      rows[basis[i] * basis[j]].push_back({sdp_.entry(info.block, i, j), i == j ? 1.0 : 2.0});
  for (const auto& [m, e] : expr.terms()) rows[m];
  for (auto& [m, form] : rows) {
    double rhs = 0.0;
    auto it = expr.terms().find(m);
    if (it != expr.terms().end()) {
      rhs = it->second.constant;
      for (const auto& [v, a] : it->second.linear) form.push_back({v, -a});
    }
    sdp_.add_constraint(std::move(form), rhs);
  }
  constraints_.push_back(std::move(info));
}

void SosProgram::add_zero(const AffinePoly& expr, std::string /*name*/) {
  for (const auto& [m, e] : expr.terms()) {
    sdp::LinearForm form;
    for (const auto& [v, a] : e.linear) form.push_back({v, a});
    sdp_.add_constraint(std::move(form), -e.constant);
  }
}

void SosProgram::add_equality(const AffineExpr& lhs, double rhs) {
  sdp::LinearForm form;
  for (const auto& [v, a] : lhs.linear) form.push_back({v, a});
  sdp_.add_constraint(std::move(form), rhs - lhs.constant);
}

void SosProgram::minimize(const AffineExpr& objective) {
  sdp::LinearForm form;
  for (const auto& [v, a] : objective.linear) form.push_back({v, a});
  sdp_.set_objective(std::move(form));
  objective_ = objective;
}

void SosProgram::minimize_squared_norm(const std::vector<AffineExpr>& entries) {
  const std::size_t p = entries.size();
  const std::size_t blk = sdp_.add_block(p + 1);
  for (std::size_t k = 0; k < p; ++k) {
    sdp::LinearForm form{{sdp_.entry(blk, 0, k + 1), 1.0}};
    for (const auto& [v, a] : entries[k].linear) form.push_back({v, -a});
    sdp_.add_constraint(std::move(form), entries[k].constant);
    for (std::size_t l = k; l < p; ++l) sdp_.add_constraint({{sdp_.entry(blk, k + 1, l + 1), 1.0}}, k == l ? 1.0 : 0.0);
  }
  sdp_.set_objective({{sdp_.entry(blk, 0, 0), 1.0}});
  epigraph_block_ = blk;
}

void SosProgram::dump(std::ostream& os) const {
  os << fmt::format("sos program '{}': {} SDP variables, {} equality rows\n", sdp_.name(), sdp_.num_vars(),
                    sdp_.constraints().size());
  for (const auto& d : decisions_)
    os << fmt::format("  decision {} ({}) basis size {}\n", d.name, d.kind == DecisionPoly::Kind::Sos ? "sos" : "free",
                      d.basis.size());
  for (const auto& s : scalars_) os << fmt::format("  scalar {} -> var {}\n", s.name, s.var);
  for (const auto& c : constraints_)
    os << fmt::format("  constraint {}: degree {}, {} terms, gram order {}\n", c.name, c.expr.degree(),
                      c.expr.terms().size(), c.basis.size());
}

SosSolution SosProgram::solve(const sdp::SdpSolver& solver, const ProgramOptions& options) const {
  SosSolution out;
  out.raw = solver.solve(sdp_, options.solver);
  switch (out.raw.status) {
    case sdp::Status::Infeasible:
      out.outcome = Outcome::Infeasible;
      return out;
    case sdp::Status::Optimal:
    case sdp::Status::Feasible:
      break;
    default:
      out.outcome = Outcome::Undetermined;
      out.diagnostic = fmt::format("SDP backend returned {}", sdp::to_string(out.raw.status));
      return out;
  }
  out.outcome = Outcome::Feasible;
  for (const auto& c : constraints_) {
    const Polynomial p = c.expr.evaluate(out.raw.values);
    Eigen::MatrixXd q = c.basis.empty() ? Eigen::MatrixXd(0, 0) : out.raw.block_values.at(c.block);
    GramCertificate cert = make_certificate(p, c.basis, std::move(q));
    if (!certificate_valid(cert)) {
      out.outcome = Outcome::Undetermined;
      out.diagnostic = fmt::format("certificate for '{}' failed verification (residual {:.3e}, eigen floor {:.3e})",
                                   c.name, cert.relative_residual, cert.eigen_floor);
    }
    out.constraint_certificates.push_back(std::move(cert));
  }
  for (const auto& d : decisions_) {
    if (d.kind != DecisionPoly::Kind::Sos) continue;
    const Polynomial p = d.expr.evaluate(out.raw.values);
    out.decision_certificates.emplace(d.name, make_certificate(p, d.basis, out.raw.block_values.at(d.block)));
  }
  return out;
}

SosSolution SosProgram::solve(const ProgramOptions& options) const {
  return solve(sdp::SplittingSolver{}, options);
}

Polynomial SosSolution::value(const DecisionPoly& d) const { return d.expr.evaluate(raw.values); }
Polynomial SosSolution::value(const AffinePoly& p) const { return p.evaluate(raw.values); }
double SosSolution::value(const ScalarDecision& s) const { return raw.values.at(s.var); }
double SosSolution::value(const AffineExpr& e) const { return e.evaluate(raw.values); }

// ---------------------------------------------------------------- front ends

SosCheck check_sos(const Polynomial& p, const ProgramOptions& options) {
  if (p.degree() % 2 != 0) throw UsageError(fmt::format("check_sos needs an even-degree polynomial, got degree {}", p.degree()));
  SosCheck out;
  SosProgram prog(p.vars(), "check_sos");
  prog.add_sos(AffinePoly(p), "p");
  SosSolution sol = prog.solve(options);
  out.outcome = sol.outcome;
  if (sol.outcome == Outcome::Feasible) out.certificate = sol.constraint_certificates.front();
  if (sol.outcome == Outcome::Undetermined && !sol.raw.block_values.empty()) {
    const ConstraintInfo& c = prog.constraints().front();
    if (auto polished = polish_gram(p, c.basis, sol.raw.block_values.at(c.block))) {
      out.outcome = Outcome::Feasible;
      out.certificate = std::move(polished);
    }
  }
  if (sol.outcome == Outcome::Infeasible) out.infeasibility_certificate = sol.raw.infeasibility_certificate;
  return out;
}

PutinarCertificate putinar_certificate(const Polynomial& p, const std::vector<Polynomial>& region,
                                       unsigned multiplier_degree, const ProgramOptions& options) {
  if (region.empty()) throw UsageError("putinar_certificate needs a nonempty region description");
  if (multiplier_degree % 2 != 0) throw UsageError("multiplier degree must be even");
  std::vector<std::size_t> vars = p.variables();
  for (const auto& g : region) {
    if (!(*g.vars() == *p.vars())) throw UsageError("region polynomials use a different variable set");
    for (std::size_t v : g.variables()) vars.push_back(v);
  }
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());

  SosProgram prog(p.vars(), "putinar");
  const std::vector<Monomial> basis = monomial_basis(vars, multiplier_degree);
  AffinePoly sigma0 = AffinePoly(p);
  std::vector<const DecisionPoly*> mults;
  for (std::size_t j = 0; j < region.size(); ++j) {
    const DecisionPoly& s = prog.new_sos(fmt::format("sigma{}", j + 1), basis);
    mults.push_back(&s);
  }
  for (std::size_t j = 0; j < region.size(); ++j) sigma0 -= prog.decisions()[j].expr * region[j];
  prog.add_sos(sigma0, "sigma0");

  PutinarCertificate out;
  SosSolution sol = prog.solve(options);
  out.outcome = sol.outcome;
  if (sol.outcome != Outcome::Feasible) return out;
  out.sigma0 = sol.value(sigma0);
  out.sigma0_certificate = sol.constraint_certificates.front();
  for (std::size_t j = 0; j < region.size(); ++j) {
    const DecisionPoly& d = prog.decisions()[j];
    out.multipliers.push_back(sol.value(d));
    out.multiplier_certificates.push_back(sol.decision_certificates.at(d.name));
  }
  return out;
}

}  // namespace veclyap::sos
