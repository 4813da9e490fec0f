#include "veclyap/poly.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fmt/format.h>

namespace veclyap {

// ---------------------------------------------------------------- VarSet

VarSet::VarSet(std::vector<std::string> names) : names_(std::move(names)) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i].empty()) throw UsageError("variable names must be non-empty");
    if (!index_.emplace(names_[i], i).second)
      throw UsageError(fmt::format("duplicate variable name '{}'", names_[i]));
  }
}

std::size_t VarSet::index(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw UsageError(fmt::format("unknown variable '{}'", name));
  return it->second;
}

bool VarSet::contains(std::string_view name) const {
  return index_.count(std::string(name)) != 0;
}

VarSetPtr make_varset(std::vector<std::string> names) {
  return std::make_shared<const VarSet>(std::move(names));
}

// -------------------------------------------------------------- Monomial

Monomial::Monomial(std::vector<Factor> factors) {
  std::sort(factors.begin(), factors.end());
  for (const auto& [var, exp] : factors) {
    if (exp == 0) continue;
    if (!factors_.empty() && factors_.back().first == var)
      factors_.back().second += exp;
    else
      factors_.emplace_back(var, exp);
    degree_ += exp;
  }
}

Monomial Monomial::var(std::size_t index, unsigned exponent) {
  return Monomial({{static_cast<std::uint32_t>(index), exponent}});
}

unsigned Monomial::exponent(std::size_t var) const {
  for (const auto& [v, e] : factors_)
    if (v == var) return e;
  return 0;
}

Monomial Monomial::operator*(const Monomial& other) const {
  Monomial out;
  out.factors_.reserve(factors_.size() + other.factors_.size());
  auto a = factors_.begin();
  auto b = other.factors_.begin();
  while (a != factors_.end() || b != other.factors_.end()) {
    if (b == other.factors_.end() || (a != factors_.end() && a->first < b->first)) {
      out.factors_.push_back(*a++);
    } else if (a == factors_.end() || b->first < a->first) {
      out.factors_.push_back(*b++);
    } else {
      out.factors_.emplace_back(a->first, a->second + b->second);
      ++a;
      ++b;
    }
  }
  out.degree_ = degree_ + other.degree_;
  return out;
}

bool GrlexLess::operator()(const Monomial& a, const Monomial& b) const {
  if (a.degree() != b.degree()) return a.degree() < b.degree();
  const auto& fa = a.factors();
  const auto& fb = b.factors();
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < fa.size() && j < fb.size()) {
    if (fa[i].first == fb[j].first) {
      if (fa[i].second != fb[j].second) return fa[i].second > fb[j].second;
      ++i;
      ++j;
    } else {
      return fa[i].first < fb[j].first;
    }
  }
  return i < fa.size() && j == fb.size();
}

std::size_t MonomialHash::operator()(const Monomial& m) const {
  std::size_t h = 0x9e3779b97f4a7c15ULL;
  for (const auto& [v, e] : m.factors()) {
    h ^= (static_cast<std::size_t>(v) * 131 + e) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

// ------------------------------------------------------------ Polynomial

Polynomial::Polynomial(VarSetPtr vars) : vars_(std::move(vars)) {
  if (!vars_) throw UsageError("polynomial requires a variable set");
}

Polynomial::Polynomial(VarSetPtr vars, TermMap terms) : vars_(std::move(vars)), terms_(std::move(terms)) {
  if (!vars_) throw UsageError("polynomial requires a variable set");
  for (const auto& [m, c] : terms_) {
    if (!m.factors().empty() && m.factors().back().first >= vars_->size())
      throw UsageError("monomial references a variable outside the variable set");
    if (!std::isfinite(c)) throw UsageError("non-finite polynomial coefficient");
  }
  prune();
}

Polynomial Polynomial::constant(VarSetPtr vars, double c) {
  Polynomial p(std::move(vars));
  if (std::abs(c) >= kZeroThreshold) p.terms_.emplace(Monomial{}, c);
  return p;
}

Polynomial Polynomial::variable(VarSetPtr vars, std::string_view name) {
  const std::size_t idx = vars->index(name);
  return variable(std::move(vars), idx);
}

Polynomial Polynomial::variable(VarSetPtr vars, std::size_t index) {
  if (index >= vars->size()) throw UsageError("variable index out of range");
  return monomial(std::move(vars), Monomial::var(index));
}

Polynomial Polynomial::monomial(VarSetPtr vars, const Monomial& m, double c) {
  TermMap t;
  t.emplace(m, c);
  return Polynomial(std::move(vars), std::move(t));
}

unsigned Polynomial::degree() const {
  return terms_.empty() ? 0 : terms_.rbegin()->first.degree();
}

unsigned Polynomial::min_degree() const {
  return terms_.empty() ? 0 : terms_.begin()->first.degree();
}

double Polynomial::coefficient(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

double Polynomial::max_abs_coefficient() const {
  double m = 0.0;
  for (const auto& [mono, c] : terms_) m = std::max(m, std::abs(c));
  return m;
}

std::vector<std::size_t> Polynomial::variables() const {
  std::vector<std::size_t> out;
  for (const auto& [m, c] : terms_)
    for (const auto& [v, e] : m.factors()) out.push_back(v);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool Polynomial::depends_only_on(std::span<const std::size_t> vars) const {
  for (std::size_t v : variables())
    if (std::find(vars.begin(), vars.end(), v) == vars.end()) return false;
  return true;
}

void Polynomial::require_same_vars(const Polynomial& other) const {
  if (vars_ != other.vars_ && !(*vars_ == *other.vars_))
    throw UsageError("polynomial operands use different variable sets");
}

void Polynomial::prune() {
  for (auto it = terms_.begin(); it != terms_.end();) {
    if (std::abs(it->second) < kZeroThreshold)
      it = terms_.erase(it);
    else
      ++it;
  }
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  require_same_vars(other);
  for (const auto& [m, c] : other.terms_) {
    auto [it, inserted] = terms_.emplace(m, c);
    if (!inserted) {
      it->second += c;
      if (std::abs(it->second) < kZeroThreshold) terms_.erase(it);
    }
  }
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) {
  require_same_vars(other);
  for (const auto& [m, c] : other.terms_) {
    auto [it, inserted] = terms_.emplace(m, -c);
    if (!inserted) {
      it->second -= c;
      if (std::abs(it->second) < kZeroThreshold) terms_.erase(it);
    }
  }
  return *this;
}

Polynomial& Polynomial::operator*=(double s) {
  for (auto& [m, c] : terms_) c *= s;
  prune();
  return *this;
}

Polynomial Polynomial::operator+(const Polynomial& other) const {
  Polynomial out = *this;
  out += other;
  return out;
}

Polynomial Polynomial::operator-(const Polynomial& other) const {
  Polynomial out = *this;
  out -= other;
  return out;
}

Polynomial Polynomial::operator-() const {
  Polynomial out = *this;
  for (auto& [m, c] : out.terms_) c = -c;
  return out;
}

Polynomial Polynomial::operator*(const Polynomial& other) const {
  require_same_vars(other);
  std::unordered_map<Monomial, double, MonomialHash> acc;
  acc.reserve(terms_.size() * other.terms_.size());
  for (const auto& [ma, ca] : terms_)
    for (const auto& [mb, cb] : other.terms_) acc[ma * mb] += ca * cb;
  TermMap t;
  for (auto& [m, c] : acc) t.emplace(m, c);
  return Polynomial(vars_, std::move(t));
}

Polynomial Polynomial::operator*(double s) const {
  Polynomial out = *this;
  out *= s;
  return out;
}

Polynomial Polynomial::operator+(double s) const { return *this + constant(vars_, s); }
Polynomial Polynomial::operator-(double s) const { return *this - constant(vars_, s); }

Polynomial Polynomial::pow(unsigned exponent) const {
  Polynomial result = constant(vars_, 1.0);
  Polynomial base = *this;
  while (exponent > 0) {
    if (exponent & 1U) result = result * base;
    exponent >>= 1U;
    if (exponent > 0) base = base * base;
  }
  return result;
}

double Polynomial::evaluate(std::span<const double> point) const {
  if (point.size() != vars_->size())
    throw UsageError(fmt::format("evaluation point has dimension {} but the variable set has {}",
                                 point.size(), vars_->size()));
  double sum = 0.0;
  for (const auto& [m, c] : terms_) {
    double v = c;
    for (const auto& [var, e] : m.factors()) {
      const double x = point[var];
      for (unsigned k = 0; k < e; ++k) v *= x;
    }
    sum += v;
  }
  return sum;
}

Polynomial Polynomial::differentiate(std::size_t var) const {
  if (var >= vars_->size()) throw UsageError("differentiation variable out of range");
  TermMap t;
  for (const auto& [m, c] : terms_) {
    const unsigned e = m.exponent(var);
    if (e == 0) continue;
    std::vector<Monomial::Factor> f = m.factors();
    for (auto& fac : f)
      if (fac.first == var) fac.second -= 1;
    t.emplace(Monomial(std::move(f)), c * e);
  }
  return Polynomial(vars_, std::move(t));
}

Polynomial Polynomial::differentiate(std::string_view var) const {
  return differentiate(vars_->index(var));
}

namespace {

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string Polynomial::render() const {
  if (terms_.empty()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [m, c] : terms_) {
    const double mag = std::abs(c);
    if (first) {
      if (c < 0) out += "-";
    } else {
      out += c < 0 ? " - " : " + ";
    }
    first = false;
    std::string mono;
    for (const auto& [var, e] : m.factors()) {
      if (!mono.empty()) mono += "*";
      mono += vars_->name(var);
      if (e > 1) mono += "^" + std::to_string(e);
    }
    if (mono.empty())
      out += format_number(mag);
    else if (mag == 1.0)
      out += mono;
    else
      out += format_number(mag) + "*" + mono;
  }
  return out;
}

bool Polynomial::operator==(const Polynomial& other) const {
  if (!(*vars_ == *other.vars_)) return false;
  return terms_ == other.terms_;
}

// ----------------------------------------------------------- free functions

Polynomial lie_derivative(const Polynomial& v, const PolyVec& field) {
  const std::size_t n = v.vars()->size();
  if (field.size() != n)
    throw UsageError(fmt::format("vector field has {} entries but the variable set has {}", field.size(), n));
  Polynomial out(v.vars());
  for (std::size_t var : v.variables()) out += v.differentiate(var) * field[var];
  return out;
}

PolyVec gradient(const Polynomial& p, std::span<const std::size_t> vars) {
  PolyVec out;
  out.reserve(vars.size());
  for (std::size_t v : vars) out.push_back(p.differentiate(v));
  return out;
}

std::vector<double> evaluate(const PolyVec& v, std::span<const double> point) {
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& p : v) out.push_back(p.evaluate(point));
  return out;
}

CompiledPolynomial::CompiledPolynomial(const Polynomial& p) {
  offsets_.push_back(0);
  for (const auto& [m, c] : p.terms()) {
    coeffs_.push_back(c);
    factors_.insert(factors_.end(), m.factors().begin(), m.factors().end());
    offsets_.push_back(static_cast<std::uint32_t>(factors_.size()));
  }
}

double CompiledPolynomial::operator()(const double* x) const {
  double sum = 0.0;
  for (std::size_t t = 0; t < coeffs_.size(); ++t) {
    double v = coeffs_[t];
    for (std::uint32_t f = offsets_[t]; f < offsets_[t + 1]; ++f) {
      const double b = x[factors_[f].first];
      for (std::uint32_t k = 0; k < factors_[f].second; ++k) v *= b;
    }
    sum += v;
  }
  return sum;
}

CompiledField::CompiledField(const PolyVec& field) {
  parts_.reserve(field.size());
  for (const auto& p : field) parts_.emplace_back(p);
}

void CompiledField::operator()(const double* x, double* out) const {
  for (std::size_t i = 0; i < parts_.size(); ++i) out[i] = parts_[i](x);
}

Polynomial squared_norm(const VarSetPtr& vars, std::span<const std::size_t> indices) {
  Polynomial::TermMap t;
  for (std::size_t i : indices) t[Monomial::var(i, 2)] += 1.0;
  return Polynomial(vars, std::move(t));
}

// ----------------------------------------------------------------- parsing

namespace {

class Parser {
 public:
  Parser(const VarSetPtr& vars, std::string_view text) : vars_(vars), text_(text) {}

  Polynomial parse() {
    Polynomial p = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return p;
  }

 private:
  [[noreturn]] void fail(std::string_view what) const {
    throw UsageError(fmt::format("cannot parse polynomial '{}': {} at offset {}", text_, what, pos_));
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Polynomial expr() {
    Polynomial acc = term();
    while (true) {
      if (accept('+'))
        acc += term();
      else if (accept('-'))
        acc -= term();
      else
        return acc;
    }
  }

  Polynomial term() {
    Polynomial acc = unary();
    while (accept('*')) acc = acc * unary();
    return acc;
  }

  Polynomial unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }

  Polynomial power() {
    Polynomial base = primary();
    if (accept('^')) {
      skip_ws();
      unsigned e = 0;
      auto res = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), e);
      if (res.ec != std::errc()) fail("expected a non-negative integer exponent");
      pos_ = static_cast<std::size_t>(res.ptr - text_.data());
      return base.pow(e);
    }
    return base;
  }

  Polynomial primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Polynomial inner = expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      double v = 0.0;
      auto res = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
      if (res.ec != std::errc()) fail("malformed number");
      pos_ = static_cast<std::size_t>(res.ptr - text_.data());
      return Polynomial::constant(vars_, v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      const std::string_view name = text_.substr(start, pos_ - start);
      if (!vars_->contains(name)) fail(fmt::format("unknown variable '{}'", name));
      return Polynomial::variable(vars_, name);
    }
    fail(fmt::format("unexpected character '{}'", c));
  }

  const VarSetPtr& vars_;
  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Polynomial parse_polynomial(const VarSetPtr& vars, std::string_view text) {
  return Parser(vars, text).parse();
}

}  // namespace veclyap
