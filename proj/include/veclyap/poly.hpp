#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace veclyap {

/// Raised when an operation is called with arguments that violate its contract
/// (mismatched variable sets, wrong dimensions, unknown names, ...).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Ordered set of distinct state-variable names. Shared by every polynomial of
/// one system so that subsystem polynomials live in the same coordinates.
class VarSet {
 public:
  explicit VarSet(std::vector<std::string> names);

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(std::size_t i) const { return names_.at(i); }

  /// Throws UsageError for unknown names.
  std::size_t index(std::string_view name) const;
  bool contains(std::string_view name) const;

  bool operator==(const VarSet& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
};

using VarSetPtr = std::shared_ptr<const VarSet>;

VarSetPtr make_varset(std::vector<std::string> names);

/// Product of variable powers, stored sparsely as (variable index, exponent)
/// pairs sorted by index. No stored exponent is zero.
class Monomial {
 public:
  using Factor = std::pair<std::uint32_t, std::uint32_t>;

  Monomial() = default;
  explicit Monomial(std::vector<Factor> factors);
  static Monomial var(std::size_t index, unsigned exponent = 1);

  const std::vector<Factor>& factors() const { return factors_; }
  unsigned degree() const { return degree_; }
  unsigned exponent(std::size_t var) const;
  bool is_constant() const { return factors_.empty(); }

  Monomial operator*(const Monomial& other) const;

  bool operator==(const Monomial& other) const { return factors_ == other.factors_; }

 private:
  std::vector<Factor> factors_;
  unsigned degree_ = 0;
};

/// Graded lexicographic order: lower total degree first; within a degree,
/// larger exponent of the lower-indexed variable first (1 < x < y < x^2 < xy < y^2).
struct GrlexLess {
  bool operator()(const Monomial& a, const Monomial& b) const;
};

struct MonomialHash {
  std::size_t operator()(const Monomial& m) const;
};

/// Sparse multivariate polynomial with double coefficients over a VarSet.
/// Coefficients with magnitude below kZeroThreshold are pruned, so the term map
/// is canonical and equality is term-map equality.
class Polynomial {
 public:
  static constexpr double kZeroThreshold = 1e-14;
  using TermMap = std::map<Monomial, double, GrlexLess>;

  explicit Polynomial(VarSetPtr vars);
  Polynomial(VarSetPtr vars, TermMap terms);

  static Polynomial constant(VarSetPtr vars, double c);
  static Polynomial variable(VarSetPtr vars, std::string_view name);
  static Polynomial variable(VarSetPtr vars, std::size_t index);
  static Polynomial monomial(VarSetPtr vars, const Monomial& m, double c = 1.0);

  const VarSetPtr& vars() const { return vars_; }
  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  /// Total degree; 0 for the zero polynomial.
  unsigned degree() const;
  /// Smallest total degree among the stored terms; 0 for the zero polynomial.
  unsigned min_degree() const;
  double coefficient(const Monomial& m) const;
  double constant_term() const { return coefficient(Monomial{}); }
  /// Largest coefficient magnitude (0 for the zero polynomial).
  double max_abs_coefficient() const;
  /// Sorted indices of the variables with a nonzero exponent in some term.
  std::vector<std::size_t> variables() const;
  bool depends_only_on(std::span<const std::size_t> vars) const;

  Polynomial operator+(const Polynomial& other) const;
  Polynomial operator-(const Polynomial& other) const;
  Polynomial operator-() const;
  Polynomial operator*(const Polynomial& other) const;
  Polynomial operator*(double s) const;
  Polynomial operator+(double s) const;
  Polynomial operator-(double s) const;
  Polynomial& operator+=(const Polynomial& other);
  Polynomial& operator-=(const Polynomial& other);
  Polynomial& operator*=(double s);

  Polynomial pow(unsigned exponent) const;
  double evaluate(std::span<const double> point) const;
  Polynomial differentiate(std::size_t var) const;
  Polynomial differentiate(std::string_view var) const;

  /// Renders as `c*x11^2*x12 + ...`; coefficients use the shortest round-trip
  /// decimal form so that parse(render(p)) == p.
  std::string render() const;

  bool operator==(const Polynomial& other) const;

 private:
  void require_same_vars(const Polynomial& other) const;
  void prune();

  VarSetPtr vars_;
  TermMap terms_;
};

inline Polynomial operator*(double s, const Polynomial& p) { return p * s; }
inline Polynomial operator+(double s, const Polynomial& p) { return p + s; }
inline Polynomial operator-(double s, const Polynomial& p) { return -p + s; }

using PolyVec = std::vector<Polynomial>;

/// Σⱼ (∂V/∂xⱼ)·fieldⱼ. The field must list one entry per variable of V's VarSet.
Polynomial lie_derivative(const Polynomial& v, const PolyVec& field);

/// Gradient of p with respect to the listed variables.
PolyVec gradient(const Polynomial& p, std::span<const std::size_t> vars);

/// Parses sums of products of numbers, variables, integer powers and
/// parenthesised sub-expressions, e.g. `0.12*x21*x32 - x21 - 0.41*x22*(1 - x21^2)`.
Polynomial parse_polynomial(const VarSetPtr& vars, std::string_view text);

std::vector<double> evaluate(const PolyVec& v, std::span<const double> point);

/// Flattened copy of a polynomial (or polynomial vector) for repeated
/// evaluation in inner loops; no map traversal or dimension checks.
class CompiledPolynomial {
 public:
  CompiledPolynomial() = default;
  explicit CompiledPolynomial(const Polynomial& p);
  double operator()(const double* x) const;

 private:
  std::vector<double> coeffs_;
  std::vector<std::uint32_t> offsets_;  // factor range per term
  std::vector<Monomial::Factor> factors_;
};

class CompiledField {
 public:
  CompiledField() = default;
  explicit CompiledField(const PolyVec& field);
  std::size_t size() const { return parts_.size(); }
  void operator()(const double* x, double* out) const;

 private:
  std::vector<CompiledPolynomial> parts_;
};

/// Σ x_k^2 over the given variable indices.
Polynomial squared_norm(const VarSetPtr& vars, std::span<const std::size_t> indices);

}  // namespace veclyap
