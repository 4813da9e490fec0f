#pragma once

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "veclyap/poly.hpp"
#include "veclyap/sdp.hpp"

namespace veclyap::sos {

/// c + Σ aₖ·decisionₖ, with decisions addressed by SDP flat index.
struct AffineExpr {
  double constant = 0.0;
  std::map<sdp::VarIndex, double> linear;

  bool is_constant() const { return linear.empty(); }
  AffineExpr& operator+=(const AffineExpr& o);
  AffineExpr& operator-=(const AffineExpr& o);
  AffineExpr& operator*=(double s);
  double evaluate(const std::vector<double>& values) const;
};

AffineExpr operator+(AffineExpr a, const AffineExpr& b);
AffineExpr operator-(AffineExpr a, const AffineExpr& b);
AffineExpr operator*(double s, AffineExpr a);

/// Polynomial whose coefficients are affine in the decision variables.
class AffinePoly {
 public:
  using TermMap = std::map<Monomial, AffineExpr, GrlexLess>;

  explicit AffinePoly(VarSetPtr vars);
  /* implicit */ AffinePoly(const Polynomial& p);

  const VarSetPtr& vars() const { return vars_; }
  const TermMap& terms() const { return terms_; }
  unsigned degree() const;
  unsigned min_degree() const;
  /// Monomials with a nonzero constant or linear part.
  std::vector<Monomial> support() const;

  AffinePoly& operator+=(const AffinePoly& o);
  AffinePoly& operator-=(const AffinePoly& o);
  AffinePoly operator+(const AffinePoly& o) const;
  AffinePoly operator-(const AffinePoly& o) const;
  AffinePoly operator-() const;
  AffinePoly operator*(double s) const;
  AffinePoly operator*(const Polynomial& p) const;
  /// Throws UsageError when both factors depend on decisions (bilinear).
  AffinePoly operator*(const AffinePoly& o) const;

  void add_term(const Monomial& m, const AffineExpr& e);
  /// Substitutes decision values.
  Polynomial evaluate(const std::vector<double>& values) const;

 private:
  void require_same_vars(const AffinePoly& o) const;
  VarSetPtr vars_;
  TermMap terms_;
};

inline AffinePoly operator*(const Polynomial& p, const AffinePoly& a) { return a * p; }
/// p(x)·e for a scalar decision expression e.
AffinePoly operator*(const Polynomial& p, const AffineExpr& e);
inline AffinePoly operator*(double s, const AffinePoly& a) { return a * s; }

/// All monomials in `vars` of total degree in [min_degree, max_degree], graded-lex ordered.
std::vector<Monomial> monomials_up_to(std::span<const std::size_t> vars, unsigned max_degree, unsigned min_degree = 0);

/// Gram basis for degree-`degree` SOS polynomials in `vars`: every monomial of
/// degree ≤ degree/2. Throws UsageError for odd degree.
std::vector<Monomial> monomial_basis(std::span<const std::size_t> vars, unsigned degree);

/// p = z(x)ᵀ Q z(x) with Q ⪰ 0.
struct GramCertificate {
  std::vector<Monomial> basis;
  Eigen::MatrixXd gram;
  double eigen_floor = 0.0;
  /// max |coeff(p − zᵀQz)|
  double residual = 0.0;
  /// residual / (1 + max |coeff(p)|)
  double relative_residual = 0.0;

  Polynomial reconstruct(const VarSetPtr& vars) const;
};

inline constexpr double kGramRelTol = 1e-6;
inline constexpr double kEigenFloorTol = 1e-7;

/// Builds the Gram certificate for a fixed polynomial and a PSD matrix.
GramCertificate make_certificate(const Polynomial& p, std::vector<Monomial> basis, Eigen::MatrixXd gram);

bool certificate_valid(const GramCertificate& c);

/// Repairs an approximate Gram matrix for p: restricts Q to the span U of its
/// dominant eigenvectors and solves the coefficient equations exactly for the
/// reduced matrix S in Q = U S Uᵀ (least-norm correction). Returns the first
/// valid certificate over a range of rank thresholds.
std::optional<GramCertificate> polish_gram(const Polynomial& p, const std::vector<Monomial>& basis,
                                           const Eigen::MatrixXd& approx);

enum class Outcome { Feasible, Infeasible, Undetermined };
std::string_view to_string(Outcome o);

struct ProgramOptions {
  sdp::SolverOptions solver;
};

struct DecisionPoly {
  enum class Kind { Sos, Free };
  std::string name;
  Kind kind;
  std::vector<Monomial> basis;  // Gram basis (Sos) or coefficient monomials (Free)
  std::size_t block = 0;        // Sos
  sdp::VarIndex first_var = 0;  // Free
  AffinePoly expr;
};

struct ScalarDecision {
  std::string name;
  sdp::VarIndex var;
  AffineExpr expr() const { return AffineExpr{0.0, {{var, 1.0}}}; }
};

struct ConstraintInfo {
  std::string name;
  AffinePoly expr;
  std::vector<Monomial> basis;
  std::size_t block = 0;
};

class SosSolution;

/// Collects SOS-constrained unknown polynomials and scalars and compiles them
/// into one SdpProblem. Every constraint must be affine in the decisions.
class SosProgram {
 public:
  /// With `prune_zero_diagonals`, Gram bases additionally drop monomials whose
  /// diagonal entry is forced to zero (iterated to a fixed point).
  explicit SosProgram(VarSetPtr vars, std::string name = {}, bool prune_zero_diagonals = false);

  const DecisionPoly& new_sos(std::string name, std::vector<Monomial> basis);
  const DecisionPoly& new_free(std::string name, std::vector<Monomial> monomials);
  const ScalarDecision& new_scalar(std::string name);

  /// expr ∈ Σ. The Gram basis is derived from the expression's support.
  void add_sos(const AffinePoly& expr, std::string name);
  /// Coefficient-wise expr ≡ 0.
  void add_zero(const AffinePoly& expr, std::string name);
  void add_equality(const AffineExpr& lhs, double rhs);

  void minimize(const AffineExpr& objective);
  /// Minimizes Σ eᵢ² via an epigraph block [[t, eᵀ], [e, I]] ⪰ 0.
  void minimize_squared_norm(const std::vector<AffineExpr>& entries);

  SosSolution solve(const sdp::SdpSolver& solver, const ProgramOptions& options) const;
  SosSolution solve(const ProgramOptions& options = {}) const;

  const sdp::SdpProblem& sdp() const { return sdp_; }
  const VarSetPtr& vars() const { return vars_; }
  const std::deque<DecisionPoly>& decisions() const { return decisions_; }
  const std::vector<ConstraintInfo>& constraints() const { return constraints_; }

  /// Decision layout and constraint sizes, for debugging.
  void dump(std::ostream& os) const;

 private:
  std::vector<Monomial> choose_basis(const AffinePoly& expr) const;

  VarSetPtr vars_;
  bool prune_zero_diagonals_;
  sdp::SdpProblem sdp_;
  std::deque<DecisionPoly> decisions_;
  std::deque<ScalarDecision> scalars_;
  std::vector<ConstraintInfo> constraints_;
  std::optional<AffineExpr> objective_;
  std::optional<std::size_t> epigraph_block_;
};

class SosSolution {
 public:
  Outcome outcome = Outcome::Undetermined;
  sdp::SdpSolution raw;
  /// Certificates for each SOS constraint, in insertion order.
  std::vector<GramCertificate> constraint_certificates;
  /// Certificates for each SOS decision polynomial, keyed by name.
  std::map<std::string, GramCertificate> decision_certificates;
  std::string diagnostic;

  bool feasible() const { return outcome == Outcome::Feasible; }
  Polynomial value(const DecisionPoly& d) const;
  Polynomial value(const AffinePoly& p) const;
  double value(const ScalarDecision& s) const;
  double value(const AffineExpr& e) const;
};

// -------------------------------------------------------------- front ends

struct SosCheck {
  Outcome outcome = Outcome::Undetermined;
  std::optional<GramCertificate> certificate;
  /// Dual ray proving p ∉ Σ (when outcome is Infeasible).
  std::vector<double> infeasibility_certificate;
};

/// Decides p ∈ Σ. Throws UsageError for odd-degree input.
SosCheck check_sos(const Polynomial& p, const ProgramOptions& options = {});

struct PutinarCertificate {
  Outcome outcome = Outcome::Undetermined;
  std::optional<Polynomial> sigma0;
  std::vector<Polynomial> multipliers;
  std::optional<GramCertificate> sigma0_certificate;
  std::vector<GramCertificate> multiplier_certificates;
};

/// Searches p = σ₀ + Σⱼ σⱼ gⱼ with SOS σ's; multipliers use a Gram basis of
/// degree multiplier_degree/2 over the variables of p and the gⱼ.
PutinarCertificate putinar_certificate(const Polynomial& p, const std::vector<Polynomial>& region,
                                       unsigned multiplier_degree, const ProgramOptions& options = {});

}  // namespace veclyap::sos
