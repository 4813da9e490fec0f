#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace veclyap::sdp {

/// Index of a scalar decision in the flat variable layout of an SdpProblem.
using VarIndex = std::size_t;

struct Term {
  VarIndex var;
  double coeff;
};

/// Linear functional Σ coeff·value(var). Block entries are addressed through
/// their upper-triangle position; the functional multiplies the matrix entry
/// X_ij itself, so an off-diagonal entry counted twice needs coefficient 2.
using LinearForm = std::vector<Term>;

struct Constraint {
  LinearForm form;
  double rhs = 0.0;
};

/// Standard-form SDP over a product of free variables and PSD blocks:
///   minimize ⟨c, x⟩  s.t.  ⟨aᵢ, x⟩ = bᵢ,  every block ⪰ 0.
class SdpProblem {
 public:
  struct Segment {
    enum class Kind { Free, Psd } kind;
    std::size_t dim;     // number of free variables, or matrix order
    std::size_t offset;  // first flat index
    std::size_t size() const { return kind == Kind::Free ? dim : dim * (dim + 1) / 2; }
  };

  explicit SdpProblem(std::string name = {}) : name_(std::move(name)) {}

  /// Appends `count` free variables and returns the index of the first.
  VarIndex add_free(std::size_t count = 1);
  /// Appends a PSD block of order `dim`; returns its block id.
  std::size_t add_block(std::size_t dim);
  /// Flat index of entry (i, j) of a block; (i, j) and (j, i) coincide.
  VarIndex entry(std::size_t block, std::size_t i, std::size_t j) const;
  VarIndex free_var(std::size_t k) const;

  void add_constraint(LinearForm form, double rhs);
  void set_objective(LinearForm form) { objective_ = std::move(form); }

  const std::string& name() const { return name_; }
  void set_name(std::string n) { name_ = std::move(n); }
  std::size_t num_vars() const { return num_vars_; }
  std::size_t num_free() const { return free_indices_.size(); }
  std::size_t num_blocks() const { return block_segments_.size(); }
  std::size_t block_dim(std::size_t block) const;
  const std::vector<Segment>& segments() const { return segments_; }
  const Segment& block_segment(std::size_t block) const { return segments_.at(block_segments_.at(block)); }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const LinearForm& objective() const { return objective_; }
  bool has_objective() const;

  /// Throws UsageError on NaN/Inf data or out-of-range variable references.
  void validate() const;

  /// Sparse text dump: header line, segment lines, one `c <row> <var> <coeff>`
  /// line per constraint coefficient, `b <row> <rhs>` and `o <var> <coeff>`.
  void dump(std::ostream& os) const;
  static SdpProblem read_dump(std::istream& is);

 private:
  std::string name_;
  std::vector<Segment> segments_;
  std::vector<std::size_t> block_segments_;
  std::vector<VarIndex> free_indices_;
  std::size_t num_vars_ = 0;
  std::vector<Constraint> constraints_;
  LinearForm objective_;
};

enum class Status { Optimal, Feasible, Infeasible, Unbounded, MaxIterations, NumericalFailure };

std::string_view to_string(Status s);

struct SolverOptions {
  double feas_tol = 1e-7;
  double gap_tol = 1e-7;
  int max_iters = 100000;
  /// Over-relaxation parameter of the splitting iteration, in (0, 2).
  double relaxation = 1.6;
  double rho = 1.0;
  bool adaptive_rho = true;
  bool equilibrate = true;
  int ruiz_passes = 15;
  /// Anderson acceleration memory (0 disables acceleration).
  int anderson_memory = 8;
  int check_interval = 10;
  bool verbose = false;
};

struct SdpSolution {
  Status status = Status::NumericalFailure;
  /// Value of every flat variable (free variables and upper-triangle entries).
  std::vector<double> values;
  std::vector<Eigen::MatrixXd> block_values;
  /// Equality multipliers y of the dual  max bᵀy s.t. c − Aᵀy ⪰ 0.
  std::vector<double> dual;
  /// When status is Infeasible: y with bᵀy = −1 and Aᵀy in the dual cone
  /// up to `certificate_residual`.
  std::vector<double> infeasibility_certificate;
  double certificate_residual = 0.0;
  double objective_value = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  int iterations = 0;

  bool succeeded() const { return status == Status::Optimal || status == Status::Feasible; }
  double value(VarIndex v) const { return values.at(v); }
};

/// Pluggable backend; the SOS layer only talks to this interface.
class SdpSolver {
 public:
  virtual ~SdpSolver() = default;
  virtual SdpSolution solve(const SdpProblem& problem, const SolverOptions& options) const = 0;
};

/// First-order operator splitting: alternates the projection onto the affine
/// constraint set (cached sparse factorization of A·Aᵀ) with the projection onto
/// the cone (eigendecomposition per PSD block), with over-relaxation,
/// Ruiz-style equilibration and safeguarded Anderson acceleration. Infeasibility
/// is reported only when the iterate differences yield a certificate.
class SplittingSolver final : public SdpSolver {
 public:
  SdpSolution solve(const SdpProblem& problem, const SolverOptions& options) const override;
};

SdpSolution solve(const SdpProblem& problem, const SolverOptions& options = {});

struct ResidualReport {
  double min_eigenvalue = 0.0;       // over all PSD blocks (+inf when none)
  double max_violation = 0.0;        // max |⟨aᵢ, x⟩ − bᵢ|
  std::vector<double> violations;    // per constraint, signed ⟨aᵢ, x⟩ − bᵢ
  double objective = 0.0;
};

/// Recomputes residuals directly from the problem data; independent of the solver.
ResidualReport check_solution(const SdpProblem& problem, const SdpSolution& solution);
ResidualReport check_values(const SdpProblem& problem, const std::vector<double>& values);

/// Checks an infeasibility certificate y: returns max(violation of Aᵀy ∈ K*)
/// after normalising bᵀy = −1; +inf when bᵀy ≥ 0.
double certificate_residual(const SdpProblem& problem, const std::vector<double>& y);

/// Symmetric matrix of a block from flat values.
Eigen::MatrixXd block_matrix(const SdpProblem& problem, std::size_t block, const std::vector<double>& values);

}  // namespace veclyap::sdp
