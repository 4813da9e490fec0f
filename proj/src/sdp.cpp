#include "veclyap/sdp.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <iostream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "veclyap/poly.hpp"

namespace veclyap::sdp {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

std::size_t tri_index(std::size_t i, std::size_t j) {
  if (i > j) std::swap(i, j);
  return j * (j + 1) / 2 + i;
}

}  // namespace

// --------------------------------------------------------------- SdpProblem

VarIndex SdpProblem::add_free(std::size_t count) {
  if (count == 0) throw UsageError("add_free requires a positive count");
  const VarIndex first = num_vars_;
  segments_.push_back({Segment::Kind::Free, count, num_vars_});
  for (std::size_t k = 0; k < count; ++k) free_indices_.push_back(num_vars_ + k);
  num_vars_ += count;
  return first;
}

std::size_t SdpProblem::add_block(std::size_t dim) {
  if (dim == 0) throw UsageError("PSD blocks must have positive order");
  block_segments_.push_back(segments_.size());
  segments_.push_back({Segment::Kind::Psd, dim, num_vars_});
  num_vars_ += dim * (dim + 1) / 2;
  return block_segments_.size() - 1;
}

VarIndex SdpProblem::entry(std::size_t block, std::size_t i, std::size_t j) const {
  const Segment& s = block_segment(block);
  if (i >= s.dim || j >= s.dim) throw UsageError("block entry out of range");
  return s.offset + tri_index(i, j);
}

VarIndex SdpProblem::free_var(std::size_t k) const { return free_indices_.at(k); }

std::size_t SdpProblem::block_dim(std::size_t block) const { return block_segment(block).dim; }

void SdpProblem::add_constraint(LinearForm form, double rhs) {
  constraints_.push_back({std::move(form), rhs});
}

bool SdpProblem::has_objective() const {
  return std::any_of(objective_.begin(), objective_.end(), [](const Term& t) { return t.coeff != 0.0; });
}

void SdpProblem::validate() const {
  auto check_form = [&](const LinearForm& f, std::string_view what) {
    for (const Term& t : f) {
      if (t.var >= num_vars_) throw UsageError(fmt::format("{} references variable {} out of range", what, t.var));
      if (!std::isfinite(t.coeff)) throw UsageError(fmt::format("{} has a non-finite coefficient", what));
    }
  };
  for (std::size_t i = 0; i < constraints_.size(); ++i) {
    check_form(constraints_[i].form, fmt::format("constraint {}", i));
    if (!std::isfinite(constraints_[i].rhs)) throw UsageError(fmt::format("constraint {} has a non-finite rhs", i));
  }
  check_form(objective_, "objective");
}

void SdpProblem::dump(std::ostream& os) const {
  os << "sdp " << (name_.empty() ? "-" : name_) << " vars " << num_vars_ << " segments " << segments_.size()
     << " constraints " << constraints_.size() << "\n";
  for (const Segment& s : segments_)
    os << (s.kind == Segment::Kind::Free ? "f " : "s ") << s.dim << "\n";
  for (std::size_t i = 0; i < constraints_.size(); ++i) {
    for (const Term& t : constraints_[i].form) os << "c " << i << " " << t.var << " " << fmt::format("{}", t.coeff) << "\n";
    os << "b " << i << " " << fmt::format("{}", constraints_[i].rhs) << "\n";
  }
  for (const Term& t : objective_) os << "o " << t.var << " " << fmt::format("{}", t.coeff) << "\n";
}

SdpProblem SdpProblem::read_dump(std::istream& is) {
  std::string tag;
  std::string name;
  std::string word;
  std::size_t nvars = 0;
  std::size_t nseg = 0;
  std::size_t ncons = 0;
  if (!(is >> tag >> name >> word >> nvars >> word >> nseg >> word >> ncons) || tag != "sdp")
    throw UsageError("malformed SDP dump header");
  SdpProblem p(name == "-" ? "" : name);
  for (std::size_t s = 0; s < nseg; ++s) {
    std::size_t dim = 0;
    if (!(is >> tag >> dim)) throw UsageError("malformed SDP dump segment line");
    if (tag == "f")
      p.add_free(dim);
    else if (tag == "s")
      p.add_block(dim);
    else
      throw UsageError("unknown SDP dump segment kind");
  }
  if (p.num_vars() != nvars) throw UsageError("SDP dump variable count mismatch");
  p.constraints_.resize(ncons);
  while (is >> tag) {
    if (tag == "c") {
      std::size_t row = 0;
      VarIndex var = 0;
      double c = 0.0;
      if (!(is >> row >> var >> c) || row >= ncons) throw UsageError("malformed SDP dump constraint line");
      p.constraints_[row].form.push_back({var, c});
    } else if (tag == "b") {
      std::size_t row = 0;
      double rhs = 0.0;
      if (!(is >> row >> rhs) || row >= ncons) throw UsageError("malformed SDP dump rhs line");
      p.constraints_[row].rhs = rhs;
    } else if (tag == "o") {
      VarIndex var = 0;
      double c = 0.0;
      if (!(is >> var >> c)) throw UsageError("malformed SDP dump objective line");
      p.objective_.push_back({var, c});
    } else {
      throw UsageError(fmt::format("unknown SDP dump line tag '{}'", tag));
    }
  }
  p.validate();
  return p;
}

std::string_view to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "Optimal";
    case Status::Feasible: return "Feasible";
    case Status::Infeasible: return "Infeasible";
    case Status::Unbounded: return "Unbounded";
    case Status::MaxIterations: return "MaxIterations";
    case Status::NumericalFailure: return "NumericalFailure";
  }
  return "?";
}

// ------------------------------------------------------------ residual checks

Eigen::MatrixXd block_matrix(const SdpProblem& problem, std::size_t block, const std::vector<double>& values) {
  const auto& seg = problem.block_segment(block);
  Eigen::MatrixXd m(seg.dim, seg.dim);
  for (std::size_t j = 0; j < seg.dim; ++j)
    for (std::size_t i = 0; i <= j; ++i) m(i, j) = m(j, i) = values.at(seg.offset + tri_index(i, j));
  return m;
}

namespace {

double min_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return std::numeric_limits<double>::infinity();
  if (m.rows() == 1) return m(0, 0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

ResidualReport check_values(const SdpProblem& problem, const std::vector<double>& values) {
  if (values.size() != problem.num_vars()) throw UsageError("solution does not match the problem's variable layout");
  ResidualReport r;
  r.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < problem.num_blocks(); ++b)
    r.min_eigenvalue = std::min(r.min_eigenvalue, min_eigenvalue(block_matrix(problem, b, values)));
  for (const Constraint& c : problem.constraints()) {
    double lhs = 0.0;
    for (const Term& t : c.form) lhs += t.coeff * values[t.var];
    r.violations.push_back(lhs - c.rhs);
    r.max_violation = std::max(r.max_violation, std::abs(lhs - c.rhs));
  }
  for (const Term& t : problem.objective()) r.objective += t.coeff * values[t.var];
  return r;
}

ResidualReport check_solution(const SdpProblem& problem, const SdpSolution& solution) {
  if (solution.block_values.size() != problem.num_blocks())
    throw UsageError("solution block count does not match the problem");
  for (std::size_t b = 0; b < problem.num_blocks(); ++b) {
    const auto d = static_cast<Eigen::Index>(problem.block_dim(b));
    if (solution.block_values[b].rows() != d || solution.block_values[b].cols() != d)
      throw UsageError(fmt::format("solution block {} has the wrong shape", b));
  }
  return check_values(problem, solution.values);
}

double certificate_residual(const SdpProblem& problem, const std::vector<double>& y) {
  const auto& cons = problem.constraints();
  if (y.size() != cons.size()) throw UsageError("certificate length does not match the constraint count");
  double by = 0.0;
  for (std::size_t i = 0; i < cons.size(); ++i) by += cons[i].rhs * y[i];
  if (!(by < 0.0)) return std::numeric_limits<double>::infinity();
  std::vector<double> aty(problem.num_vars(), 0.0);
  for (std::size_t i = 0; i < cons.size(); ++i)
    for (const Term& t : cons[i].form) aty[t.var] += t.coeff * y[i] / (-by);
  double viol = 0.0;
  for (const auto& seg : problem.segments()) {
    if (seg.kind == SdpProblem::Segment::Kind::Free) {
      for (std::size_t k = 0; k < seg.dim; ++k) viol = std::max(viol, std::abs(aty[seg.offset + k]));
    } else {
      // ⟨W, X⟩ = Σ aty_k X_k requires W_ij = aty_k / 2 off the diagonal.
      Eigen::MatrixXd w(seg.dim, seg.dim);
      for (std::size_t j = 0; j < seg.dim; ++j)
        for (std::size_t i = 0; i <= j; ++i) {
          const double v = aty[seg.offset + tri_index(i, j)];
          w(i, j) = w(j, i) = (i == j) ? v : 0.5 * v;
        }
      viol = std::max(viol, -min_eigenvalue(w));
    }
  }
  return viol;
}

// ----------------------------------------------------------- splitting solver

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

/// Scaled working copy of the problem in svec coordinates
/// (off-diagonal block entries carry a factor √2 so the inner product is Euclidean).
class Workspace {
 public:
  Workspace(const SdpProblem& p, const SolverOptions& o) : prob_(p), opts_(o) {}

  /// Returns false when a constraint row is identically zero with nonzero rhs.
  bool setup(SdpSolution& early) {
    const std::size_t n = prob_.num_vars();
    // svec weight: X_k = w_k · x̂_k
    svec_w_.assign(n, 1.0);
    seg_of_.assign(n, 0);
    for (std::size_t s = 0; s < prob_.segments().size(); ++s) {
      const auto& seg = prob_.segments()[s];
      for (std::size_t k = 0; k < seg.size(); ++k) seg_of_[seg.offset + k] = s;
      if (seg.kind == SdpProblem::Segment::Kind::Psd)
        for (std::size_t j = 0; j < seg.dim; ++j)
          for (std::size_t i = 0; i < j; ++i) svec_w_[seg.offset + tri_index(i, j)] = 1.0 / kSqrt2;
    }

    // Drop empty rows; an empty row with nonzero rhs is trivially infeasible.
    const auto& cons = prob_.constraints();
    for (std::size_t i = 0; i < cons.size(); ++i) {
      bool empty = true;
      for (const Term& t : cons[i].form) empty = empty && t.coeff == 0.0;
      if (empty) {
        if (std::abs(cons[i].rhs) > opts_.feas_tol) {
          early.status = Status::Infeasible;
          early.infeasibility_certificate.assign(cons.size(), 0.0);
          early.infeasibility_certificate[i] = cons[i].rhs > 0 ? -1.0 / cons[i].rhs : 1.0 / -cons[i].rhs;
          early.certificate_residual = 0.0;
          return false;
        }
        continue;
      }
      rows_.push_back(i);
    }
    const std::size_t m = rows_.size();

    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t r = 0; r < m; ++r)
      for (const Term& t : cons[rows_[r]].form)
        if (t.coeff != 0.0) trip.emplace_back(static_cast<int>(r), static_cast<int>(t.var), t.coeff * svec_w_[t.var]);
    SpMat a(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    a.setFromTriplets(trip.begin(), trip.end());
    a.makeCompressed();
    b_.resize(static_cast<Eigen::Index>(m));
    for (std::size_t r = 0; r < m; ++r) b_[static_cast<Eigen::Index>(r)] = cons[rows_[r]].rhs;
    c_ = Vec::Zero(static_cast<Eigen::Index>(n));
    for (const Term& t : prob_.objective()) c_[static_cast<Eigen::Index>(t.var)] += t.coeff * svec_w_[t.var];
    has_objective_ = c_.lpNorm<Eigen::Infinity>() > 0.0;

    // Ruiz equilibration: rows individually, columns uniformly per cone segment
    // (free variables individually) so the scaled cone is unchanged.
    row_scale_ = Vec::Ones(static_cast<Eigen::Index>(m));
    col_scale_ = Vec::Ones(static_cast<Eigen::Index>(n));
    if (opts_.equilibrate && m > 0) {
      SpMat work = a;
      for (int pass = 0; pass < opts_.ruiz_passes; ++pass) {
        Vec rn = Vec::Zero(static_cast<Eigen::Index>(m));
        Vec cn = Vec::Zero(static_cast<Eigen::Index>(n));
        for (int k = 0; k < work.outerSize(); ++k)
          for (SpMat::InnerIterator it(work, k); it; ++it) {
            rn[it.row()] = std::max(rn[it.row()], std::abs(it.value()));
            cn[it.col()] = std::max(cn[it.col()], std::abs(it.value()));
          }
        std::vector<double> seg_norm(prob_.segments().size(), 0.0);
        for (std::size_t k = 0; k < n; ++k) {
          const auto& seg = prob_.segments()[seg_of_[k]];
          if (seg.kind == SdpProblem::Segment::Kind::Psd)
            seg_norm[seg_of_[k]] = std::max(seg_norm[seg_of_[k]], cn[static_cast<Eigen::Index>(k)]);
        }
        Vec dr(static_cast<Eigen::Index>(m));
        Vec dc(static_cast<Eigen::Index>(n));
        for (Eigen::Index r = 0; r < dr.size(); ++r) dr[r] = rn[r] > 0 ? 1.0 / std::sqrt(rn[r]) : 1.0;
        for (std::size_t k = 0; k < n; ++k) {
          const auto& seg = prob_.segments()[seg_of_[k]];
          const double nk = seg.kind == SdpProblem::Segment::Kind::Psd ? seg_norm[seg_of_[k]] : cn[static_cast<Eigen::Index>(k)];
          dc[static_cast<Eigen::Index>(k)] = nk > 0 ? 1.0 / std::sqrt(nk) : 1.0;
        }
        for (Eigen::Index r = 0; r < dr.size(); ++r) dr[r] = std::clamp(row_scale_[r] * dr[r], 1e-4, 1e4) / row_scale_[r];
        for (Eigen::Index k = 0; k < dc.size(); ++k) dc[k] = std::clamp(col_scale_[k] * dc[k], 1e-4, 1e4) / col_scale_[k];
        work = dr.asDiagonal() * work * dc.asDiagonal();
        row_scale_ = row_scale_.cwiseProduct(dr);
        col_scale_ = col_scale_.cwiseProduct(dc);
      }
    }
    a_ = row_scale_.asDiagonal() * a * col_scale_.asDiagonal();
    a_.makeCompressed();
    at_ = a_.transpose();
    bs_ = row_scale_.cwiseProduct(b_);
    cs_ = col_scale_.cwiseProduct(c_);
    cost_scale_ = has_objective_ ? 1.0 / std::max(1e-8, cs_.lpNorm<Eigen::Infinity>()) : 1.0;
    cs_ *= cost_scale_;

    if (m > 0) {
      SpMat aat = a_ * at_;
      double maxdiag = 0.0;
      for (Eigen::Index i = 0; i < aat.rows(); ++i) maxdiag = std::max(maxdiag, aat.coeff(i, i));
      reg_ = 1e-12 * std::max(1.0, maxdiag);
      SpMat reg(aat.rows(), aat.cols());
      reg.setIdentity();
      aat_ = aat;
      ldlt_.compute(aat + reg_ * reg);
      if (ldlt_.info() != Eigen::Success) {
        early.status = Status::NumericalFailure;
        return false;
      }
    }
    eig_.resize(prob_.segments().size());
    return true;
  }

  std::size_t n() const { return prob_.num_vars(); }
  std::size_t m() const { return rows_.size(); }

  /// Solves (A Aᵀ) t = r with one step of iterative refinement.
  Vec solve_aat(const Vec& r) const {
    Vec t = ldlt_.solve(r);
    Vec res = r - aat_ * t;
    t += ldlt_.solve(res);
    return t;
  }

  /// Projection onto {x : A x = b}; also returns the multiplier t.
  void project_affine(const Vec& w, Vec& x, Vec& t) const {
    if (m() == 0) {
      x = w;
      t.resize(0);
      return;
    }
    t = solve_aat(a_ * w - bs_);
    x = w - at_ * t;
  }

  void project_cone(const Vec& v, Vec& z) {
    z = v;
    for (std::size_t s = 0; s < prob_.segments().size(); ++s) {
      const auto& seg = prob_.segments()[s];
      if (seg.kind == SdpProblem::Segment::Kind::Free) continue;
      const auto off = static_cast<Eigen::Index>(seg.offset);
      if (seg.dim == 1) {
        z[off] = std::max(0.0, v[off]);
        continue;
      }
      const auto d = static_cast<Eigen::Index>(seg.dim);
      Eigen::MatrixXd& mat = mat_buf_;
      mat.resize(d, d);
      for (Eigen::Index j = 0; j < d; ++j) {
        const Eigen::Index base = off + j * (j + 1) / 2;
        for (Eigen::Index i = 0; i < j; ++i) mat(i, j) = v[base + i] / kSqrt2;
        mat(j, j) = v[base + j];
      }
      auto& es = eig_[s];
      es.compute(mat.selfadjointView<Eigen::Upper>());
      const Vec& lam = es.eigenvalues();
      if (lam.minCoeff() >= 0.0) continue;
      const Eigen::MatrixXd& q = es.eigenvectors();
      Eigen::Index npos = 0;
      for (Eigen::Index k = 0; k < d; ++k) npos += lam[k] > 0.0 ? 1 : 0;
      if (npos == 0) {
        mat.setZero();
      } else {
        // eigenvalues ascend: positive ones are the trailing npos columns
        const auto qp = q.rightCols(npos);
        mat.noalias() = qp * lam.tail(npos).asDiagonal() * qp.transpose();
      }
      for (Eigen::Index j = 0; j < d; ++j) {
        const Eigen::Index base = off + j * (j + 1) / 2;
        for (Eigen::Index i = 0; i < j; ++i) z[base + i] = mat(i, j) * kSqrt2;
        z[base + j] = mat(j, j);
      }
    }
  }

  /// Maps scaled svec iterate to flat problem values X_k.
  std::vector<double> unscale(const Vec& x) const {
    std::vector<double> out(n());
    for (std::size_t k = 0; k < n(); ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      out[k] = x[kk] * col_scale_[kk] * svec_w_[k];
    }
    return out;
  }

  /// Scaled equality multiplier → original y (indexed by all constraints).
  std::vector<double> unscale_dual(const Vec& y) const {
    std::vector<double> out(prob_.constraints().size(), 0.0);
    for (std::size_t r = 0; r < m(); ++r)
      out[rows_[r]] = y[static_cast<Eigen::Index>(r)] * row_scale_[static_cast<Eigen::Index>(r)] / cost_scale_;
    return out;
  }

  std::vector<double> certificate_from(const Vec& d) const {
    // d ≈ x − z lies in range(Aᵀ) and −d in the dual cone; y = −(AAᵀ)⁻¹A d.
    Vec ys = -solve_aat(a_ * d);
    std::vector<double> out(prob_.constraints().size(), 0.0);
    for (std::size_t r = 0; r < m(); ++r)
      out[rows_[r]] = ys[static_cast<Eigen::Index>(r)] * row_scale_[static_cast<Eigen::Index>(r)];
    return out;
  }

  const Vec& cs() const { return cs_; }
  const SpMat& at() const { return at_; }
  const Vec& bs() const { return bs_; }
  bool has_objective() const { return has_objective_; }
  double cost_scale() const { return cost_scale_; }

 private:
  const SdpProblem& prob_;
  const SolverOptions& opts_;
  std::vector<double> svec_w_;
  std::vector<std::size_t> seg_of_;
  std::vector<std::size_t> rows_;
  Vec b_, c_, bs_, cs_;
  Vec row_scale_, col_scale_;
  double cost_scale_ = 1.0;
  bool has_objective_ = false;
  SpMat a_, at_, aat_;
  double reg_ = 0.0;
  Eigen::SimplicialLDLT<SpMat> ldlt_;
  std::vector<Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>> eig_;
  Eigen::MatrixXd mat_buf_;
};

/// Type-II Anderson acceleration on the fixed-point map v ↦ T(v).
class Anderson {
 public:
  explicit Anderson(int memory) : mem_(memory) {}

  void reset() {
    s_.clear();
    y_.clear();
    have_prev_ = false;
  }

  /// Given v and g = T(v) − v, returns the next iterate (accelerated when possible).
  Vec step(const Vec& v, const Vec& g) {
    if (have_prev_) {
      s_.push_back(v - v_prev_);
      y_.push_back(g - g_prev_);
      if (static_cast<int>(s_.size()) > mem_) {
        s_.erase(s_.begin());
        y_.erase(y_.begin());
      }
    }
    v_prev_ = v;
    g_prev_ = g;
    have_prev_ = true;
    const auto k = static_cast<Eigen::Index>(s_.size());
    if (k == 0) return v + g;
    Eigen::MatrixXd ytY(k, k);
    Vec ytg(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      ytg[i] = y_[static_cast<std::size_t>(i)].dot(g);
      for (Eigen::Index j = 0; j <= i; ++j)
        ytY(i, j) = ytY(j, i) = y_[static_cast<std::size_t>(i)].dot(y_[static_cast<std::size_t>(j)]);
    }
    const double reg = 1e-10 * std::max(1e-30, ytY.diagonal().maxCoeff());
    ytY.diagonal().array() += reg;
    Vec gamma = ytY.ldlt().solve(ytg);
    if (!gamma.allFinite()) {
      reset();
      return v + g;
    }
    Vec out = v + g;
    for (Eigen::Index i = 0; i < k; ++i)
      out -= gamma[i] * (s_[static_cast<std::size_t>(i)] + y_[static_cast<std::size_t>(i)]);
    return out;
  }

  bool active() const { return mem_ > 0; }

 private:
  int mem_;
  std::vector<Vec> s_, y_;
  Vec v_prev_, g_prev_;
  bool have_prev_ = false;
};

void fill_blocks(const SdpProblem& p, SdpSolution& sol) {
  sol.block_values.clear();
  for (std::size_t b = 0; b < p.num_blocks(); ++b) sol.block_values.push_back(block_matrix(p, b, sol.values));
}

}  // namespace

SdpSolution SplittingSolver::solve(const SdpProblem& problem, const SolverOptions& opts) const {
  problem.validate();
  if (!(opts.feas_tol > 0) || !(opts.gap_tol > 0) || opts.max_iters <= 0 || !(opts.relaxation > 0) ||
      !(opts.relaxation < 2) || !(opts.rho > 0))
    throw UsageError("invalid solver options");

  SdpSolution sol;
  Workspace ws(problem, opts);
  if (!ws.setup(sol)) {
    sol.values.assign(problem.num_vars(), 0.0);
    fill_blocks(problem, sol);
    return sol;
  }
  const auto n = static_cast<Eigen::Index>(ws.n());
  const double alpha = opts.relaxation;
  double rho = opts.rho;

  Vec v = Vec::Zero(n);
  Vec z(n), x(n), t, w(n), tv(n), g(n);
  Vec z_prev = Vec::Zero(n);
  Anderson aa(opts.anderson_memory);

  // Safeguard state for accelerated steps.
  bool pending = false;
  double g_base_norm = 0.0;
  Vec tv_base;
  // Once the residual stops improving, acceleration is dropped for good and the
  // plain iteration restarts from the origin.
  bool accelerate = aa.active();
  double best_gnorm = std::numeric_limits<double>::infinity();
  int best_it = 0;

  auto evaluate = [&](const Vec& vv) {
    ws.project_cone(vv, z);
    w = 2.0 * z - vv - ws.cs() / rho;
    ws.project_affine(w, x, t);
    g = alpha * (x - z);
  };

  const int cert_interval = std::max(1, opts.check_interval) * 5;
  int it = 0;
  for (; it < opts.max_iters; ++it) {
    evaluate(v);
    double gnorm = g.norm();
    if (pending) {
      pending = false;
      if (!(gnorm <= g_base_norm)) {
        aa.reset();
        v = tv_base;
        evaluate(v);
        gnorm = g.norm();
      }
    }
    if (!std::isfinite(gnorm)) {
      sol.status = Status::NumericalFailure;
      break;
    }
    if (gnorm < 0.99 * best_gnorm) {
      best_gnorm = gnorm;
      best_it = it;
    } else if (accelerate && it - best_it > std::max(200, it / 4)) {
      accelerate = false;
      aa.reset();
      pending = false;
      best_gnorm = std::numeric_limits<double>::infinity();
      best_it = it;
      if (opts.verbose)
        std::cerr << fmt::format("[sdp {}] it {:6d} acceleration off, restart from |v| {:.3e}\n", problem.name(), it,
                                 v.norm());
      v.setZero();
      evaluate(v);
      gnorm = g.norm();
    }

    if (it % opts.check_interval == 0 || it == opts.max_iters - 1) {
      sol.values = ws.unscale(z);
      const ResidualReport rep = check_values(problem, sol.values);
      sol.primal_residual = rep.max_violation;
      sol.objective_value = rep.objective;
      // s = ρ(z − v) is the cone dual; y = −ρ t / scale.
      Vec ys = -rho * t;
      Vec s = rho * (z - v);
      Vec rd = ws.cs() - ws.at() * ys - s;
      sol.dual_residual = rd.lpNorm<Eigen::Infinity>() / (1.0 + ws.cs().lpNorm<Eigen::Infinity>());
      sol.dual = ws.unscale_dual(ys);
      double dobj = 0.0;
      for (std::size_t i = 0; i < problem.constraints().size(); ++i)
        dobj += problem.constraints()[i].rhs * sol.dual[i];
      sol.gap = std::abs(sol.objective_value - dobj) / (1.0 + std::abs(sol.objective_value) + std::abs(dobj));
      if (opts.verbose && it % (opts.check_interval * 100) == 0)
        std::cerr << fmt::format("[sdp {}] it {:6d} pres {:.3e} dres {:.3e} gap {:.3e} |g| {:.3e} |v| {:.3e} rho {:.2e}\n", problem.name(),
                                 it, sol.primal_residual, sol.dual_residual, sol.gap, gnorm, v.norm(), rho);
      if (sol.primal_residual <= opts.feas_tol) {
        if (!ws.has_objective()) {
          sol.status = Status::Feasible;
          break;
        }
        if (sol.dual_residual <= opts.gap_tol && sol.gap <= opts.gap_tol) {
          sol.status = Status::Optimal;
          break;
        }
      }
      if (ws.has_objective() && opts.adaptive_rho && it > 0 && it % (opts.check_interval * 10) == 0) {
        const double pr = (x - z).norm() / std::max({1e-30, x.norm(), z.norm()});
        const double dr = rd.norm() / std::max({1e-30, ws.cs().norm(), (ws.at() * ys).norm(), s.norm()});
        const double ratio = std::sqrt(pr / std::max(dr, 1e-30));
        if (ratio > 5.0 || ratio < 0.2) {
          const double new_rho = std::clamp(rho * ratio, 1e-6, 1e6);
          // keep z and rescale the scaled dual u = v − z
          v = z + (v - z) * (rho / new_rho);
          rho = new_rho;
          aa.reset();
          best_gnorm = std::numeric_limits<double>::infinity();
          best_it = it;
          continue;
        }
      }
    }

    if (it > 0 && it % cert_interval == 0) {
      const Vec d = x - z;
      if (d.norm() > 1e-12 * (1.0 + z.norm())) {
        std::vector<double> y = ws.certificate_from(d);
        const double res = certificate_residual(problem, y);
        if (res <= opts.feas_tol) {
          double by = 0.0;
          for (std::size_t i = 0; i < y.size(); ++i) by += problem.constraints()[i].rhs * y[i];
          for (double& yi : y) yi /= -by;
          sol.status = Status::Infeasible;
          sol.infeasibility_certificate = std::move(y);
          sol.certificate_residual = res;
          break;
        }
      }
      if (ws.has_objective()) {
        // unboundedness: z drifts along a recession direction d with Ad = 0, cᵀd < 0
        const Vec dz = z - z_prev;
        const double cd = ws.cs().dot(dz);
        if (cd < 0 && dz.norm() > 1e-9) {
          const std::vector<double> dv = ws.unscale(dz / (-cd / ws.cost_scale()));
          std::vector<double> zero_rhs(dv.size());
          const ResidualReport rep = check_values(problem, dv);
          double ad = 0.0;
          for (std::size_t i = 0; i < problem.constraints().size(); ++i)
            ad = std::max(ad, std::abs(rep.violations[i] + problem.constraints()[i].rhs));
          if (ad <= opts.feas_tol && rep.min_eigenvalue >= -opts.feas_tol) {
            sol.status = Status::Unbounded;
            break;
          }
        }
      }
      z_prev = z;
    }

    tv = v + g;
    if (accelerate) {
      Vec next = aa.step(v, g);
      if (next.allFinite() && (next - tv).norm() > 0.0) {
        pending = true;
        g_base_norm = gnorm;
        tv_base = tv;
        v = std::move(next);
      } else {
        v = tv;
      }
    } else {
      v = tv;
    }
  }
  sol.iterations = it;
  if (it >= opts.max_iters) sol.status = Status::MaxIterations;
  if (sol.values.size() != problem.num_vars()) sol.values = ws.unscale(z);
  if (sol.status == Status::NumericalFailure && it < opts.max_iters && sol.values.empty())
    sol.values.assign(problem.num_vars(), 0.0);
  fill_blocks(problem, sol);
  return sol;
}

SdpSolution solve(const SdpProblem& problem, const SolverOptions& options) {
  return SplittingSolver{}.solve(problem, options);
}

}  // namespace veclyap::sdp
