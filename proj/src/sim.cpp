#include "veclyap/sim.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "veclyap/sampling.hpp"

namespace veclyap::sim {

Simulator::Simulator(const InterconnectedSystem& sys, std::vector<Polynomial> V,
                     const certifier::CertificationResult* schedule)
    : sys_(&sys), V_(std::move(V)), field_(sys.field()), schedule_(schedule) {
  if (V_.size() != sys.size()) throw UsageError("one Lyapunov function per subsystem is required");
  for (const auto& v : V_) cV_.emplace_back(v);
  if (schedule_) {
    for (const auto& law : schedule_->schedule.controllers) {
      Law l{sys.position(law.subsystem_id), law.iteration, {}};
      const Subsystem& sub = sys.subsystem(l.pos);
      if (law.F.size() != sub.dim())
        throw UsageError(fmt::format("controller of S{} has {} components for {} states", sub.id, law.F.size(),
                                     sub.dim()));
      for (std::size_t c = 0; c < sub.dim(); ++c)
        if (!law.F[c].is_zero()) l.channels.emplace_back(sub.states[c], CompiledPolynomial(law.F[c]));
      laws_.push_back(std::move(l));
    }
    std::sort(laws_.begin(), laws_.end(), [](const Law& a, const Law& b) { return a.k < b.k; });
  }
  const std::size_t n = sys.dim();
  k1_.resize(n);
  k2_.resize(n);
  k3_.resize(n);
  k4_.resize(n);
  tmp_.resize(n);
}

void Simulator::lyapunov_values(const double* x, std::vector<double>& out) const {
  out.resize(cV_.size());
  for (std::size_t i = 0; i < cV_.size(); ++i) out[i] = cV_[i](x);
}

std::vector<int> Simulator::active_shells(const std::vector<double>& v, double h) const {
  std::vector<int> shells(sys_->size(), -1);
  if (!schedule_) return shells;
  const auto& levels = schedule_->schedule.levels;
  for (const Law& l : laws_) {
    const std::size_t i = l.pos;
    if (shells[i] >= 0) continue;
    const auto k = static_cast<std::size_t>(l.k);
    if (k + 1 >= levels.size()) continue;
    const double bottom = levels[k + 1][i];
    const double top = levels[k][i];
    if (std::isnan(bottom) || v[i] < bottom - h || v[i] > top + h) continue;
    bool inside = true;
    for (std::size_t j : sys_->neighbors(i))
      if (j != i && v[j] > levels[k][j] + h) inside = false;
    if (inside) shells[i] = l.k;
  }
  return shells;
}

void Simulator::derivative(const double* x, const std::vector<int>& shells, double* out) const {
  field_(x, out);
  for (const Law& l : laws_)
    if (shells[l.pos] == l.k)
      for (const auto& [var, F] : l.channels) out[var] += F(x);
}

Status Simulator::step(std::vector<double>& x, double dt, const std::vector<int>& shells) const {
  const std::size_t n = x.size();
  derivative(x.data(), shells, k1_.data());
  for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + 0.5 * dt * k1_[i];
  derivative(tmp_.data(), shells, k2_.data());
  for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + 0.5 * dt * k2_[i];
  derivative(tmp_.data(), shells, k3_.data());
  for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + dt * k3_[i];
  derivative(tmp_.data(), shells, k4_.data());
  for (std::size_t i = 0; i < n; ++i) x[i] += dt / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
  return Status::Completed;
}

Trajectory Simulator::integrate(std::vector<double> x0, const SimOptions& opts) const {
  if (x0.size() != sys_->dim())
    throw UsageError(fmt::format("initial state has dimension {} but the system has {}", x0.size(), sys_->dim()));
  if (!(opts.dt > 0.0) || !(opts.horizon >= 0.0)) throw UsageError("dt must be positive and the horizon nonnegative");
  Trajectory traj;
  traj.state_names = sys_->vars()->names();
  for (const auto& sub : sys_->subsystems()) traj.lyapunov_names.push_back(fmt::format("V{}", sub.id));
  const std::size_t steps = static_cast<std::size_t>(std::llround(opts.horizon / opts.dt));
  const std::size_t every = std::max<std::size_t>(1, opts.record_every);
  std::size_t s = 0;
  std::vector<std::pair<int, int>> active;
  traj.status = run(std::move(x0), opts, [&](double t, const std::vector<double>& x, const std::vector<double>& v) {
    if (s % every == 0 || s == steps) {
      traj.times.push_back(t);
      traj.states.push_back(x);
      traj.lyapunov.push_back(v);
      traj.control_activity.push_back(active);
    }
    active.clear();
    const auto shells = active_shells(v, opts.hysteresis);
    for (std::size_t i = 0; i < shells.size(); ++i)
      if (shells[i] >= 0) active.emplace_back(sys_->subsystem(i).id, shells[i]);
    ++s;
    return true;
  });
  return traj;
}

// ---------------------------------------------------------------- ROA probe

RoaProbe probe_roa(const Subsystem& sub, const Polynomial& V, const GridSpec& grid, double horizon, double dt,
                   double conv_tol) {
  if (sub.dim() < 1 || sub.dim() > 2) throw UsageError("ROA grid probing supports 1- and 2-state subsystems");
  if (grid.cells == 0 || !(grid.hi > grid.lo)) throw UsageError("empty probing grid");
  const VarSetPtr& vars = V.vars();
  CompiledField f(sub.embed(sub.f));
  CompiledPolynomial cv(V);
  RoaProbe out;
  out.grid = grid;
  out.dim = sub.dim();
  const std::size_t total = sub.dim() == 1 ? grid.cells : grid.cells * grid.cells;
  out.converged.assign(total, false);
  out.v_values.assign(total, 0.0);
  out.centers.assign(total, std::vector<double>(sub.dim()));
  const double h = (grid.hi - grid.lo) / static_cast<double>(grid.cells);
  const std::size_t steps = static_cast<std::size_t>(std::llround(horizon / dt));
  const std::size_t n = vars->size();
  std::vector<double> x(n), k1(n), k2(n), k3(n), k4(n), tmp(n);
  for (std::size_t c = 0; c < total; ++c) {
    std::fill(x.begin(), x.end(), 0.0);
    const std::size_t a = sub.dim() == 1 ? c : c / grid.cells;
    const std::size_t b = c % grid.cells;
    out.centers[c][0] = grid.lo + (static_cast<double>(a) + 0.5) * h;
    if (sub.dim() == 2) out.centers[c][1] = grid.lo + (static_cast<double>(b) + 0.5) * h;
    for (std::size_t d = 0; d < sub.dim(); ++d) x[sub.states[d]] = out.centers[c][d];
    out.v_values[c] = cv(x.data());
    bool conv = false;
    for (std::size_t s = 0; s <= steps; ++s) {
      double n2 = 0.0;
      for (std::size_t v : sub.states) n2 += x[v] * x[v];
      if (n2 < conv_tol * conv_tol) {
        conv = true;
        break;
      }
      if (!std::isfinite(n2) || n2 > 1e12) break;
      f(x.data(), k1.data());
      for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
      f(tmp.data(), k2.data());
      for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
      f(tmp.data(), k3.data());
      for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + dt * k3[i];
      f(tmp.data(), k4.data());
      for (std::size_t i = 0; i < n; ++i) x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out.converged[c] = conv;
    if (out.v_values[c] <= 1.0 && !conv) ++out.certified_but_diverged;
    if (out.v_values[c] > 1.0 && conv) ++out.converged_outside_estimate;
  }
  return out;
}

// --------------------------------------------------------------------- CSV

void export_traces(const Trajectory& traj, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  os << "time";
  for (const auto& n : traj.state_names) os << ',' << n;
  for (const auto& n : traj.lyapunov_names) os << ',' << n;
  os << '\n';
  for (std::size_t s = 0; s < traj.size(); ++s) {
    std::string row = fmt::format("{:.17g}", traj.times[s]);
    for (double v : traj.states[s]) row += fmt::format(",{:.17g}", v);
    for (double v : traj.lyapunov[s]) row += fmt::format(",{:.17g}", v);
    os << row << '\n';
  }
  if (!os) throw std::runtime_error(fmt::format("write to {} failed", path.string()));
}

Trajectory read_traces(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error(fmt::format("cannot read {}", path.string()));
  Trajectory traj;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error(fmt::format("{} is empty", path.string()));
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.empty() || header[0] != "time") throw std::runtime_error("trace CSV must start with a time column");
  std::size_t first_v = header.size();
  for (std::size_t c = 1; c < header.size(); ++c)
    if (header[c].rfind("V", 0) == 0) {
      first_v = c;
      break;
    }
  traj.state_names.assign(header.begin() + 1, header.begin() + static_cast<std::ptrdiff_t>(first_v));
  traj.lyapunov_names.assign(header.begin() + static_cast<std::ptrdiff_t>(first_v), header.end());
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != header.size()) throw std::runtime_error("ragged row in trace CSV");
    traj.times.push_back(row[0]);
    traj.states.emplace_back(row.begin() + 1, row.begin() + static_cast<std::ptrdiff_t>(first_v));
    traj.lyapunov.emplace_back(row.begin() + static_cast<std::ptrdiff_t>(first_v), row.end());
    traj.control_activity.emplace_back();
  }
  return traj;
}

TraceSummary summarize(const Trajectory& traj, double conv_tol, double mono_tol) {
  TraceSummary s;
  s.status = traj.status;
  if (traj.size() == 0) return s;
  double n2 = 0.0;
  for (double x : traj.states.back()) n2 += x * x;
  s.final_norm = std::sqrt(n2);
  s.converged = traj.status == Status::Completed && s.final_norm < conv_tol;
  s.max_v = traj.lyapunov.front();
  for (std::size_t k = 1; k < traj.size(); ++k)
    for (std::size_t i = 0; i < traj.lyapunov[k].size(); ++i) {
      s.max_v[i] = std::max(s.max_v[i], traj.lyapunov[k][i]);
      if (traj.lyapunov[k][i] > traj.lyapunov[k - 1][i] + mono_tol) ++s.monotonicity_violations;
    }
  return s;
}

std::string summary_to_json(const TraceSummary& s) {
  nlohmann::json j{{"status", s.status == Status::Completed ? "Completed" : "Diverged"},
                   {"converged", s.converged},
                   {"final_norm", s.final_norm},
                   {"monotonicity_violations", s.monotonicity_violations},
                   {"max_v", s.max_v}};
  return j.dump(2);
}

// -------------------------------------------------------------- validation

ValidationReport validate_schedule(const InterconnectedSystem& sys, const std::vector<Polynomial>& V,
                                   const certifier::CertificationResult& result, const ValidationOptions& opts) {
  const auto& levels = result.schedule.levels;
  if (levels.empty()) throw UsageError("schedule has no levels");
  const std::size_t m = sys.size();
  const std::size_t rounds = levels.size();
  bool ends_at_zero = true;
  for (double e : levels.back()) ends_at_zero = ends_at_zero && e == 0.0;

  struct Outcome {
    bool excluded = false, passed = false, converged = false, invariance = true, monotone = true;
    double final_norm = 0.0, excess = -1e300;
  };
  std::vector<Outcome> outcomes(opts.trajectories);
  parallel_for(opts.trajectories, [&](std::size_t t) {
    std::mt19937_64 rng(opts.seed * 1000003ULL + t);
    std::vector<double> x0(sys.dim(), 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      LevelSampler sampler(V[i], sys.subsystem(i).sorted_states());
      const double top = levels[0][i];
      if (!sampler.sample(rng, opts.on_boundary ? top : 0.0, top, x0))
        throw std::runtime_error(fmt::format("cannot sample the level set of S{}", sys.subsystem(i).id));
    }
    Simulator simulator(sys, V, &result);
    // crossed[i][k]: Vᵢ has dropped to εᵢᵏ; broken: re-crossed upward afterwards
    std::vector<std::vector<bool>> crossed(m, std::vector<bool>(rounds, false));
    bool broken = false;
    Outcome& o = outcomes[t];
    std::vector<double> prev;
    std::vector<double> last_x;
    const Status st = simulator.run(x0, opts.sim, [&](double, const std::vector<double>& x, const std::vector<double>& v) {
      for (std::size_t i = 0; i < m; ++i) {
        o.excess = std::max(o.excess, v[i] - levels[0][i]);
        if (v[i] > levels[0][i] + opts.invariance_tol) o.invariance = false;
        if (!prev.empty() && v[i] > prev[i] + opts.mono_tol) o.monotone = false;
        for (std::size_t k = 0; k < rounds; ++k) {
          const double e = levels[k][i];
          if (std::isnan(e)) continue;
          if (crossed[i][k] && v[i] > e + opts.v_tol) broken = true;
          if (v[i] <= e) crossed[i][k] = true;
        }
      }
      prev = v;
      last_x = x;
      return true;
    });
    if (st == Status::Diverged) {
      o.excluded = true;
      return;
    }
    double n2 = 0.0;
    for (double xi : last_x) n2 += xi * xi;
    o.final_norm = std::sqrt(n2);
    o.converged = o.final_norm < opts.conv_tol;
    bool all_crossed = true;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < rounds; ++k)
        if (levels[k][i] > 0.0 && !crossed[i][k]) all_crossed = false;
    o.passed = !broken && all_crossed && (!ends_at_zero || o.converged);
  });

  ValidationReport r;
  r.trajectories = opts.trajectories;
  for (std::size_t t = 0; t < outcomes.size(); ++t) {
    const Outcome& o = outcomes[t];
    if (o.excluded) {
      ++r.excluded;
      r.warnings.push_back(fmt::format("trajectory {} diverged numerically and was excluded", t));
      continue;
    }
    r.passed += o.passed;
    r.converged += o.converged;
    r.invariance_violations += !o.invariance;
    r.monotonicity_violations += !o.monotone;
    r.max_final_norm = std::max(r.max_final_norm, o.final_norm);
    r.max_level_excess = std::max(r.max_level_excess, o.excess);
  }
  return r;
}

std::string report_to_json(const ValidationReport& r) {
  nlohmann::json j{{"trajectories", r.trajectories},
                   {"passed", r.passed},
                   {"excluded", r.excluded},
                   {"pass_fraction", r.pass_fraction()},
                   {"converged", r.converged},
                   {"invariance_violations", r.invariance_violations},
                   {"monotonicity_violations", r.monotonicity_violations},
                   {"max_final_norm", r.max_final_norm},
                   {"max_level_excess", r.max_level_excess},
                   {"warnings", r.warnings}};
  return j.dump(2);
}

}  // namespace veclyap::sim
