#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "veclyap/certifier.hpp"
#include "veclyap/model.hpp"

namespace veclyap::sim {

struct SimOptions {
  double dt = 0.005;
  double horizon = 100.0;
  /// State norm treated as blow-up.
  double blowup = 1e6;
  /// Slack on shell boundaries when gating controllers.
  double hysteresis = 1e-9;
  /// Store every n-th step (the last step is always stored).
  std::size_t record_every = 1;
};

enum class Status { Completed, Diverged };

struct Trajectory {
  Status status = Status::Completed;
  std::vector<double> times;
  /// states[step][var]
  std::vector<std::vector<double>> states;
  /// lyapunov[step][subsystem position]
  std::vector<std::vector<double>> lyapunov;
  /// Active (subsystem id, shell k) pairs during the step that produced each row.
  std::vector<std::vector<std::pair<int, int>>> control_activity;
  std::vector<std::string> state_names;
  std::vector<std::string> lyapunov_names;

  std::size_t size() const { return times.size(); }
};

/// Fixed-step RK4 for ẋ = f(x) + g(x) (+ gated feedback). A controller of
/// shell k acts on subsystem i while εᵢᵏ⁺¹ ≤ Vᵢ ≤ εᵢᵏ and Vⱼ ≤ εⱼᵏ for j ∈ 𝒩ᵢ
/// (each bound relaxed by the hysteresis); the smallest matching k wins.
class Simulator {
 public:
  Simulator(const InterconnectedSystem& sys, std::vector<Polynomial> V,
            const certifier::CertificationResult* schedule = nullptr);

  Trajectory integrate(std::vector<double> x0, const SimOptions& opts = {}) const;

  /// Per-step callback variant; `visit(t, x, V)` returns false to stop early.
  template <typename Visit>
  Status run(std::vector<double> x, const SimOptions& opts, Visit&& visit) const;

  /// Evaluates every Vᵢ at x.
  void lyapunov_values(const double* x, std::vector<double>& out) const;
  /// Right-hand side at x given the active shell of each subsystem (-1: none).
  void derivative(const double* x, const std::vector<int>& shells, double* out) const;
  /// Active shell index per subsystem for the given V values.
  std::vector<int> active_shells(const std::vector<double>& v, double hysteresis) const;

  const InterconnectedSystem& system() const { return *sys_; }

 private:
  struct Law {
    std::size_t pos;
    int k;
    std::vector<std::pair<std::size_t, CompiledPolynomial>> channels;  // global var, F component
  };
  Status step(std::vector<double>& x, double dt, const std::vector<int>& shells) const;

  const InterconnectedSystem* sys_;
  std::vector<Polynomial> V_;
  std::vector<CompiledPolynomial> cV_;
  CompiledField field_;
  const certifier::CertificationResult* schedule_;
  std::vector<Law> laws_;
  mutable std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

template <typename Visit>
Status Simulator::run(std::vector<double> x, const SimOptions& opts, Visit&& visit) const {
  const std::size_t steps = static_cast<std::size_t>(std::llround(opts.horizon / opts.dt));
  std::vector<double> v(sys_->size());
  lyapunov_values(x.data(), v);
  if (!visit(0.0, x, v)) return Status::Completed;
  for (std::size_t s = 1; s <= steps; ++s) {
    const std::vector<int> shells = active_shells(v, opts.hysteresis);
    step(x, opts.dt, shells);
    double n2 = 0.0;
    bool finite = true;
    for (double xi : x) {
      n2 += xi * xi;
      finite = finite && std::isfinite(xi);
    }
    if (!finite || n2 > opts.blowup * opts.blowup) return Status::Diverged;
    lyapunov_values(x.data(), v);
    if (!visit(static_cast<double>(s) * opts.dt, x, v)) break;
  }
  return Status::Completed;
}

struct GridSpec {
  double lo = -3.0;
  double hi = 3.0;
  std::size_t cells = 200;
};

struct RoaProbe {
  GridSpec grid;
  std::size_t dim = 2;
  /// Row-major cell flags (first coordinate varies slowest).
  std::vector<bool> converged;
  std::vector<double> v_values;
  std::vector<std::vector<double>> centers;
  /// Cells with V ≤ 1 that did not converge.
  std::size_t certified_but_diverged = 0;
  /// Converged cells with V > 1.
  std::size_t converged_outside_estimate = 0;
};

/// Integrates the isolated dynamics fᵢ from every grid-cell center (other
/// states held at zero). Converged means ‖xᵢ‖ < conv_tol within the horizon.
/// Only 1- and 2-state subsystems are supported.
RoaProbe probe_roa(const Subsystem& sub, const Polynomial& V, const GridSpec& grid, double horizon = 100.0,
                   double dt = 0.01, double conv_tol = 1e-3);

/// CSV: header time, state names, V names; one row per stored step.
void export_traces(const Trajectory& traj, const std::filesystem::path& path);
/// Reads a CSV written by export_traces (V columns are those named V*).
Trajectory read_traces(const std::filesystem::path& path);

struct TraceSummary {
  Status status = Status::Completed;
  bool converged = false;
  double final_norm = 0.0;
  /// Steps where some Vᵢ increased by more than the tolerance.
  std::size_t monotonicity_violations = 0;
  std::vector<double> max_v;
};

TraceSummary summarize(const Trajectory& traj, double conv_tol = 1e-3, double mono_tol = 1e-9);
std::string summary_to_json(const TraceSummary& s);

struct ValidationOptions {
  std::size_t trajectories = 100;
  SimOptions sim;
  std::uint64_t seed = 1;
  /// Start every subsystem on its level set Vᵢ = εᵢ⁰ instead of inside it.
  bool on_boundary = false;
  double v_tol = 1e-9;
  double invariance_tol = 1e-6;
  double conv_tol = 1e-3;
  double mono_tol = 1e-9;
};

struct ValidationReport {
  std::size_t trajectories = 0;
  std::size_t passed = 0;
  /// Trajectories excluded because integration failed (blow-up).
  std::size_t excluded = 0;
  std::size_t converged = 0;
  /// Trajectories whose Vᵢ exceeded εᵢ⁰ + invariance_tol.
  std::size_t invariance_violations = 0;
  /// Trajectories with some per-step increase of a Vᵢ above mono_tol.
  std::size_t monotonicity_violations = 0;
  double max_final_norm = 0.0;
  double max_level_excess = 0.0;
  std::vector<std::string> warnings;

  double pass_fraction() const {
    const std::size_t n = trajectories - excluded;
    return n == 0 ? 0.0 : static_cast<double>(passed) / static_cast<double>(n);
  }
};

/// Monte-Carlo check of a schedule: trajectories from random x(0) with
/// Vᵢ(xᵢ(0)) ≤ εᵢ⁰ must cross every positive εᵢᵏ and never re-cross it upward
/// (within v_tol), and converge when the schedule ends at zero.
ValidationReport validate_schedule(const InterconnectedSystem& sys, const std::vector<Polynomial>& V,
                                   const certifier::CertificationResult& result, const ValidationOptions& opts = {});

std::string report_to_json(const ValidationReport& r);

}  // namespace veclyap::sim
