#pragma once

#include <optional>
#include <string>
#include <vector>

#include "veclyap/model.hpp"
#include "veclyap/sos.hpp"

namespace veclyap::control {

/// State feedback Fᵢᵏ(xᵢ) for one subsystem and round, nonzero only on input channels.
struct ControlLaw {
  int subsystem_id = 0;
  int iteration = 0;
  /// One entry per subsystem state (local order).
  PolyVec F;
  unsigned degree = 1;
  /// Σ of squared feedback coefficients (the regularizing objective).
  double effort = 0.0;
  std::optional<Polynomial> rho;
  std::vector<Polynomial> sigmas;
};

struct ControlOptions {
  /// Initial and maximal polynomial degree of F.
  unsigned degree = 1;
  unsigned max_degree = 3;
  /// Decrease margin λ‖xᵢ‖² demanded by synthesis; larger than the
  /// certification margin so the closed loop keeps slack.
  double margin = 1e-3;
  /// Margin used by needs_control.
  double check_margin = 1e-6;
  /// Degree of ρ and σᵢⱼ.
  unsigned multiplier_degree = 2;
  /// Actuate every state instead of the declared input channels.
  bool full_actuation = false;
  sos::ProgramOptions sos;
};

/// fᵢ + gᵢ (+ F) lifted to one entry per global variable.
PolyVec closed_loop_field(const Subsystem& sub, const PolyVec* F = nullptr);

/// Σ_{j ∈ 𝒩ᵢ} σᵢⱼ(εⱼ − Vⱼ) with fresh SOS multipliers over `basis`; the
/// subsystem itself is included when `include_self` is set.
sos::AffinePoly neighbor_terms(sos::SosProgram& prog, const InterconnectedSystem& sys, std::size_t pos,
                               const std::vector<Polynomial>& V, const std::vector<double>& levels,
                               const std::vector<Monomial>& basis, bool include_self);

/// True unless decrease of Vᵢ along fᵢ + gᵢ is certified on
/// {Vᵢ = εᵢ, Vⱼ ≤ εⱼ (j ∈ 𝒩ᵢ∖{i})}. Infeasible or undetermined programs count as true.
bool needs_control(const InterconnectedSystem& sys, std::size_t pos, const std::vector<Polynomial>& V,
                   const std::vector<double>& levels, const ControlOptions& opts = {});

/// Solves for F (degree opts.degree, escalating by one up to opts.max_degree)
/// with −∇Vᵢ·(fᵢ+gᵢ+F) − λ‖xᵢ‖² − ρ(εᵢ − Vᵢ) − Σ σᵢⱼ(εⱼ − Vⱼ) ∈ Σ, ρ free,
/// minimizing the squared coefficient norm of F. nullopt when every degree fails.
std::optional<ControlLaw> synthesize(const InterconnectedSystem& sys, std::size_t pos, const std::vector<Polynomial>& V,
                                     const std::vector<double>& levels, int iteration, const ControlOptions& opts = {});

/// Sampling check of closed-loop decrease on the level set {Vᵢ = εᵢ (± tol), Vⱼ ≤ εⱼ}.
/// Returns the number of samples with ∇Vᵢ·(fᵢ+gᵢ+F) ≥ 0.
std::size_t level_set_violations(const InterconnectedSystem& sys, std::size_t pos, const std::vector<Polynomial>& V,
                                 const std::vector<double>& levels, const PolyVec* F, std::size_t samples,
                                 std::uint64_t seed);

}  // namespace veclyap::control
