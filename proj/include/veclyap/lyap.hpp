#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "veclyap/model.hpp"
#include "veclyap/sos.hpp"

namespace veclyap::lyap {

struct LyapOptions {
  /// Total degree of V (even, ≥ 2).
  unsigned degree = 2;
  /// Candidate domain radii βᵢ for 𝒟ᵢ = {‖xᵢ‖² ≤ β}, tried in order.
  std::vector<double> betas = {4.0, 1.0, 0.25};
  /// Strictness margin λ for the positive-definiteness terms λ‖xᵢ‖².
  double margin = 1e-6;
  double gamma_rel_tol = 1e-3;
  sos::ProgramOptions sos;
};

struct LyapunovCertificate {
  int subsystem_id = 0;
  /// Scaled so that {V ≤ 1} is the certified ROA estimate (after scale_to_unit_roa).
  Polynomial V;
  unsigned degree = 2;
  double beta = 0.0;
  double gamma_max = 1.0;
  std::optional<sos::GramCertificate> positivity;
  std::optional<sos::GramCertificate> decrease;

  explicit LyapunovCertificate(Polynomial v) : V(std::move(v)) {}
};

/// Searches V with V − λ‖x‖² ≥ 0 and −∇V·f − λ‖x‖² ≥ 0 on {‖xᵢ‖² ≤ β}
/// (Putinar multipliers), normalized so the coefficients of xₖ² sum to nᵢ.
/// Returns nullopt when the program is infeasible or undetermined.
std::optional<LyapunovCertificate> find_initial_lyapunov(const Subsystem& sub, unsigned degree, double beta,
                                                         const LyapOptions& opts = {});

struct ScaleResult {
  Polynomial V;
  double gamma_max = 0.0;
};

/// Largest γ (bisection to relative tolerance) with {V ≤ γ} ⊆ {‖xᵢ‖² ≤ β} and
/// certified decrease on {V ≤ γ}; returns V/γ. Throws std::runtime_error when
/// no positive level can be certified.
ScaleResult scale_to_unit_roa(const Subsystem& sub, const Polynomial& V, double beta, const LyapOptions& opts = {});

/// Lower bound on the largest r with {‖xᵢ‖² ≤ r} ⊆ {V ≤ 1} (SOS-certified,
/// bisection). Returns 0 when nothing is certified.
double inscribed_ball(const Subsystem& sub, const Polynomial& V, unsigned multiplier_degree,
                      const LyapOptions& opts = {});

struct Expansion {
  LyapunovCertificate certificate;
  /// Certified squared radius of the inscribed ball after each iteration,
  /// starting with the input V.
  std::vector<double> radii;
};

/// Expanding-interior alternation: (a) with V fixed, certify decrease on
/// {V ≤ 1} and the largest inscribed ball; (b) with those multipliers fixed,
/// re-solve for V (of opts.degree) containing the largest ball. Keeps the best
/// V seen, so `radii` is non-decreasing. Candidates whose ball exceeds the
/// largest candidate domain max(opts.betas) are rejected.
Expansion expand_roa(const Subsystem& sub, const LyapunovCertificate& start, int iterations = 20,
                     const LyapOptions& opts = {});

/// find_initial_lyapunov over opts.betas (largest first), then scale_to_unit_roa.
std::optional<LyapunovCertificate> certify_subsystem(const Subsystem& sub, const LyapOptions& opts = {});

/// One certificate per subsystem, computed concurrently. Throws
/// std::runtime_error naming the subsystems for which no V was found.
std::vector<LyapunovCertificate> certify_all(const InterconnectedSystem& sys, const LyapOptions& opts = {},
                                             int expand_iterations = 0);

/// Sampling check: V > 0 and ∇V·f < 0 at `samples` random points with
/// 0 < V ≤ 1. Returns the number of violating samples.
std::size_t sample_violations(const Subsystem& sub, const Polynomial& V, std::size_t samples, std::uint64_t seed);

std::string certificates_to_json(const std::vector<LyapunovCertificate>& certs);
std::vector<LyapunovCertificate> certificates_from_json(const VarSetPtr& vars, const std::string& text);
void save_certificates(const std::vector<LyapunovCertificate>& certs, const std::filesystem::path& path);
std::vector<LyapunovCertificate> load_certificates(const VarSetPtr& vars, const std::filesystem::path& path);

}  // namespace veclyap::lyap
