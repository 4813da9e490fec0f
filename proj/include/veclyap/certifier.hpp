#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "veclyap/control.hpp"
#include "veclyap/lyap.hpp"
#include "veclyap/model.hpp"

namespace veclyap::certifier {

struct CertifyOptions {
  /// Termination threshold ε̄; bisection resolution is ε̄/4.
  double eps_bar = 1e-3;
  int max_rounds = 50;
  bool control = false;
  /// Strictness margin λ‖xᵢ‖² in the shell condition.
  double margin = 1e-6;
  /// Degree of σᵢ₀ and σᵢⱼ, raised in steps of 2 up to the cap when the top of
  /// the bisection range is infeasible.
  unsigned multiplier_degree = 2;
  unsigned multiplier_degree_cap = 4;
  /// Escalation is skipped when the main Gram basis would exceed this order.
  std::size_t max_gram_order = 120;
  /// Per-solve iteration cap inside bisections.
  int bisection_max_iters = 20000;
  control::ControlOptions control_options;
  sos::ProgramOptions sos;
};

/// Broadcast of εᵢᵏ to the subsystems that list the sender as a neighbor.
struct EpsilonMessage {
  int sender = 0;
  int iteration = 0;
  double value = 0.0;
};

/// In-process transport. Messages posted during a round become visible in
/// the recipients' inboxes only after barrier().
class Mailbox {
 public:
  explicit Mailbox(const InterconnectedSystem& sys);
  void post(const EpsilonMessage& m);
  /// Delivers every pending message; returns how many deliveries were made.
  std::size_t barrier();
  /// Latest delivered value from each sender, keyed by sender position.
  const std::map<std::size_t, EpsilonMessage>& inbox(std::size_t pos) const { return inboxes_.at(pos); }

 private:
  const InterconnectedSystem* sys_;
  std::vector<EpsilonMessage> pending_;
  std::vector<std::map<std::size_t, EpsilonMessage>> inboxes_;
};

/// Multipliers of one accepted shell condition.
struct ShellCertificate {
  unsigned multiplier_degree = 2;
  std::optional<Polynomial> sigma0;
  std::vector<Polynomial> sigmas;
  double relative_residual = 0.0;
  double eigen_floor = 0.0;
};

struct NextEpsilon {
  /// nullopt when the condition is infeasible at ε = εᵢᵏ.
  std::optional<double> value;
  std::optional<ShellCertificate> certificate;
  int solves = 0;
};

/// Smallest ε ∈ [0, εᵢᵏ] (bisection at resolution ε̄/4, ε = 0 tried first) for which
/// −∇Vᵢ·(fᵢ+gᵢ+F) − λ‖xᵢ‖² − σᵢ₀(Vᵢ − ε) − Σ_{j∈𝒩ᵢ} σᵢⱼ(εⱼᵏ − Vⱼ) ∈ Σ.
/// `levels` holds εᵏ for every subsystem (only 𝒩ᵢ is read).
NextEpsilon min_next_epsilon(const InterconnectedSystem& sys, std::size_t pos, const std::vector<Polynomial>& V,
                             const std::vector<double>& levels, const PolyVec* F, const CertifyOptions& opts = {});

enum class Verdict { Certified, CertifiedWithControl, NotCertified, Undetermined };
std::string_view to_string(Verdict v);

struct EpsilonSchedule {
  /// levels[k][i] = εᵢᵏ; NaN marks an infeasible (×) entry.
  std::vector<std::vector<double>> levels;
  /// controlled[k][i]: εᵢᵏ was obtained with a controller active in shell k−1.
  std::vector<std::vector<bool>> controlled;
  /// certificates[k][i]: multipliers for the transition k → k+1.
  std::vector<std::vector<std::optional<ShellCertificate>>> certificates;
  /// Controllers, tagged with the round k of the shell they act in.
  std::vector<control::ControlLaw> controllers;

  std::size_t rounds() const { return levels.size(); }
  /// Controller for subsystem position `pos` in shell k, if any.
  const control::ControlLaw* controller(int subsystem_id, int k) const;
};

struct CertificationResult {
  Verdict verdict = Verdict::Undetermined;
  EpsilonSchedule schedule;
  /// Ids of subsystems that failed at round 0 (NotCertified).
  std::vector<int> failing_subsystems;
  /// Ids of subsystems that received a controller.
  std::vector<int> controlled_subsystems;
  int iterations_used = 0;
  double wall_time = 0.0;
  /// Set when iteration stopped with nonzero limits (stability in the sense of Lyapunov only).
  bool nonzero_limits = false;
  std::vector<std::string> diagnostics;
  /// Subsystem ids in position order.
  std::vector<int> subsystem_ids;
};

/// Round-synchronized iterative certification starting at εᵢ⁰ = v_o[i].
CertificationResult certify(const InterconnectedSystem& sys, const std::vector<lyap::LyapunovCertificate>& certs,
                            const std::vector<double>& v_o, const CertifyOptions& opts = {});

/// V values of a concrete state, one per subsystem (for εᵢ⁰ = Vᵢ(xᵢ(0))).
std::vector<double> levels_from_state(const std::vector<lyap::LyapunovCertificate>& certs,
                                      const std::vector<double>& x0);

/// Lyapunov polynomials in subsystem position order; throws ModelError if a
/// certificate is missing.
std::vector<Polynomial> lyapunov_by_position(const InterconnectedSystem& sys,
                                             const std::vector<lyap::LyapunovCertificate>& certs);

struct ShellCheck {
  std::size_t samples = 0;
  std::size_t violations = 0;
  std::size_t shells = 0;
};

/// Samples every accepted shell {εᵢᵏ⁺¹ ≤ Vᵢ ≤ εᵢᵏ, Vⱼ ≤ εⱼᵏ} and counts points where
/// ∇Vᵢ·(fᵢ+gᵢ+Fᵢᵏ) ≥ 0.
ShellCheck check_shells(const InterconnectedSystem& sys, const std::vector<Polynomial>& V,
                        const CertificationResult& result, std::size_t samples_per_shell, std::uint64_t seed);

/// Table layout: header "k,S1,...", one row per round, fixed six decimals,
/// "×" for infeasible entries and a "*" suffix for controlled entries.
std::string schedule_to_csv(const CertificationResult& result);
std::string result_to_json(const CertificationResult& result);
CertificationResult result_from_json(const VarSetPtr& vars, const std::string& text);
void save_result(const CertificationResult& result, const std::filesystem::path& path);
CertificationResult load_result(const VarSetPtr& vars, const std::filesystem::path& path);

}  // namespace veclyap::certifier
