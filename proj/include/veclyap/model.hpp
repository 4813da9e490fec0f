#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "veclyap/poly.hpp"

namespace veclyap {

/// Malformed or inconsistent system description.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// ẋᵢ = fᵢ(xᵢ) + gᵢ(x). `states` are global variable indices; `input_channels`
/// are positions into `states` where a feedback term may enter.
struct Subsystem {
  int id = 0;
  std::vector<std::size_t> states;
  PolyVec f;
  PolyVec g;
  std::vector<std::size_t> input_channels;

  std::size_t dim() const { return states.size(); }
  /// Sorted copy of `states`.
  std::vector<std::size_t> sorted_states() const;
  /// Lifts a field over the own states to one entry per global variable (zeros elsewhere).
  PolyVec embed(const PolyVec& local) const;
};

class InterconnectedSystem {
 public:
  /// Validates the decomposition and computes neighbor sets. Throws ModelError.
  InterconnectedSystem(VarSetPtr vars, std::vector<Subsystem> subsystems);

  const VarSetPtr& vars() const { return vars_; }
  std::size_t dim() const { return vars_->size(); }
  std::size_t size() const { return subsystems_.size(); }
  const std::vector<Subsystem>& subsystems() const { return subsystems_; }
  const Subsystem& subsystem(std::size_t pos) const { return subsystems_.at(pos); }
  /// Position of the subsystem with the given id; throws UsageError if absent.
  std::size_t position(int id) const;

  /// Positions of 𝒩ᵢ, sorted, always containing pos itself.
  const std::vector<std::size_t>& neighbors(std::size_t pos) const { return neighbors_.at(pos); }
  /// Sorted global variable indices of every subsystem in 𝒩ᵢ.
  std::vector<std::size_t> neighborhood_vars(std::size_t pos) const;
  /// Position of the subsystem owning global variable `var`.
  std::size_t owner(std::size_t var) const { return owner_.at(var); }

  /// Full vector field, one entry per global variable.
  PolyVec field() const;

  bool operator==(const InterconnectedSystem& o) const;

 private:
  VarSetPtr vars_;
  std::vector<Subsystem> subsystems_;
  std::vector<std::size_t> owner_;
  std::vector<std::vector<std::size_t>> neighbors_;
};

/// Recomputes 𝒩ᵢ from the variable footprint of each gᵢ.
std::vector<std::vector<std::size_t>> neighbor_closure(const InterconnectedSystem& sys);

/// Network of Van der Pol oscillators ẋⱼ₁ = xⱼ₂,
/// ẋⱼ₂ = μⱼxⱼ₂(1 − xⱼ₁²) − xⱼ₁ + xⱼ₁ Σₖ ζⱼₖxₖ₂.
/// Oscillators are 0-based here and named x{j+1}1, x{j+1}2.
struct VdpNetworkSpec {
  std::vector<double> mu;
  /// zeta(j, k): influence of oscillator k on oscillator j.
  Eigen::MatrixXd zeta;
  /// Partition of oscillator indices into subsystems (subsystem ids are 1-based positions).
  std::vector<std::vector<std::size_t>> grouping;
  std::uint64_t seed = 0;

  std::size_t oscillators() const { return mu.size(); }
  /// Throws UsageError on violated parameter ranges or a bad grouping.
  void validate() const;
};

InterconnectedSystem build_vdp_network(const VdpNetworkSpec& spec);

/// m decoupled damped oscillators ẋᵢ₁ = xᵢ₂, ẋᵢ₂ = −xᵢ₁ − xᵢ₂ (gᵢ = 0), one per subsystem.
InterconnectedSystem build_decoupled_linear(std::size_t m);

/// Directed edge list (j ← k) of the nine-oscillator benchmark topology and
/// its seven-subsystem grouping, 0-based.
std::vector<std::pair<std::size_t, std::size_t>> benchmark_edges();
std::vector<std::vector<std::size_t>> benchmark_grouping();

/// Benchmark spec: μ and ζ drawn from the seed on the benchmark topology, with
/// the second subsystem fixed (μ₂ = −0.41, μ₃ = −1.44, ζ₂₃ = 0.12, ζ₂₁ = −0.07,
/// ζ₃₂ = 0.04, ζ₃₁ = 0.01, ζ₃₄ = 0.06, ζ₃₈ = 0.1; 1-based).
/// `coupling_scale` multiplies every random ζ (the pinned ones too).
VdpNetworkSpec benchmark_spec(std::uint64_t seed, double coupling_scale = 1.0);

/// Random spec on an arbitrary directed topology.
VdpNetworkSpec random_vdp_spec(std::size_t oscillators, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                               std::vector<std::vector<std::size_t>> grouping, std::uint64_t seed,
                               double coupling_scale = 1.0);

/// JSON layout: {variables:[...], subsystems:[{id, states:[...], f:[...], g:[...], input_channels:[...]}]}
/// with polynomials in text form and input channels given by state name.
std::string system_to_json(const InterconnectedSystem& sys);
InterconnectedSystem system_from_json(const std::string& text);
void save_system(const InterconnectedSystem& sys, const std::filesystem::path& path);
InterconnectedSystem load_system(const std::filesystem::path& path);

}  // namespace veclyap
