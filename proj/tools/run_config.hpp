#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "veclyap/certifier.hpp"
#include "veclyap/lyap.hpp"
#include "veclyap/sim.hpp"

namespace veclyap::cli {

/// Missing or unwritable files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::uint64_t seed = 1;
  /// "vdp" or "decoupled".
  std::string system_kind = "vdp";
  std::size_t oscillators = 9;
  std::size_t subsystems = 2;
  double coupling_scale = 1.0;
  /// Explicit system file; empty means <out>/system.json.
  std::string system;

  unsigned degree = 2;
  std::vector<double> betas = {4.0, 1.0, 0.25};
  int expand_iterations = 0;

  double eps_bar = 1e-3;
  int max_rounds = 50;
  unsigned multiplier_degree = 2;
  unsigned multiplier_degree_cap = 4;
  bool control = false;

  double feas_tol = 1e-7;
  double gap_tol = 1e-7;
  int max_iters = 100000;

  double dt = 0.005;
  double horizon = 100.0;
  std::size_t trajectories = 200;

  std::string out = ".";

  /// Throws UsageError on nonpositive tolerances or budgets.
  void validate() const;

  lyap::LyapOptions lyap_options() const;
  certifier::CertifyOptions certify_options() const;
  sim::SimOptions sim_options() const;
  std::filesystem::path system_path() const;
  std::filesystem::path artifact(const std::string& name) const;
};

std::string config_to_json(const RunConfig& cfg);
/// Fields present in `text` overwrite `cfg`; unknown keys are rejected.
void apply_config_json(RunConfig& cfg, const std::string& text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace veclyap::cli
