#include "run_config.hpp"

#include <fmt/format.h>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace veclyap::cli {

using nlohmann::json;

void RunConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw UsageError(fmt::format("{} must be positive", name));
  };
  positive(eps_bar, "eps_bar");
  positive(feas_tol, "feas_tol");
  positive(gap_tol, "gap_tol");
  positive(dt, "dt");
  positive(horizon, "horizon");
  positive(coupling_scale, "coupling_scale");
  if (max_iters <= 0) throw UsageError("max_iters must be positive");
  if (max_rounds <= 0) throw UsageError("max_rounds must be positive");
  if (degree < 2 || degree % 2 != 0) throw UsageError("degree must be even and at least 2");
  if (betas.empty()) throw UsageError("at least one beta is required");
  for (double b : betas) positive(b, "beta");
  if (expand_iterations < 0) throw UsageError("expand iterations must be nonnegative");
  if (multiplier_degree % 2 != 0 || multiplier_degree_cap < multiplier_degree)
    throw UsageError("multiplier degrees must be even with cap >= start");
  if (system_kind != "vdp" && system_kind != "decoupled")
    throw UsageError(fmt::format("unknown system kind '{}'", system_kind));
  if (trajectories == 0) throw UsageError("trajectories must be positive");
}

lyap::LyapOptions RunConfig::lyap_options() const {
  lyap::LyapOptions o;
  o.degree = degree;
  o.betas = betas;
  o.sos.solver.feas_tol = feas_tol;
  o.sos.solver.gap_tol = gap_tol;
  o.sos.solver.max_iters = max_iters;
  return o;
}

certifier::CertifyOptions RunConfig::certify_options() const {
  certifier::CertifyOptions o;
  o.eps_bar = eps_bar;
  o.max_rounds = max_rounds;
  o.control = control;
  o.multiplier_degree = multiplier_degree;
  o.multiplier_degree_cap = multiplier_degree_cap;
  o.bisection_max_iters = std::min(o.bisection_max_iters, max_iters);
  o.sos.solver.feas_tol = feas_tol;
  o.sos.solver.gap_tol = gap_tol;
  o.sos.solver.max_iters = max_iters;
  o.control_options.sos = o.sos;
  return o;
}

sim::SimOptions RunConfig::sim_options() const {
  sim::SimOptions o;
  o.dt = dt;
  o.horizon = horizon;
  return o;
}

std::filesystem::path RunConfig::system_path() const {
  return system.empty() ? artifact("system.json") : std::filesystem::path(system);
}

std::filesystem::path RunConfig::artifact(const std::string& name) const { return std::filesystem::path(out) / name; }

std::string config_to_json(const RunConfig& c) {
  json j{{"seed", c.seed},
         {"system_kind", c.system_kind},
         {"oscillators", c.oscillators},
         {"subsystems", c.subsystems},
         {"coupling_scale", c.coupling_scale},
         {"system", c.system},
         {"degree", c.degree},
         {"betas", c.betas},
         {"expand_iterations", c.expand_iterations},
         {"eps_bar", c.eps_bar},
         {"max_rounds", c.max_rounds},
         {"multiplier_degree", c.multiplier_degree},
         {"multiplier_degree_cap", c.multiplier_degree_cap},
         {"control", c.control},
         {"feas_tol", c.feas_tol},
         {"gap_tol", c.gap_tol},
         {"max_iters", c.max_iters},
         {"dt", c.dt},
         {"horizon", c.horizon},
         {"trajectories", c.trajectories},
         {"out", c.out}};
  return j.dump(2) + "\n";
}

void apply_config_json(RunConfig& c, const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw UsageError(fmt::format("malformed config: {}", e.what()));
  }
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      const json& v = it.value();
      if (k == "seed") c.seed = v.get<std::uint64_t>();
      else if (k == "system_kind") c.system_kind = v.get<std::string>();
      else if (k == "oscillators") c.oscillators = v.get<std::size_t>();
      else if (k == "subsystems") c.subsystems = v.get<std::size_t>();
      else if (k == "coupling_scale") c.coupling_scale = v.get<double>();
      else if (k == "system") c.system = v.get<std::string>();
      else if (k == "degree") c.degree = v.get<unsigned>();
      else if (k == "betas") c.betas = v.get<std::vector<double>>();
      else if (k == "expand_iterations") c.expand_iterations = v.get<int>();
      else if (k == "eps_bar") c.eps_bar = v.get<double>();
      else if (k == "max_rounds") c.max_rounds = v.get<int>();
      else if (k == "multiplier_degree") c.multiplier_degree = v.get<unsigned>();
      else if (k == "multiplier_degree_cap") c.multiplier_degree_cap = v.get<unsigned>();
      else if (k == "control") c.control = v.get<bool>();
      else if (k == "feas_tol") c.feas_tol = v.get<double>();
      else if (k == "gap_tol") c.gap_tol = v.get<double>();
      else if (k == "max_iters") c.max_iters = v.get<int>();
      else if (k == "dt") c.dt = v.get<double>();
      else if (k == "horizon") c.horizon = v.get<double>();
      else if (k == "trajectories") c.trajectories = v.get<std::size_t>();
      else if (k == "out") c.out = v.get<std::string>();
      else throw UsageError(fmt::format("unknown config key '{}'", k));
    }
  } catch (const json::exception& e) {
    throw UsageError(fmt::format("bad config value: {}", e.what()));
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(fmt::format("cannot read {}", path.string()));
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(fmt::format("cannot write {}", path.string()));
  os << text;
  if (!os) throw IoError(fmt::format("write to {} failed", path.string()));
}

}  // namespace veclyap::cli
