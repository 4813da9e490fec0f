#include <CLI11.hpp>
#include <cstdlib>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <iostream>

#include "run_config.hpp"
#include "veclyap/certifier.hpp"
#include "veclyap/lyap.hpp"
#include "veclyap/model.hpp"
#include "veclyap/sim.hpp"

using namespace veclyap;
using cli::RunConfig;

namespace {

enum Exit : int {
  Ok = 0,
  Usage = 2,
  WithControl = 3,
  NotCertified = 4,
  Undetermined = 5,
  Io = 6,
  Solver = 7,
  SimulationFailed = 8,
};

int verdict_exit(certifier::Verdict v) {
  switch (v) {
    case certifier::Verdict::Certified: return Ok;
    case certifier::Verdict::CertifiedWithControl: return WithControl;
    case certifier::Verdict::NotCertified: return NotCertified;
    case certifier::Verdict::Undetermined: return Undetermined;
  }
  return Solver;
}

struct Paths {
  std::string config;
  std::string certs;
  std::string result;
  std::string output;
  std::vector<double> levels;
  std::vector<double> x0;
  bool boundary = false;
};

InterconnectedSystem load_system(const RunConfig& cfg) {
  return system_from_json(cli::read_file(cfg.system_path()));
}

std::vector<lyap::LyapunovCertificate> load_certs(const RunConfig& cfg, const Paths& p, const VarSetPtr& vars) {
  const auto path = p.certs.empty() ? cfg.artifact("certificates.json") : std::filesystem::path(p.certs);
  return lyap::certificates_from_json(vars, cli::read_file(path));
}

certifier::CertificationResult load_result(const RunConfig& cfg, const Paths& p, const VarSetPtr& vars) {
  const auto path = p.result.empty() ? cfg.artifact("result.json") : std::filesystem::path(p.result);
  return certifier::result_from_json(vars, cli::read_file(path));
}

int run_gen(const RunConfig& cfg, const Paths& p) {
  InterconnectedSystem sys = [&] {
    if (cfg.system_kind == "decoupled") return build_decoupled_linear(cfg.subsystems);
    if (cfg.oscillators == 9) return build_vdp_network(benchmark_spec(cfg.seed, cfg.coupling_scale));
    // ring topology, one oscillator per subsystem
    const std::size_t n = cfg.oscillators;
    if (n < 2) throw UsageError("a network needs at least two oscillators");
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::vector<std::vector<std::size_t>> grouping;
    for (std::size_t j = 0; j < n; ++j) {
      edges.emplace_back(j, (j + 1) % n);
      if (n > 2) edges.emplace_back(j, (j + n - 1) % n);
      grouping.push_back({j});
    }
    return build_vdp_network(random_vdp_spec(n, edges, grouping, cfg.seed, cfg.coupling_scale));
  }();
  const auto path = p.output.empty() ? cfg.artifact("system.json") : std::filesystem::path(p.output);
  cli::write_file(path, system_to_json(sys));
  fmt::print("{}\n", path.string());
  return Ok;
}

int run_lyap(const RunConfig& cfg, const Paths& p) {
  const auto sys = load_system(cfg);
  const auto certs = lyap::certify_all(sys, cfg.lyap_options(), cfg.expand_iterations);
  const auto path = p.output.empty() ? cfg.artifact("certificates.json") : std::filesystem::path(p.output);
  cli::write_file(path, lyap::certificates_to_json(certs));
  for (const auto& c : certs)
    fmt::print("S{}: beta {} gamma_max {:.6g} V = {}\n", c.subsystem_id, c.beta, c.gamma_max, c.V.render());
  return Ok;
}

int run_certify(const RunConfig& cfg, const Paths& p) {
  const auto sys = load_system(cfg);
  const auto certs = load_certs(cfg, p, sys.vars());
  if (!p.levels.empty() && !p.x0.empty()) throw UsageError("--levels and --from-x0 are mutually exclusive");
  std::vector<double> levels = p.levels;
  if (!p.x0.empty()) {
    if (p.x0.size() != sys.dim())
      throw UsageError(fmt::format("--from-x0 needs {} values, got {}", sys.dim(), p.x0.size()));
    levels.clear();
    for (const auto& v : certifier::lyapunov_by_position(sys, certs)) levels.push_back(v.evaluate(p.x0));
  }
  if (levels.empty()) levels.assign(sys.size(), 1.0);
  if (levels.size() != sys.size())
    throw UsageError(fmt::format("{} levels given for {} subsystems", levels.size(), sys.size()));

  const auto result = certifier::certify(sys, certs, levels, cfg.certify_options());
  const std::string csv = certifier::schedule_to_csv(result);
  cli::write_file(cfg.artifact("result.json"), certifier::result_to_json(result));
  cli::write_file(cfg.artifact("schedule.csv"), csv);
  fmt::print("{}", csv);
  fmt::print(stderr, "verdict: {}\n", certifier::to_string(result.verdict));
  if (!result.failing_subsystems.empty())
    fmt::print(stderr, "failing subsystems: S{}\n", fmt::join(result.failing_subsystems, ", S"));
  if (!result.controlled_subsystems.empty())
    fmt::print(stderr, "controlled subsystems: S{}\n", fmt::join(result.controlled_subsystems, ", S"));
  for (const auto& d : result.diagnostics) fmt::print(stderr, "  {}\n", d);
  return verdict_exit(result.verdict);
}

int run_simulate(const RunConfig& cfg, const Paths& p) {
  const auto sys = load_system(cfg);
  const auto certs = load_certs(cfg, p, sys.vars());
  const auto V = certifier::lyapunov_by_position(sys, certs);
  std::optional<certifier::CertificationResult> result;
  if (!p.result.empty()) result = load_result(cfg, p, sys.vars());
  if (p.x0.size() != sys.dim()) throw UsageError(fmt::format("--x0 needs {} values, got {}", sys.dim(), p.x0.size()));
  sim::Simulator simulator(sys, V, result ? &*result : nullptr);
  const auto traj = simulator.integrate(p.x0, cfg.sim_options());
  const auto path = p.output.empty() ? cfg.artifact("trace.csv") : std::filesystem::path(p.output);
  sim::export_traces(traj, path);
  const auto summary = sim::summarize(traj);
  fmt::print("{}\n", sim::summary_to_json(summary));
  if (traj.status == sim::Status::Diverged) {
    fmt::print(stderr, "trajectory diverged at t = {}\n", traj.times.empty() ? 0.0 : traj.times.back());
    return SimulationFailed;
  }
  return Ok;
}

int run_validate(const RunConfig& cfg, const Paths& p) {
  const auto sys = load_system(cfg);
  const auto certs = load_certs(cfg, p, sys.vars());
  const auto V = certifier::lyapunov_by_position(sys, certs);
  const auto result = load_result(cfg, p, sys.vars());
  sim::ValidationOptions vo;
  vo.trajectories = cfg.trajectories;
  vo.sim = cfg.sim_options();
  vo.seed = cfg.seed;
  vo.on_boundary = p.boundary;
  const auto report = sim::validate_schedule(sys, V, result, vo);
  const auto path = p.output.empty() ? cfg.artifact("report.json") : std::filesystem::path(p.output);
  cli::write_file(path, sim::report_to_json(report) + "\n");
  fmt::print("{}\n", sim::report_to_json(report));
  return report.passed == report.trajectories ? Ok : SimulationFailed;
}

int run_config(const RunConfig& cfg, const Paths& p) {
  const std::string text = cli::config_to_json(cfg);
  if (p.output.empty())
    fmt::print("{}", text);
  else
    cli::write_file(p.output, text);
  return Ok;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  if (const char* env = std::getenv("VECLYAP_MAX_ITERS")) {
    try {
      cfg.max_iters = std::stoi(env);
    } catch (const std::exception&) {
      fmt::print(stderr, "error: VECLYAP_MAX_ITERS must be an integer\n");
      return Usage;
    }
  }
  Paths paths;

  CLI::App app{"Compositional stability certification with vector Lyapunov functions"};
  app.require_subcommand(1);
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", paths.config, "JSON config; its fields override flags");
    sub->add_option("--out", cfg.out, "Artifact directory");
    sub->add_option("--seed", cfg.seed, "Random seed");
    sub->add_option("--system", cfg.system, "System JSON (default <out>/system.json)");
    sub->add_option("--max-iters", cfg.max_iters, "Solver iteration cap (env VECLYAP_MAX_ITERS)");
  };

  auto* gen = app.add_subcommand("gen", "Generate a system description");
  common(gen);
  gen->add_option("--kind", cfg.system_kind, "vdp or decoupled");
  gen->add_option("--oscillators", cfg.oscillators, "Number of VdP oscillators (9: benchmark topology)");
  gen->add_option("--subsystems", cfg.subsystems, "Number of decoupled subsystems");
  gen->add_option("--coupling-scale", cfg.coupling_scale, "Multiplier on every coupling gain");
  gen->add_option("-o,--output", paths.output, "Output file");

  auto* lyap_cmd = app.add_subcommand("lyap", "Find subsystem Lyapunov functions");
  common(lyap_cmd);
  lyap_cmd->add_option("--degree", cfg.degree, "Degree of V");
  lyap_cmd->add_option("--beta", cfg.betas, "Domain radii tried in order")->delimiter(',');
  lyap_cmd->add_option("--expand", cfg.expand_iterations, "Expanding-interior iterations");
  lyap_cmd->add_option("-o,--output", paths.output, "Output file");

  auto* cert = app.add_subcommand("certify", "Iterative epsilon-schedule certification");
  common(cert);
  cert->add_option("--certs", paths.certs, "Certificate JSON (default <out>/certificates.json)");
  cert->add_option("--levels", paths.levels, "Initial levels, one per subsystem")->delimiter(',');
  cert->add_option("--from-x0,--levels-from-x0", paths.x0, "Initial state mapped to levels Vi(xi(0))")
      ->delimiter(',');
  cert->add_option("--eps-bar", cfg.eps_bar, "Termination threshold");
  cert->add_option("--max-rounds", cfg.max_rounds, "Round limit");
  cert->add_option("--multiplier-degree", cfg.multiplier_degree, "Initial multiplier degree");
  cert->add_flag("--control", cfg.control, "Synthesize controllers where decrease fails");

  auto* simulate = app.add_subcommand("simulate", "Integrate one trajectory");
  common(simulate);
  simulate->add_option("--certs", paths.certs, "Certificate JSON");
  simulate->add_option("--result", paths.result, "Certification result with controllers");
  simulate->add_option("--x0", paths.x0, "Initial state")->delimiter(',')->required();
  simulate->add_option("--dt", cfg.dt, "Step size");
  simulate->add_option("--horizon", cfg.horizon, "Final time");
  simulate->add_option("-o,--output", paths.output, "Trace CSV");

  auto* validate = app.add_subcommand("validate", "Monte-Carlo check of a certification result");
  common(validate);
  validate->add_option("--certs", paths.certs, "Certificate JSON");
  validate->add_option("--result", paths.result, "Certification result");
  validate->add_option("--trajectories", cfg.trajectories, "Number of trajectories");
  validate->add_option("--dt", cfg.dt, "Step size");
  validate->add_option("--horizon", cfg.horizon, "Final time");
  validate->add_flag("--boundary", paths.boundary, "Start on the outer level sets");
  validate->add_option("-o,--output", paths.output, "Report JSON");

  auto* config = app.add_subcommand("config", "Print the effective configuration");
  common(config);
  config->add_option("-o,--output", paths.output, "Write to file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? Ok : Usage;
  }

  try {
    if (!paths.config.empty()) cli::apply_config_json(cfg, cli::read_file(paths.config));
    cfg.validate();
    if (gen->parsed()) return run_gen(cfg, paths);
    if (lyap_cmd->parsed()) return run_lyap(cfg, paths);
    if (cert->parsed()) return run_certify(cfg, paths);
    if (simulate->parsed()) return run_simulate(cfg, paths);
    if (validate->parsed()) return run_validate(cfg, paths);
    return run_config(cfg, paths);
  } catch (const UsageError& e) {
    fmt::print(stderr, "usage error: {}\n", e.what());
    return Usage;
  } catch (const cli::IoError& e) {
    fmt::print(stderr, "I/O error: {}\n", e.what());
    return Io;
  } catch (const ModelError& e) {
    fmt::print(stderr, "invalid input: {}\n", e.what());
    return Io;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return Solver;
  }
}
