#include "veclyap/model.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <fstream>
#include <json.hpp>
#include <random>
#include <set>
#include <sstream>

namespace veclyap {

using nlohmann::json;

namespace {

bool has_constant(const PolyVec& v) {
  return std::any_of(v.begin(), v.end(), [](const Polynomial& p) { return p.constant_term() != 0.0; });
}

}  // namespace

std::vector<std::size_t> Subsystem::sorted_states() const {
  std::vector<std::size_t> out = states;
  std::sort(out.begin(), out.end());
  return out;
}

PolyVec Subsystem::embed(const PolyVec& local) const {
  if (local.size() != dim()) throw UsageError("local field must have one entry per subsystem state");
  const VarSetPtr& vars = local.front().vars();
  PolyVec out(vars->size(), Polynomial(vars));
  for (std::size_t k = 0; k < dim(); ++k) out[states[k]] = local[k];
  return out;
}

InterconnectedSystem::InterconnectedSystem(VarSetPtr vars, std::vector<Subsystem> subsystems)
    : vars_(std::move(vars)), subsystems_(std::move(subsystems)) {
  if (!vars_) throw ModelError("system has no variable set");
  if (subsystems_.empty()) throw ModelError("system has no subsystems");
  constexpr std::size_t kUnowned = static_cast<std::size_t>(-1);
  owner_.assign(vars_->size(), kUnowned);
  std::set<int> ids;
  for (std::size_t s = 0; s < subsystems_.size(); ++s) {
    const Subsystem& sub = subsystems_[s];
    if (!ids.insert(sub.id).second) throw ModelError(fmt::format("duplicate subsystem id {}", sub.id));
    if (sub.states.empty()) throw ModelError(fmt::format("subsystem {} has no states", sub.id));
    if (sub.f.size() != sub.dim() || sub.g.size() != sub.dim())
      throw ModelError(fmt::format("subsystem {}: f and g must have one entry per state", sub.id));
    for (std::size_t v : sub.states) {
      if (v >= vars_->size()) throw ModelError(fmt::format("subsystem {}: state index {} out of range", sub.id, v));
      if (owner_[v] != kUnowned)
        throw ModelError(fmt::format("overlapping decomposition: variable {} belongs to subsystems {} and {}",
                                     vars_->name(v), subsystems_[owner_[v]].id, sub.id));
      owner_[v] = s;
    }
    for (const auto& p : sub.f)
      if (!(*p.vars() == *vars_)) throw ModelError(fmt::format("subsystem {}: f uses another variable set", sub.id));
    for (const auto& p : sub.g)
      if (!(*p.vars() == *vars_)) throw ModelError(fmt::format("subsystem {}: g uses another variable set", sub.id));
    if (has_constant(sub.f) || has_constant(sub.g))
      throw ModelError(fmt::format("subsystem {}: equilibrium not at origin (constant term in f or g)", sub.id));
    std::vector<std::size_t> own = sub.states;
    std::sort(own.begin(), own.end());
    for (const auto& p : sub.f)
      if (!p.depends_only_on(own))
        throw ModelError(fmt::format("subsystem {}: isolated dynamics f depend on foreign states", sub.id));
    for (std::size_t c : sub.input_channels)
      if (c >= sub.dim()) throw ModelError(fmt::format("subsystem {}: input channel {} out of range", sub.id, c));
  }
  for (std::size_t v = 0; v < owner_.size(); ++v)
    if (owner_[v] == kUnowned)
      throw ModelError(fmt::format("decomposition does not cover variable {}", vars_->name(v)));
  neighbors_ = neighbor_closure(*this);
}

std::size_t InterconnectedSystem::position(int id) const {
  for (std::size_t s = 0; s < subsystems_.size(); ++s)
    if (subsystems_[s].id == id) return s;
  throw UsageError(fmt::format("no subsystem with id {}", id));
}

std::vector<std::size_t> InterconnectedSystem::neighborhood_vars(std::size_t pos) const {
  std::vector<std::size_t> out;
  for (std::size_t j : neighbors(pos)) out.insert(out.end(), subsystems_[j].states.begin(), subsystems_[j].states.end());
  std::sort(out.begin(), out.end());
  return out;
}

PolyVec InterconnectedSystem::field() const {
  PolyVec out(vars_->size(), Polynomial(vars_));
  for (const auto& sub : subsystems_)
    for (std::size_t k = 0; k < sub.dim(); ++k) out[sub.states[k]] = sub.f[k] + sub.g[k];
  return out;
}

bool InterconnectedSystem::operator==(const InterconnectedSystem& o) const {
  if (!(*vars_ == *o.vars_) || subsystems_.size() != o.subsystems_.size()) return false;
  for (std::size_t s = 0; s < subsystems_.size(); ++s) {
    const Subsystem& a = subsystems_[s];
    const Subsystem& b = o.subsystems_[s];
    if (a.id != b.id || a.states != b.states || a.input_channels != b.input_channels) return false;
    for (std::size_t k = 0; k < a.dim(); ++k)
      if (!(a.f[k] == b.f[k]) || !(a.g[k] == b.g[k])) return false;
  }
  return true;
}

std::vector<std::vector<std::size_t>> neighbor_closure(const InterconnectedSystem& sys) {
  std::vector<std::vector<std::size_t>> out(sys.size());
  for (std::size_t s = 0; s < sys.size(); ++s) {
    std::set<std::size_t> nb{s};
    for (const auto& p : sys.subsystem(s).g)
      for (std::size_t v : p.variables()) nb.insert(sys.owner(v));
    out[s].assign(nb.begin(), nb.end());
  }
  return out;
}

// -------------------------------------------------------------- VdP network

void VdpNetworkSpec::validate() const {
  const std::size_t n = mu.size();
  if (n == 0) throw UsageError("VdP network needs at least one oscillator");
  for (std::size_t j = 0; j < n; ++j)
    if (!(mu[j] > -2.0 && mu[j] < 0.0))
      throw UsageError(fmt::format("mu[{}] = {} outside (-2, 0)", j + 1, mu[j]));
  if (zeta.rows() != static_cast<Eigen::Index>(n) || zeta.cols() != static_cast<Eigen::Index>(n))
    throw UsageError("coupling matrix must be square with one row per oscillator");
  for (std::size_t j = 0; j < n; ++j)
    if (zeta(j, j) != 0.0) throw UsageError(fmt::format("self-coupling zeta[{0}][{0}] must be zero", j + 1));
  std::vector<int> seen(n, 0);
  for (const auto& grp : grouping) {
    if (grp.empty()) throw UsageError("empty group in oscillator grouping");
    for (std::size_t j : grp) {
      if (j >= n) throw UsageError(fmt::format("grouping references oscillator {} of {}", j + 1, n));
      if (seen[j]++) throw UsageError(fmt::format("grouping is not a partition: oscillator {} repeated", j + 1));
    }
  }
  for (std::size_t j = 0; j < n; ++j)
    if (!seen[j]) throw UsageError(fmt::format("grouping is not a partition: oscillator {} missing", j + 1));
}

InterconnectedSystem build_vdp_network(const VdpNetworkSpec& spec) {
  spec.validate();
  const std::size_t n = spec.oscillators();
  std::vector<std::string> names;
  for (std::size_t j = 0; j < n; ++j) {
    names.push_back(fmt::format("x{}1", j + 1));
    names.push_back(fmt::format("x{}2", j + 1));
  }
  VarSetPtr vars = make_varset(names);
  std::vector<std::size_t> group_of(n);
  for (std::size_t s = 0; s < spec.grouping.size(); ++s)
    for (std::size_t j : spec.grouping[s]) group_of[j] = s;

  std::vector<Subsystem> subs;
  for (std::size_t s = 0; s < spec.grouping.size(); ++s) {
    Subsystem sub;
    sub.id = static_cast<int>(s + 1);
    for (std::size_t j : spec.grouping[s]) {
      const auto x1 = Polynomial::variable(vars, 2 * j);
      const auto x2 = Polynomial::variable(vars, 2 * j + 1);
      Polynomial f2 = spec.mu[j] * x2 * (1.0 - x1 * x1) - x1;
      Polynomial g2(vars);
      for (std::size_t k = 0; k < n; ++k) {
        const double z = spec.zeta(j, k);
        if (k == j || z == 0.0) continue;
        const Polynomial term = z * x1 * Polynomial::variable(vars, 2 * k + 1);
        if (group_of[k] == s)
          f2 += term;
        else
          g2 += term;
      }
      sub.states.push_back(2 * j);
      sub.states.push_back(2 * j + 1);
      sub.f.push_back(x2);
      sub.f.push_back(f2);
      sub.g.push_back(Polynomial(vars));
      sub.g.push_back(g2);
      sub.input_channels.push_back(sub.states.size() - 1);
    }
    subs.push_back(std::move(sub));
  }
  return InterconnectedSystem(vars, std::move(subs));
}

InterconnectedSystem build_decoupled_linear(std::size_t m) {
  if (m == 0) throw UsageError("at least one subsystem is required");
  std::vector<std::string> names;
  for (std::size_t i = 0; i < m; ++i) {
    names.push_back(fmt::format("x{}1", i + 1));
    names.push_back(fmt::format("x{}2", i + 1));
  }
  VarSetPtr vars = make_varset(names);
  std::vector<Subsystem> subs;
  for (std::size_t i = 0; i < m; ++i) {
    const auto x1 = Polynomial::variable(vars, 2 * i);
    const auto x2 = Polynomial::variable(vars, 2 * i + 1);
    Subsystem sub;
    sub.id = static_cast<int>(i + 1);
    sub.states = {2 * i, 2 * i + 1};
    sub.f = {x2, -1.0 * x1 - x2};
    sub.g = {Polynomial(vars), Polynomial(vars)};
    sub.input_channels = {1};
    subs.push_back(std::move(sub));
  }
  return InterconnectedSystem(vars, std::move(subs));
}

std::vector<std::pair<std::size_t, std::size_t>> benchmark_edges() {
  // (j, k): oscillator j is driven by oscillator k; 1-based listing below.
  const std::vector<std::pair<std::size_t, std::size_t>> one_based = {
      {1, 2}, {1, 7}, {1, 9}, {2, 1}, {2, 3}, {3, 1}, {3, 2}, {3, 4}, {3, 8}, {4, 3}, {4, 5},
      {5, 4}, {5, 6}, {6, 5}, {6, 9}, {7, 1}, {7, 8}, {7, 9}, {8, 2}, {8, 7}, {9, 1}, {9, 6}, {9, 7}};
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (auto [j, k] : one_based) out.emplace_back(j - 1, k - 1);
  return out;
}

std::vector<std::vector<std::size_t>> benchmark_grouping() { return {{0}, {1, 2}, {3}, {4, 5}, {6}, {7}, {8}}; }

VdpNetworkSpec random_vdp_spec(std::size_t oscillators, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                               std::vector<std::vector<std::size_t>> grouping, std::uint64_t seed,
                               double coupling_scale) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mu_dist(-2.0, 0.0);
  std::uniform_real_distribution<double> zeta_dist(-0.2, 0.2);
  VdpNetworkSpec spec;
  spec.seed = seed;
  spec.grouping = std::move(grouping);
  spec.mu.resize(oscillators);
  for (double& m : spec.mu) {
    do m = mu_dist(rng);
    while (m <= -2.0 || m >= 0.0);
  }
  spec.zeta = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(oscillators), static_cast<Eigen::Index>(oscillators));
  for (auto [j, k] : edges) {
    if (j >= oscillators || k >= oscillators || j == k) throw UsageError("invalid edge in oscillator topology");
    spec.zeta(j, k) = coupling_scale * zeta_dist(rng);
  }
  return spec;
}

VdpNetworkSpec benchmark_spec(std::uint64_t seed, double coupling_scale) {
  VdpNetworkSpec spec = random_vdp_spec(9, benchmark_edges(), benchmark_grouping(), seed, coupling_scale);
  spec.mu[1] = -0.41;
  spec.mu[2] = -1.44;
  spec.zeta(1, 2) = coupling_scale * 0.12;
  spec.zeta(1, 0) = coupling_scale * -0.07;
  spec.zeta(2, 1) = coupling_scale * 0.04;
  spec.zeta(2, 0) = coupling_scale * 0.01;
  spec.zeta(2, 3) = coupling_scale * 0.06;
  spec.zeta(2, 7) = coupling_scale * 0.1;
  return spec;
}

// -------------------------------------------------------------------- JSON

std::string system_to_json(const InterconnectedSystem& sys) {
  json j;
  j["variables"] = sys.vars()->names();
  j["subsystems"] = json::array();
  for (const auto& sub : sys.subsystems()) {
    json s;
    s["id"] = sub.id;
    json states = json::array(), f = json::array(), g = json::array(), ch = json::array();
    for (std::size_t v : sub.states) states.push_back(sys.vars()->name(v));
    for (const auto& p : sub.f) f.push_back(p.render());
    for (const auto& p : sub.g) g.push_back(p.render());
    for (std::size_t c : sub.input_channels) ch.push_back(sys.vars()->name(sub.states[c]));
    s["states"] = states;
    s["f"] = f;
    s["g"] = g;
    s["input_channels"] = ch;
    j["subsystems"].push_back(std::move(s));
  }
  return j.dump(2);
}

InterconnectedSystem system_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ModelError(fmt::format("malformed system JSON: {}", e.what()));
  }
  try {
    VarSetPtr vars = make_varset(j.at("variables").get<std::vector<std::string>>());
    std::vector<Subsystem> subs;
    for (const auto& s : j.at("subsystems")) {
      Subsystem sub;
      sub.id = s.at("id").get<int>();
      for (const auto& name : s.at("states")) sub.states.push_back(vars->index(name.get<std::string>()));
      for (const auto& p : s.at("f")) sub.f.push_back(parse_polynomial(vars, p.get<std::string>()));
      for (const auto& p : s.at("g")) sub.g.push_back(parse_polynomial(vars, p.get<std::string>()));
      if (s.contains("input_channels")) {
        for (const auto& name : s.at("input_channels")) {
          const std::size_t v = vars->index(name.get<std::string>());
          auto it = std::find(sub.states.begin(), sub.states.end(), v);
          if (it == sub.states.end())
            throw ModelError(fmt::format("subsystem {}: input channel {} is not an own state", sub.id,
                                         name.get<std::string>()));
          sub.input_channels.push_back(static_cast<std::size_t>(it - sub.states.begin()));
        }
      }
      subs.push_back(std::move(sub));
    }
    return InterconnectedSystem(vars, std::move(subs));
  } catch (const json::exception& e) {
    throw ModelError(fmt::format("malformed system JSON: {}", e.what()));
  } catch (const UsageError& e) {
    throw ModelError(fmt::format("invalid system description: {}", e.what()));
  }
}

void save_system(const InterconnectedSystem& sys, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  os << system_to_json(sys) << '\n';
}

InterconnectedSystem load_system(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error(fmt::format("cannot read {}", path.string()));
  std::stringstream ss;
  ss << is.rdbuf();
  return system_from_json(ss.str());
}

}  // namespace veclyap
