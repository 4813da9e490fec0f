#include "veclyap/sampling.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

namespace veclyap {

LevelSampler::LevelSampler(const Polynomial& V, std::vector<std::size_t> coords)
    : v_(V), coords_(std::move(coords)), dim_(V.vars()->size()) {
  if (coords_.empty()) throw UsageError("level sampler needs at least one coordinate");
  for (std::size_t c : coords_)
    if (c >= dim_) throw UsageError("level sampler coordinate out of range");
}

double LevelSampler::radius_for_level(const std::vector<double>& d, double level, std::vector<double>& scratch,
                                      double max_radius) const {
  scratch.assign(dim_, 0.0);
  auto value_at = [&](double r) {
    for (std::size_t k = 0; k < coords_.size(); ++k) scratch[coords_[k]] = r * d[k];
    return v_(scratch.data());
  };
  if (level <= 0.0) return 0.0;
  double lo = 0.0, hi = 1e-3;
  while (value_at(hi) < level) {
    lo = hi;
    hi *= 2.0;
    if (hi > max_radius) return -1.0;
  }
  for (int it = 0; it < 80 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (value_at(mid) < level ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

bool LevelSampler::sample(std::mt19937_64& rng, double lo, double hi, std::vector<double>& x) const {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> d(coords_.size()), scratch;
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& v : d) {
      v = normal(rng);
      norm += v * v;
    }
  } while (norm < 1e-12);
  norm = std::sqrt(norm);
  for (double& v : d) v /= norm;
  const double level = lo + (hi - lo) * unif(rng);
  const double r = radius_for_level(d, level, scratch);
  if (r < 0.0) return false;
  for (std::size_t k = 0; k < coords_.size(); ++k) x[coords_[k]] = r * d[k];
  return true;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::exception_ptr> errors(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace veclyap
