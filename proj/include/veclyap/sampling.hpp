#pragma once

#include <cstddef>
#include <functional>
#include <random>
#include <vector>

#include "veclyap/poly.hpp"

namespace veclyap {

/// Draws points of a level band {lo ≤ V ≤ hi} of a positive definite
/// polynomial V over a subset of the coordinates, by searching along random
/// rays from the origin for a uniformly drawn target level.
class LevelSampler {
 public:
  LevelSampler(const Polynomial& V, std::vector<std::size_t> coords);

  /// Writes the sampled coordinates into x (a full-dimension point); other
  /// entries are left untouched. Returns false if the ray search failed.
  bool sample(std::mt19937_64& rng, double lo, double hi, std::vector<double>& x) const;

  /// Radius r > 0 along unit direction d (over coords) with V(r·d) = level.
  /// Returns a negative value when V does not reach the level within max_radius.
  double radius_for_level(const std::vector<double>& d, double level, std::vector<double>& scratch,
                          double max_radius = 1e3) const;

  const std::vector<std::size_t>& coords() const { return coords_; }

 private:
  CompiledPolynomial v_;
  std::vector<std::size_t> coords_;
  std::size_t dim_;
};

/// Runs fn(0..n-1) on up to hardware_concurrency threads. Exceptions are
/// rethrown after all workers join (the first one by index wins).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace veclyap
