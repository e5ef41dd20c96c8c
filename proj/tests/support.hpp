#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "gml/grid.hpp"
#include "gml/rng.hpp"
#include "gml/synthdata.hpp"

namespace gml::test {

inline Grid random_grid(const Shape& shape, Rng& rng, double lo, double hi) {
  Grid g(shape);
  for (double& v : g) v = rng.uniform(lo, hi);
  return g;
}

inline Grid random_prob(const Shape& shape, Rng& rng) { return random_grid(shape, rng, 0.02, 0.98); }

inline Grid random_mask(const Shape& shape, Rng& rng, double p = 0.5) {
  Grid g(shape);
  for (double& v : g) v = rng.bernoulli(p) ? 1.0 : 0.0;
  return g;
}

/// Central difference of f along coordinate i of x.
inline double central_diff(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
                           std::size_t i, double h) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double up = f(x);
  x[i] = x0 - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

/// |a - b| / max(|a|, |b|, floor); the floor keeps near-zero derivatives from
/// dominating the ratio.
inline double rel_err(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// A small participant with `n` cases of a fixed profile.
inline Dataset small_site(const std::string& id, int n, std::uint64_t seed, std::int64_t extent = 12) {
  SiteGenSpec spec{id, n, 1.5, 3.0, 1.6, 0.8, 1.0, 0.0};
  Rng rng = rng_derive(seed, "test/" + id);
  return generate_site(spec, extent, rng);
}

}  // namespace gml::test
