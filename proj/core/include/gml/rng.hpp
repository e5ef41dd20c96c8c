#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gml {

/// SplitMix64 stream. Every stochastic decision in the library draws from an
/// Rng obtained through rng_derive(root_seed, label), so adding a new consumer
/// never shifts the draws seen by an existing one.
class Rng {
 public:
  using result_type = std::uint64_t;

  Rng(std::uint64_t state, std::string label) : state_(state), label_(std::move(label)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return next_u64(); }
  std::uint64_t next_u64() noexcept;

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Standard normal (Box-Muller, no cached second value).
  double normal() noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }
  /// Uniform integer in [0, n); n must be > 0. Unbiased (rejection sampling).
  std::size_t uniform_index(std::size_t n) noexcept;
  /// Index drawn with probability proportional to weights[i]; zero-weight
  /// entries are never returned.
  std::size_t categorical(std::span<const double> weights) noexcept;

  template <typename T>
  void shuffle(std::vector<T>& items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

  const std::string& label() const noexcept { return label_; }

 private:
  std::uint64_t state_;
  std::string label_;
};

Rng rng_derive(std::uint64_t root_seed, std::string_view stream_label);

}  // namespace gml
