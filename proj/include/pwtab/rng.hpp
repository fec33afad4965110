#pragma once

// Seeded random number generation.
//
// Generator: SplitMix64 (Steele, Lea & Flood 2014), 64-bit state, increment
// 0x9E3779B97F4A7C15 followed by the standard 30/27/31 xor-shift-multiply
// finalizer. Independent streams are derived from a root seed by hashing
// coordinates (cell, replication, permutation, ...) through the same
// finalizer, so a stream depends only on its coordinates and never on the
// order in which streams were created.
//
// Normal variates use the Marsaglia polar method; uniform doubles take the
// top 53 bits. None of this goes through <random> distributions, whose
// output is implementation-defined.

#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace pwtab {

std::uint64_t mix64(std::uint64_t z) noexcept;

// Deterministic child seed for the stream at `coords` under `root`.
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> coords) noexcept;

class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept;

  // Uniform on [0, 1).
  double uniform() noexcept;
  // Uniform on (0, 1).
  double uniform_open() noexcept;
  // Uniform integer on [0, bound), bound > 0.
  std::uint64_t below(std::uint64_t bound) noexcept;
  double normal() noexcept;
  double normal(double mean, double sd) noexcept { return mean + sd * normal(); }
  bool bernoulli(double p) noexcept { return uniform() < p; }

  template <typename T>
  void shuffle(std::span<T> values) noexcept {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Uniformly random permutation of {0, ..., n-1}.
std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng);

}  // namespace pwtab
