#pragma once

#include <cstdint>
#include <random>

#include "artic/matrix.hpp"

namespace artic {

// Deterministic RNG front-end. All distributions are implemented here rather
// than with std:: distribution objects, whose output is implementation
// defined; this keeps corpora and checkpoints reproducible byte-for-byte.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}

  std::uint64_t next_u64() { return g_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(g_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi], inclusive. Rejection sampling, no modulo bias.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  // Standard normal via the Marsaglia polar method (spare value discarded).
  double gauss();

  double gauss(double mean, double stddev) { return mean + stddev * gauss(); }

  // Gamma(shape, scale). Marsaglia-Tsang for shape >= 1, boosted otherwise.
  double gamma(double shape, double scale);

  Matrix gauss_matrix(std::size_t rows, std::size_t cols, double stddev);

 private:
  std::mt19937_64 g_;
};

// splitmix64 step; used to derive independent stream seeds from a base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace artic
