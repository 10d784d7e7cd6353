#pragma once

#include <cstdint>
#include <random>

#include "mucon/dense_matrix.hpp"

namespace mucon {

/// Seeded generator; every randomized routine takes one explicitly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// splitmix64 mix of (master, index); gives independent per-trial streams.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

/// i.i.d. standard normal entries.
DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng);

/// rows×cols matrix with orthonormal columns (cols ≤ rows), Haar-like.
DenseMatrix random_orthonormal(std::size_t rows, std::size_t cols, Rng& rng);

}  // namespace mucon
