#include "mucon/random.hpp"

#include "mucon/linalg.hpp"

namespace mucon {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  DenseMatrix g(rows, cols);
  for (double& x : g.data()) x = rng.normal();
  return g;
}

DenseMatrix random_orthonormal(std::size_t rows, std::size_t cols, Rng& rng) {
  if (cols > rows) throw ShapeError("random_orthonormal: cols exceed rows");
  for (;;) {
    DenseMatrix q = orthonormalize_columns(gaussian_matrix(rows, cols, rng), 1e-8);
    if (q.cols() == cols) return q;
  }
}

}  // namespace mucon
