#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include "mucon/dense_matrix.hpp"
#include "mucon/linalg.hpp"
#include "mucon/random.hpp"

namespace mucon::test {

// Matrix assembled from known factors, so its singular structure is an oracle
// that never touches the library SVD.
struct Constructed {
  DenseMatrix u;
  std::vector<double> sigma;
  DenseMatrix v;
  DenseMatrix m;

  DenseMatrix with_sigma(const std::function<double(double)>& f) const {
    std::vector<double> s(sigma.size());
    std::transform(sigma.begin(), sigma.end(), s.begin(), f);
    return matmul_nt(scale_cols(u, s), v);
  }
  DenseMatrix clipped(double tau) const {
    return with_sigma([tau](double s) { return std::min(s, tau); });
  }
  DenseMatrix polar() const {
    return with_sigma([](double s) { return s > 0.0 ? 1.0 : 0.0; });
  }
};

inline Constructed construct(std::size_t rows, std::size_t cols, std::vector<double> sigma,
                             std::uint64_t seed) {
  Rng rng(seed);
  Constructed c;
  c.sigma = std::move(sigma);
  c.u = random_orthonormal(rows, c.sigma.size(), rng);
  c.v = random_orthonormal(cols, c.sigma.size(), rng);
  c.m = matmul_nt(scale_cols(c.u, c.sigma), c.v);
  return c;
}

// Symmetric Q·diag(λ)·Qᵀ with known eigenpairs.
struct ConstructedSym {
  DenseMatrix q;
  std::vector<double> lambda;
  DenseMatrix h;

  DenseMatrix apply(const std::function<double(double)>& f) const {
    std::vector<double> l(lambda.size());
    std::transform(lambda.begin(), lambda.end(), l.begin(), f);
    return symmetrize(matmul_nt(scale_cols(q, l), q));
  }
};

inline ConstructedSym construct_sym(std::vector<double> lambda, std::uint64_t seed) {
  Rng rng(seed);
  ConstructedSym c;
  c.lambda = std::move(lambda);
  c.q = random_orthonormal(c.lambda.size(), c.lambda.size(), rng);
  c.h = symmetrize(matmul_nt(scale_cols(c.q, c.lambda), c.q));
  return c;
}

inline double rel_diff(const DenseMatrix& a, const DenseMatrix& b) {
  const double scale = std::max(frobenius_norm(b), 1e-300);
  return frobenius_norm(a - b) / scale;
}

inline std::vector<double> uniform_values(std::size_t n, double lo, double hi, std::uint64_t seed,
                                          double avoid = -1.0, double gap = 0.0) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (double& x : out) {
    do {
      x = rng.uniform(lo, hi);
    } while (avoid >= 0.0 && std::abs(x - avoid) < gap);
  }
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

}  // namespace mucon::test
