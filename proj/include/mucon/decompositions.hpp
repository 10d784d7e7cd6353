#pragma once

#include <stdexcept>
#include <vector>

#include "mucon/dense_matrix.hpp"

namespace mucon {

/// An iterative kernel hit its iteration cap before meeting its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double achieved)
      : std::runtime_error(what + " (achieved residual " + std::to_string(achieved) + ")"),
        achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

/// Compact SVD: m = u·diag(sigma)·vᵀ with r = sigma.size() retained values,
/// sigma strictly positive and non-increasing.
struct SvdFactorization {
  DenseMatrix u;  // m×r
  std::vector<double> sigma;
  DenseMatrix v;  // n×r

  std::size_t rank() const noexcept { return sigma.size(); }
  DenseMatrix reconstruct() const;
};

inline constexpr double kDefaultTruncTol = 1e-12;

/// One-sided Jacobi SVD on the shorter dimension. Singular values at or below
/// trunc_tol·σ₁ are dropped. Throws ConvergenceError if the sweep cap is hit.
SvdFactorization svd_compact(const DenseMatrix& m, double trunc_tol = kDefaultTruncTol);

/// Symmetric eigendecomposition h = q·diag(lambda)·qᵀ, eigenvalues sorted
/// non-increasing.
struct SymEig {
  DenseMatrix q;
  std::vector<double> lambda;

  DenseMatrix reconstruct() const;
};

/// Cyclic Jacobi on (h + hᵀ)/2.
SymEig sym_eig(const DenseMatrix& h);

/// q·diag(f(λ))·qᵀ for a scalar function f.
template <class F>
DenseMatrix apply_spectral(const SymEig& eig, F&& f) {
  const std::size_t n = eig.q.rows();
  std::vector<double> fl(eig.lambda.size());
  for (std::size_t i = 0; i < fl.size(); ++i) fl[i] = f(eig.lambda[i]);
  DenseMatrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < fl.size(); ++k) s += eig.q(i, k) * fl[k] * eig.q(j, k);
      out(i, j) = s;
      out(j, i) = s;
    }
  }
  return out;
}

}  // namespace mucon
