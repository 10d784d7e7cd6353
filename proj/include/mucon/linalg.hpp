#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mucon/dense_matrix.hpp"

namespace mucon {

/// Per-thread tally of dense kernel work, used by the benchmark harness as a
/// cost proxy. `flops` counts multiply-adds.
struct OpCounts {
  std::uint64_t matmuls = 0;
  std::uint64_t flops = 0;
};

OpCounts& op_counts() noexcept;

/// Snapshot of `op_counts()` on construction; `elapsed()` is the delta.
class OpCountScope {
 public:
  OpCountScope() noexcept : start_(op_counts()) {}
  OpCounts elapsed() const noexcept;

 private:
  OpCounts start_;
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// aᵀ·b without materializing the transpose.
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
/// a·bᵀ without materializing the transpose.
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);
std::vector<double> matvec(const DenseMatrix& a, std::span<const double> x);
std::vector<double> matvec_t(const DenseMatrix& a, std::span<const double> x);

/// (a + aᵀ)/2. Requires a square matrix.
DenseMatrix symmetrize(const DenseMatrix& a);
/// a + s·I for square a.
DenseMatrix add_identity(DenseMatrix a, double s);
/// Scales column j of a by d[j], i.e. a·diag(d).
DenseMatrix scale_cols(DenseMatrix a, std::span<const double> d);
/// diag(d)·a.
DenseMatrix scale_rows(DenseMatrix a, std::span<const double> d);

double frobenius_norm(const DenseMatrix& a) noexcept;
double norm_1(const DenseMatrix& a) noexcept;    // max column sum
double norm_inf(const DenseMatrix& a) noexcept;  // max row sum
double max_abs(const DenseMatrix& a) noexcept;
double dot(std::span<const double> x, std::span<const double> y) noexcept;
double norm_2(std::span<const double> x) noexcept;

/// Largest singular value. Power iteration on aᵀa from a deterministic start;
/// falls back to the SVD oracle when the Rayleigh residual does not settle.
/// Returns 0 for a zero matrix.
double spectral_norm(const DenseMatrix& a);
/// Upper bound on the spectral norm: min(‖a‖_F, sqrt(‖a‖_1·‖a‖_∞)).
double spectral_norm_upper_bound(const DenseMatrix& a) noexcept;

/// ‖a‖₂ / sqrt(d).
double rms_vector_norm(std::span<const double> a, std::size_t d);
/// Operator norm between RMS-normalized spaces: sqrt(cols/rows)·‖m‖₂.
double rms_operator_norm(const DenseMatrix& m);

/// Relative Frobenius distance ‖a − b‖_F / max(‖b‖_F, tiny).
double relative_error(const DenseMatrix& a, const DenseMatrix& b);

/// Orthonormalizes the columns of `a` (two passes of modified Gram-Schmidt).
/// Columns whose residual norm falls below `drop_tol` times the largest input
/// column norm are discarded, so the result may have fewer columns.
DenseMatrix orthonormalize_columns(const DenseMatrix& a, double drop_tol = 1e-12);

/// LU factorization with partial pivoting.
class LuFactorization {
 public:
  /// Returns nullopt if a pivot is exactly zero.
  static std::optional<LuFactorization> factor(const DenseMatrix& a);
  DenseMatrix solve(const DenseMatrix& rhs) const;
  DenseMatrix inverse() const;
  std::size_t order() const noexcept { return lu_.rows(); }

 private:
  DenseMatrix lu_;
  std::vector<std::size_t> perm_;
};

/// Symmetric LDLᵀ factorization with diagonal (symmetric) pivoting.
/// Intended for symmetric quasi-definite coefficients; it does not use 2×2
/// pivots, so strongly indefinite inputs may be rejected.
class LdltFactorization {
 public:
  /// Returns nullopt if a pivot underflows `pivot_floor` times the largest
  /// diagonal magnitude.
  static std::optional<LdltFactorization> factor(const DenseMatrix& a, double pivot_floor = 0.0);
  DenseMatrix solve(const DenseMatrix& rhs) const;
  DenseMatrix inverse() const;
  /// Smallest and largest |d_i| of the pivots.
  double min_pivot() const noexcept;
  double max_pivot() const noexcept;

 private:
  DenseMatrix l_;
  std::vector<double> d_;
  std::vector<std::size_t> perm_;
};

}  // namespace mucon
