#pragma once

#include <cstdint>

#include "mucon/clip_exact.hpp"
#include "mucon/decompositions.hpp"
#include "mucon/dense_matrix.hpp"

namespace mucon {

/// Orthonormal range basis Q (m×ℓ) and the SVD of the projected block QᵀM.
struct SubspaceSketch {
  DenseMatrix q_basis;
  SvdFactorization small_svd;
  int power_iters = 0;
  int oversample = 0;

  /// Left singular estimates Q·U_B.
  DenseMatrix left_vectors() const;
};

/// Gaussian range finder with `power_iters` applications of MMᵀ,
/// re-orthonormalizing after every product. Throws std::invalid_argument if
/// rank_budget + oversample exceeds min(rows, cols).
SubspaceSketch randomized_range(const DenseMatrix& m, int rank_budget, int power_iters,
                                int oversample, std::uint64_t seed);

struct LowRankConfig {
  int initial_budget = 4;
  int oversample = 4;
  /// Power iterations applied before the first accuracy check.
  int power_iters = 2;
  /// Extra power iterations are run until the Ritz residuals of the violating
  /// triples fall below residual_tol·σ̂₁, up to this total.
  int max_power_iters = 30;
  double residual_tol = 1e-10;
  /// The budget stops growing once the smallest sketch value is ≤ τ(1 − margin)
  /// and at most `budget` estimates exceed τ.
  double margin = 0.05;
  /// 0 means min(rows, cols)/2.
  int budget_cap = 0;
  std::uint64_t seed = 0x6c6f7772616e6bULL;
};

/// M − Û_>·diag(σ̂_i − τ)·V̂_>ᵀ from a randomized sketch whose budget doubles
/// until it covers every singular value above τ. Throws ConvergenceError
/// ("budget exhausted") when the cap is reached first.
ClipResult mclip_lowrank(const DenseMatrix& m, double tau, const LowRankConfig& cfg = {});

}  // namespace mucon
