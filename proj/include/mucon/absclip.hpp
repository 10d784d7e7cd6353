#pragma once

#include <map>
#include <string>

#include "mucon/clip_exact.hpp"
#include "mucon/dense_matrix.hpp"

namespace mucon {

struct AbsClipConfig {
  double polar_tol = 1e-8;
  double abs_tol = 1e-12;
  /// Iteration cap shared by the polar and the matrix-sign iterations.
  int max_iter = 50;
  /// Beyond this 1-norm condition of a sign iterate, switch to the
  /// eigendecomposition fallback.
  double cond_cap = 1e12;
  /// Eigenvalues with |λ| ≤ band_tol·‖A‖₂ count as zero (sign(0) = 0).
  double band_tol = 1e-12;
  /// Clamp small negative eigenvalues of the symmetric factor to zero.
  bool flush_negative = true;
};

enum class FactorSide { right, left };

/// Ĥ = ½(Q̂ᵀM + MᵀQ̂) (right, n×n) or K̂ = ½(MQ̂ᵀ + Q̂Mᵀ) (left, m×m),
/// exactly symmetric.
struct SymmetricFactor {
  DenseMatrix h;
  FactorSide side = FactorSide::right;
};

SymmetricFactor symmetric_factor_from_polar(const DenseMatrix& m, const DenseMatrix& q,
                                            FactorSide side);

struct MatrixAbsResult {
  DenseMatrix abs;
  int iterations = 0;
  bool fallback = false;
  /// min_i |λ_i(A)|, from ‖A⁻¹‖₂ on the iterative path.
  double min_abs_eigenvalue = 0.0;
  double max_condition = 0.0;
};

/// |A| = A·sign(A) with sign from the Frobenius-scaled Newton iteration
/// S ← ½(cS + (cS)⁻¹). Falls back to the symmetric eigendecomposition when an
/// iterate is singular, its condition exceeds `cond_cap`, or A has an
/// eigenvalue inside the zero band.
MatrixAbsResult matrix_abs(const DenseMatrix& a, double tol = 1e-12, int max_iter = 50,
                           double cond_cap = 1e12, double band_tol = 1e-12);

/// f_τ(H) = ½(H + τI − |H − τI|), or with `flush_negative` the clamp
/// ½(|H| − |H − τI| + τI), which also maps negative eigenvalues to zero.
/// Diagnostics are merged into `diag`.
DenseMatrix clip_symmetric_factor(const SymmetricFactor& f, double tau, const AbsClipConfig& cfg,
                                  std::map<std::string, double>& diag);

/// Clip through the polar factor and the matrix absolute value:
/// X = Q̂·f_τ(Ĥ) for tall inputs, X = f_τ(K̂)·Q̂ for wide ones.
ClipResult mclip_abs(const DenseMatrix& m, double tau, const AbsClipConfig& cfg = {});

}  // namespace mucon
