#pragma once

#include <string_view>
#include <vector>

#include "mucon/dense_matrix.hpp"

namespace mucon {

/// Only Newton–Schulz and the SVD route are provided. Scaled Newton or QDWH
/// would slot in here as further enumerators dispatched by `polar()`.
enum class PolarMethod { newton_schulz, exact };

std::string_view to_string(PolarMethod m) noexcept;
PolarMethod parse_polar_method(std::string_view name);

struct PolarConfig {
  PolarMethod method = PolarMethod::newton_schulz;
  int max_iter = 40;
  double tol = 1e-8;
  /// Singular values below rank_tol·σ₁ are treated as zero.
  double rank_tol = 1e-10;
};

/// Canonical partial polar factor UVᵀ of a matrix.
struct PolarResult {
  DenseMatrix q;
  int iterations = 0;
  /// ‖qᵀq − I‖_F for full-rank results; ‖(qᵀq)² − qᵀq‖_F once the input has
  /// been detected as rank deficient (residual against the row-space projector).
  double ortho_residual = 0.0;
  bool converged = false;
  bool rank_deficient = false;
  /// ‖X_kᵀX_k − I‖_F at every iterate (small side Gram matrix).
  std::vector<double> residual_history;
  /// max r_{k+1}/r_k² over the tail where r_k < 0.1; 0 if not observed.
  double quadratic_constant = 0.0;
};

/// X_{k+1} = ½X_k(3I − X_kᵀX_k) from X_0 = m/α with α ≥ σ₁-ish; wide inputs
/// are handled through the transpose. Throws std::invalid_argument for a
/// zero matrix; non-convergence is reported through `converged`.
PolarResult polar_newton_schulz(const DenseMatrix& m, int max_iter = 40, double tol = 1e-8,
                                double rank_tol = 1e-10);

/// UVᵀ from the compact SVD (zero matrix maps to zero).
PolarResult polar_exact(const DenseMatrix& m, double rank_tol = 1e-10);

PolarResult polar(const DenseMatrix& m, const PolarConfig& cfg);

}  // namespace mucon
