#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mucon/dense_matrix.hpp"

namespace mucon {

enum class ClipMethod { exact, abs_polar, rational_filter, lowrank_deflate };

std::string_view to_string(ClipMethod m) noexcept;
/// Accepts the enum spelling plus the short CLI aliases "abs", "rational", "lowrank".
ClipMethod parse_clip_method(std::string_view name);

/// Singular values strictly above τ and how far above they are.
struct ClipPlan {
  double tau = 1.0;
  std::vector<std::size_t> violating_indices;
  std::size_t k_over = 0;
  std::vector<double> excess;  // σ_i − τ for each violating index
};

struct ClipResult {
  DenseMatrix x;
  ClipMethod method = ClipMethod::exact;
  int iterations = 0;
  double residual = 0.0;
  std::map<std::string, double> diagnostics;
};

void require_positive_tau(double tau, const char* where);

ClipPlan clip_plan(std::span<const double> sigma, double tau);

/// m − u_over·diag(excess)·v_overᵀ.
DenseMatrix lowrank_correction_assemble(const DenseMatrix& m, const DenseMatrix& u_over,
                                        const DenseMatrix& v_over,
                                        std::span<const double> excess);

/// Reference clip through the compact SVD: U·diag(min(σ_i, τ))·Vᵀ.
/// Matrices with no violating singular value are returned unchanged.
ClipResult mclip_exact(const DenseMatrix& m, double tau);

}  // namespace mucon
