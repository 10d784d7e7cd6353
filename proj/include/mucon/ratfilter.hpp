#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "mucon/absclip.hpp"
#include "mucon/clip_exact.hpp"
#include "mucon/dense_matrix.hpp"

namespace mucon {

/// Newton iterates for the smaller root of p² − (σ+τ)p + στ = 0 from p₀ = 0.
/// `errors[k]` is min(σ,τ) − p_k.
template <class T>
struct ScalarNewtonTrace {
  T sigma{};
  T tau{};
  std::vector<T> iterates;
  std::vector<T> errors;
};

/// p_{k+1} = (p_k² − στ)/(2p_k − σ − τ), evaluated as the Newton correction
/// p − (p − τ)(p − σ)/(2p − σ − τ). Works for any ordered field type, so
/// exact rationals can be traced as well as doubles. A vanishing denominator
/// only occurs once the iterate sits on the double root, and is left there.
template <class T>
ScalarNewtonTrace<T> scalar_clip_newton(const T& sigma, const T& tau, int k) {
  if (sigma < T(0)) throw std::invalid_argument("scalar_clip_newton: sigma must be >= 0");
  if (!(tau > T(0))) throw std::invalid_argument("scalar_clip_newton: tau must be > 0");
  if (k < 0) throw std::invalid_argument("scalar_clip_newton: k must be >= 0");
  ScalarNewtonTrace<T> t;
  t.sigma = sigma;
  t.tau = tau;
  const T a = sigma < tau ? sigma : tau;
  T p(0);
  t.iterates.push_back(p);
  t.errors.push_back(a - p);
  for (int i = 0; i < k; ++i) {
    const T den = T(2) * p - sigma - tau;
    if (den != T(0)) p = p - (p - tau) * (p - sigma) / den;
    t.iterates.push_back(p);
    t.errors.push_back(a - p);
  }
  return t;
}

struct RationalFilterConfig {
  int max_iter = 50;
  /// Stop once ‖P_{k+1} − P_k‖_F / ‖P_{k+1}‖_F ≤ tol.
  double tol = 1e-12;
  /// Isotropic shift added to the coefficient (H + τI − 2P_k). Must be < τ.
  double reg_mu = 0.0;
  bool symmetrize_each_step = true;
  /// Condition estimate beyond which an unregularized run is abandoned.
  double cond_cap = 1e12;
  /// Keep P_0, P_1, … in the result (tests and diagnostics).
  bool record_iterates = false;
  double polar_tol = 1e-8;
  int polar_max_iter = 40;
};

struct RationalFilterResult {
  DenseMatrix p;
  int iterations = 0;
  bool converged = false;
  /// Step norms halved for three consecutive steps: some eigenvalue of H sits
  /// on (or extremely near) τ and converges only linearly. The iteration then
  /// stops at the first step that fails to halve, keeping the previous iterate;
  /// accuracy along that component is limited to roughly 1e-4·τ.
  bool linear_mode = false;
  /// ‖C_0‖₁·‖C_k⁻¹‖₁ for every coefficient C_k = H + (τ+μ)I − 2P_k factored,
  /// including one whose step was rejected in linear mode.
  std::vector<double> conditions;
  double max_condition = 0.0;
  /// Relative step norms ‖P_{k+1} − P_k‖_F / ‖P_{k+1}‖_F.
  std::vector<double> steps;
  /// 1/‖C_K⁻¹‖₂ − μ at the last step; tends to min_i |λ_i(H) − τ|.
  double min_threshold_distance = 0.0;
  std::vector<DenseMatrix> iterates;
};

/// Solves (H + τI − 2P_k + μI)P_{k+1} = τH − P_k² + μP_k from P_0 = 0. The μP_k
/// term keeps f_τ(H) an exact fixed point of the shifted iteration.
/// Each spectral component contracts by μ/(|λ − τ| + μ) once close, so μ > 0
/// trades the quadratic rate for a bounded condition number. Rounding modes
/// that do not commute with H grow near the fixed point when eigenvalues of
/// H sit close to τ and far from each other; the iteration stops, keeping the
/// previous iterate, as soon as a late step fails to contract.
/// Throws ConvergenceError when the condition estimate exceeds cfg.cond_cap
/// outside linear mode.
RationalFilterResult rational_filter_psd(const SymmetricFactor& h, double tau,
                                         const RationalFilterConfig& cfg = {});

enum class GTauMode {
  /// X = M·g_τ(H) (right) or g_τ(K)·M (left), g_τ from sym_eig with g_τ(0) = 1.
  spectral,
  /// X = Q·P⋆ (right) or P⋆·Q (left) with Q from polar_exact.
  polar_product,
};

/// g_τ(σ) = 1 for σ ≤ τ, τ/σ above.
double g_tau(double sigma, double tau) noexcept;

ClipResult g_tau_apply(const DenseMatrix& m, const SymmetricFactor& h, const DenseMatrix& p_star,
                       double tau, GTauMode mode = GTauMode::spectral);

/// Newton-Schulz polar factor Q̂, symmetric factor on the smaller side, the
/// rational filter for P⋆ and finally X = Q̂·P⋆ (or P⋆·Q̂ when wide).
ClipResult mclip_rational(const DenseMatrix& m, double tau, const RationalFilterConfig& cfg = {});

}  // namespace mucon
