#include "mucon/absclip.hpp"

#include <algorithm>
#include <cmath>

#include "mucon/decompositions.hpp"
#include "mucon/linalg.hpp"
#include "mucon/polar.hpp"

namespace mucon {

SymmetricFactor symmetric_factor_from_polar(const DenseMatrix& m, const DenseMatrix& q,
                                            FactorSide side) {
  require_same_shape(m, q, "symmetric_factor_from_polar");
  SymmetricFactor f;
  f.side = side;
  f.h = side == FactorSide::right ? symmetrize(matmul_tn(q, m)) : symmetrize(matmul_nt(m, q));
  return f;
}

namespace {

MatrixAbsResult abs_by_eigendecomposition(const DenseMatrix& a, double band_tol,
                                          MatrixAbsResult partial) {
  const SymEig eig = sym_eig(a);
  double scale = 0.0;
  for (double l : eig.lambda) scale = std::max(scale, std::abs(l));
  const double band = band_tol * scale;
  double min_abs = std::numeric_limits<double>::infinity();
  for (double l : eig.lambda) min_abs = std::min(min_abs, std::abs(l));
  partial.abs = apply_spectral(eig, [band](double l) { return std::abs(l) <= band ? 0.0 : std::abs(l); });
  partial.fallback = true;
  partial.min_abs_eigenvalue = eig.lambda.empty() ? 0.0 : min_abs;
  return partial;
}

}  // namespace

MatrixAbsResult matrix_abs(const DenseMatrix& a_in, double tol, int max_iter, double cond_cap,
                           double band_tol) {
  const DenseMatrix a = symmetrize(a_in);
  MatrixAbsResult out;
  if (a.empty() || max_abs(a) == 0.0) {
    out.abs = DenseMatrix(a.rows(), a.cols());
    return out;
  }

  DenseMatrix s = a;
  double prev_step = std::numeric_limits<double>::infinity();
  bool scaling = true;
  for (int k = 0; k < max_iter; ++k) {
    const auto lu = LuFactorization::factor(s);
    if (!lu) return abs_by_eigendecomposition(a, band_tol, out);
    const DenseMatrix s_inv = symmetrize(lu->inverse());
    const double cond = norm_1(s) * norm_1(s_inv);
    out.max_condition = std::max(out.max_condition, cond);
    if (k == 0) {
      const double inv_norm = spectral_norm(s_inv);
      out.min_abs_eigenvalue = inv_norm > 0.0 ? 1.0 / inv_norm : 0.0;
      if (out.min_abs_eigenvalue <= band_tol * spectral_norm(a)) {
        return abs_by_eigendecomposition(a, band_tol, out);
      }
    }
    if (!std::isfinite(cond) || cond > cond_cap) return abs_by_eigendecomposition(a, band_tol, out);

    const double c = scaling ? std::sqrt(frobenius_norm(s_inv) / frobenius_norm(s)) : 1.0;
    DenseMatrix next = symmetrize(0.5 * (c * s + (1.0 / c) * s_inv));
    const double step = frobenius_norm(next - s) / frobenius_norm(next);
    s = std::move(next);
    out.iterations = k + 1;
    if (step <= tol) break;
    if (step < 1e-2) scaling = false;
    // Rounding floor: the step stopped shrinking after it was already small.
    if (step < 1e-6 && step >= prev_step) break;
    prev_step = step;
    if (k + 1 == max_iter) return abs_by_eigendecomposition(a, band_tol, out);
  }
  out.abs = symmetrize(matmul(a, s));
  return out;
}

DenseMatrix clip_symmetric_factor(const SymmetricFactor& f, double tau, const AbsClipConfig& cfg,
                                  std::map<std::string, double>& diag) {
  const std::size_t n = f.h.rows();
  const MatrixAbsResult shifted =
      matrix_abs(add_identity(f.h, -tau), cfg.abs_tol, cfg.max_iter, cfg.cond_cap, cfg.band_tol);
  diag["abs_iterations"] += shifted.iterations;
  diag["abs_fallback"] = std::max(diag["abs_fallback"], shifted.fallback ? 1.0 : 0.0);
  diag["min_threshold_distance"] = shifted.min_abs_eigenvalue;
  diag["abs_max_condition"] = std::max(diag["abs_max_condition"], shifted.max_condition);

  DenseMatrix p(n, n);
  if (cfg.flush_negative) {
    const MatrixAbsResult plain =
        matrix_abs(f.h, cfg.abs_tol, cfg.max_iter, cfg.cond_cap, cfg.band_tol);
    diag["abs_iterations"] += plain.iterations;
    diag["flush_fallback"] = plain.fallback ? 1.0 : 0.0;
    diag["negative_mass"] = 0.5 * frobenius_norm(plain.abs - f.h);
    p = add_identity(plain.abs - shifted.abs, tau);
  } else {
    p = add_identity(f.h - shifted.abs, tau);
  }
  return symmetrize(0.5 * p);
}

ClipResult mclip_abs(const DenseMatrix& m, double tau, const AbsClipConfig& cfg) {
  require_positive_tau(tau, "mclip_abs");
  ClipResult out;
  out.method = ClipMethod::abs_polar;
  if (max_abs(m) == 0.0) {
    out.x = DenseMatrix(m.rows(), m.cols());
    out.diagnostics["converged"] = 1.0;
    return out;
  }
  const bool tall = m.rows() >= m.cols();
  const PolarResult polar = polar_newton_schulz(m, cfg.max_iter, cfg.polar_tol);
  const SymmetricFactor f =
      symmetric_factor_from_polar(m, polar.q, tall ? FactorSide::right : FactorSide::left);
  const DenseMatrix p = clip_symmetric_factor(f, tau, cfg, out.diagnostics);
  out.x = tall ? matmul(polar.q, p) : matmul(p, polar.q);

  out.iterations = polar.iterations + static_cast<int>(out.diagnostics["abs_iterations"]);
  out.residual = polar.ortho_residual;
  out.diagnostics["polar_iterations"] = polar.iterations;
  out.diagnostics["polar_residual"] = polar.ortho_residual;
  out.diagnostics["polar_rank_deficient"] = polar.rank_deficient ? 1.0 : 0.0;
  out.diagnostics["converged"] = polar.converged ? 1.0 : 0.0;
  out.diagnostics["side"] = tall ? 0.0 : 1.0;
  return out;
}

}  // namespace mucon
