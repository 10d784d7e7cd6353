#include "mucon/ratfilter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mucon/decompositions.hpp"
#include "mucon/linalg.hpp"
#include "mucon/polar.hpp"

namespace mucon {

namespace {

void check_config(const RationalFilterConfig& cfg, double tau) {
  if (cfg.max_iter < 1) throw std::invalid_argument("rational filter: max_iter must be >= 1");
  if (!(cfg.tol > 0.0)) throw std::invalid_argument("rational filter: tol must be > 0");
  if (!(cfg.reg_mu >= 0.0) || !(cfg.reg_mu < tau)) {
    throw std::invalid_argument("rational filter: reg_mu must satisfy 0 <= reg_mu < tau");
  }
}

}  // namespace

RationalFilterResult rational_filter_psd(const SymmetricFactor& f, double tau,
                                         const RationalFilterConfig& cfg) {
  require_positive_tau(tau, "rational_filter_psd");
  check_config(cfg, tau);
  if (!f.h.is_square()) throw ShapeError("rational_filter_psd: factor must be square");
  const DenseMatrix h = symmetrize(f.h);
  const std::size_t n = h.rows();
  const double mu = cfg.reg_mu;

  RationalFilterResult out;
  DenseMatrix p(n, n);
  if (cfg.record_iterates) out.iterates.push_back(p);
  if (n == 0 || max_abs(h) == 0.0) {
    out.p = std::move(p);
    out.converged = true;
    out.min_threshold_distance = tau;
    return out;
  }

  const DenseMatrix tau_h = tau * h;
  const double c0_norm = norm_1(add_identity(h, tau + mu));
  int halving_run = 0;
  double prev_step = std::numeric_limits<double>::infinity();
  double prev_abs_step = std::numeric_limits<double>::infinity();

  for (int k = 0; k < cfg.max_iter; ++k) {
    const DenseMatrix c = add_identity(h - 2.0 * p, tau + mu);
    const auto ldlt = LdltFactorization::factor(c);
    DenseMatrix c_inv;
    double cond = std::numeric_limits<double>::infinity();
    if (ldlt) {
      c_inv = symmetrize(ldlt->inverse());
      cond = c0_norm * norm_1(c_inv);
    }
    if (!std::isfinite(cond) || cond > cfg.cond_cap) {
      if (out.linear_mode) break;
      throw ConvergenceError(
          mu == 0.0 ? "rational filter: coefficient too ill-conditioned near the threshold; "
                      "set reg_mu > 0"
                    : "rational filter: coefficient condition exceeds cond_cap",
          out.steps.empty() ? 1.0 : out.steps.back());
    }
    out.conditions.push_back(cond);
    out.max_condition = std::max(out.max_condition, cond);
    const double inv2 = spectral_norm(c_inv);
    out.min_threshold_distance = std::max(0.0, (inv2 > 0.0 ? 1.0 / inv2 : 0.0) - mu);

    DenseMatrix rhs = tau_h - matmul(p, p);
    if (mu != 0.0) rhs += mu * p;
    DenseMatrix next = ldlt->solve(rhs);
    if (cfg.symmetrize_each_step) next = symmetrize(next);

    const double abs_step = frobenius_norm(next - p);
    const double scale = frobenius_norm(next);
    const double step = scale > 0.0 ? abs_step / scale : 0.0;
    const double ratio = abs_step / prev_abs_step;
    // Rounding error that does not commute with H is amplified by roughly
    // ½|p_i − p_j|·|1/c_i − 1/c_j| per step (c_i the coefficient eigenvalues),
    // so once the steps stop contracting the previous iterate is the best one.
    if ((out.linear_mode && ratio > 0.55) || (step < 1e-3 && ratio >= 1.0)) {
      out.converged = !out.linear_mode && prev_step < 1e-6;
      break;
    }

    p = std::move(next);
    out.iterations = k + 1;
    out.steps.push_back(step);
    if (cfg.record_iterates) out.iterates.push_back(p);

    halving_run = (ratio >= 0.45 && ratio <= 0.55) ? halving_run + 1 : 0;
    if (halving_run >= 3) out.linear_mode = true;

    if (step <= cfg.tol) {
      out.converged = true;
      break;
    }
    // Rounding floor: the step stopped shrinking after it was already small.
    if (step < 1e-6 && step >= 0.9 * prev_step && halving_run == 0) {
      out.converged = true;
      break;
    }
    prev_step = step;
    prev_abs_step = abs_step;
  }
  out.p = symmetrize(p);
  return out;
}

double g_tau(double sigma, double tau) noexcept { return sigma <= tau ? 1.0 : tau / sigma; }

ClipResult g_tau_apply(const DenseMatrix& m, const SymmetricFactor& f, const DenseMatrix& p_star,
                       double tau, GTauMode mode) {
  require_positive_tau(tau, "g_tau_apply");
  const bool right = f.side == FactorSide::right;
  const std::size_t side = right ? m.cols() : m.rows();
  if (f.h.rows() != side || f.h.cols() != side) {
    throw ShapeError("g_tau_apply: factor " + shape_string(f.h) + " does not fit " +
                     shape_string(m));
  }
  ClipResult out;
  out.method = ClipMethod::rational_filter;
  if (mode == GTauMode::spectral) {
    const DenseMatrix g = apply_spectral(sym_eig(f.h), [tau](double l) { return g_tau(l, tau); });
    out.x = right ? matmul(m, g) : matmul(g, m);
    out.diagnostics["g_tau_mode"] = 0.0;
    return out;
  }
  require_same_shape(p_star, f.h, "g_tau_apply");
  const DenseMatrix q = polar_exact(m).q;
  out.x = right ? matmul(q, p_star) : matmul(p_star, q);
  out.diagnostics["g_tau_mode"] = 1.0;
  return out;
}

ClipResult mclip_rational(const DenseMatrix& m, double tau, const RationalFilterConfig& cfg) {
  require_positive_tau(tau, "mclip_rational");
  check_config(cfg, tau);
  ClipResult out;
  out.method = ClipMethod::rational_filter;
  if (max_abs(m) == 0.0) {
    out.x = DenseMatrix(m.rows(), m.cols());
    out.diagnostics["converged"] = 1.0;
    return out;
  }
  const bool tall = m.rows() >= m.cols();
  const PolarResult polar = polar_newton_schulz(m, cfg.polar_max_iter, cfg.polar_tol);
  const SymmetricFactor f =
      symmetric_factor_from_polar(m, polar.q, tall ? FactorSide::right : FactorSide::left);
  const RationalFilterResult rf = rational_filter_psd(f, tau, cfg);
  out.x = tall ? matmul(polar.q, rf.p) : matmul(rf.p, polar.q);

  out.iterations = rf.iterations;
  out.residual = rf.steps.empty() ? 0.0 : rf.steps.back();
  out.diagnostics["polar_iterations"] = polar.iterations;
  out.diagnostics["polar_residual"] = polar.ortho_residual;
  out.diagnostics["filter_iterations"] = rf.iterations;
  out.diagnostics["solve_condition_max"] = rf.max_condition;
  out.diagnostics["min_threshold_distance"] = rf.min_threshold_distance;
  out.diagnostics["linear_mode"] = rf.linear_mode ? 1.0 : 0.0;
  out.diagnostics["converged"] = (polar.converged && rf.converged) ? 1.0 : 0.0;
  out.diagnostics["side"] = tall ? 0.0 : 1.0;
  return out;
}

}  // namespace mucon
