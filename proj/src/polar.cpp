#include "mucon/polar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "mucon/decompositions.hpp"
#include "mucon/linalg.hpp"
#include "mucon/random.hpp"

namespace mucon {

std::string_view to_string(PolarMethod m) noexcept {
  return m == PolarMethod::exact ? "exact" : "newton_schulz";
}

PolarMethod parse_polar_method(std::string_view name) {
  if (name == "exact") return PolarMethod::exact;
  if (name == "newton_schulz" || name == "ns") return PolarMethod::newton_schulz;
  throw std::invalid_argument("unknown polar method '" + std::string(name) + "'");
}

namespace {

// A few power steps on aᵀa; a lower estimate of σ₁ (a must be tall).
double power_estimate(const DenseMatrix& a, int steps) {
  Rng rng(0x51ab1e5eedULL);
  std::vector<double> v(a.cols());
  for (double& x : v) x = rng.normal();
  double sigma = 0.0;
  for (int s = 0; s < steps; ++s) {
    const double nv = norm_2(v);
    if (nv == 0.0) return 0.0;
    for (double& x : v) x /= nv;
    const std::vector<double> av = matvec(a, v);
    sigma = norm_2(av);
    v = matvec_t(a, av);
  }
  return sigma;
}

double gram_residual(const DenseMatrix& g) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.rows(); ++i) {
    for (std::size_t j = 0; j < g.cols(); ++j) {
      const double d = g(i, j) - (i == j ? 1.0 : 0.0);
      s += d * d;
    }
  }
  return std::sqrt(s);
}

double trace(const DenseMatrix& g) {
  double t = 0.0;
  for (std::size_t i = 0; i < g.rows(); ++i) t += g(i, i);
  return t;
}

PolarResult newton_schulz_tall(const DenseMatrix& m, int max_iter, double tol, double rank_tol) {
  const std::size_t n = m.cols();
  const double upper = spectral_norm_upper_bound(m);
  if (upper == 0.0) throw std::invalid_argument("polar_newton_schulz: zero matrix");
  // σ₁/α < √2 keeps ‖I − X₀ᵀX₀‖₂ < 1 on the row space; 1.5× a power estimate
  // leaves room for the estimate being low.
  const double estimate = power_estimate(m, 8);
  double alpha = estimate > 0.0 ? std::min(upper, 1.5 * estimate) : upper;
  // Already inside the basin without scaling (orthonormal-ish input).
  if (gram_residual(symmetrize(matmul_tn(m, m))) < 1.0) alpha = 1.0;
  bool restarted = false;

  PolarResult out;
  DenseMatrix x = (1.0 / alpha) * m;
  double prev = std::numeric_limits<double>::infinity();
  const double eps_floor = 10.0 * static_cast<double>(n) * std::numeric_limits<double>::epsilon();

  for (int k = 0;; ++k) {
    const DenseMatrix g = symmetrize(matmul_tn(x, x));
    const double full = gram_residual(g);
    if (!std::isfinite(full) || (full > 1e6 && !restarted)) {
      // Diverged: the power estimate was too low. Restart from the guaranteed bound.
      restarted = true;
      alpha = upper;
      x = (1.0 / alpha) * m;
      out.residual_history.clear();
      prev = std::numeric_limits<double>::infinity();
      continue;
    }
    out.residual_history.push_back(full);
    out.iterations = k;
    if (full <= tol) {
      out.converged = true;
      out.ortho_residual = full;
      break;
    }
    // Rank deficiency shows up as a residual that stalls at about √(#null
    // directions) while the Gram matrix is already a projector.
    if (k >= 2 && std::abs(prev - full) <= 1e-3 * full) {
      const double proj = frobenius_norm(matmul(g, g) - g);
      const double t = trace(g);
      const double tail = std::abs(t - std::round(t));
      const double null_bound = static_cast<double>(n) * std::pow(rank_tol * std::pow(1.5, k), 2);
      if (proj <= tol && tail <= std::max(eps_floor, null_bound)) {
        out.converged = true;
        out.rank_deficient = true;
        out.ortho_residual = proj;
        break;
      }
    }
    if (k >= max_iter) {
      out.ortho_residual = full;
      break;
    }
    prev = full;
    DenseMatrix step = add_identity(-1.0 * g, 3.0);
    x = 0.5 * matmul(x, step);
  }

  const auto& h = out.residual_history;
  for (std::size_t k = 0; k + 1 < h.size(); ++k) {
    if (h[k] < 0.1 && h[k] > 0.0 && h[k + 1] > 0.0) {
      out.quadratic_constant = std::max(out.quadratic_constant, h[k + 1] / (h[k] * h[k]));
    }
  }
  out.q = std::move(x);
  return out;
}

}  // namespace

PolarResult polar_newton_schulz(const DenseMatrix& m, int max_iter, double tol, double rank_tol) {
  if (max_iter < 0) throw std::invalid_argument("polar_newton_schulz: max_iter must be >= 0");
  if (m.rows() >= m.cols()) return newton_schulz_tall(m, max_iter, tol, rank_tol);
  PolarResult r = newton_schulz_tall(m.transpose(), max_iter, tol, rank_tol);
  r.q = r.q.transpose();
  return r;
}

PolarResult polar_exact(const DenseMatrix& m, double rank_tol) {
  const SvdFactorization f = svd_compact(m, rank_tol);
  PolarResult out;
  out.q = matmul_nt(f.u, f.v);
  out.converged = true;
  out.rank_deficient = f.rank() < std::min(m.rows(), m.cols());
  // Residual on the smaller side, against the projector when rank deficient.
  const bool tall = m.rows() >= m.cols();
  const DenseMatrix g = tall ? matmul_tn(out.q, out.q) : matmul_nt(out.q, out.q);
  const DenseMatrix& basis = tall ? f.v : f.u;
  out.ortho_residual = out.rank_deficient ? frobenius_norm(g - matmul_nt(basis, basis))
                                          : gram_residual(g);
  return out;
}

PolarResult polar(const DenseMatrix& m, const PolarConfig& cfg) {
  if (cfg.method == PolarMethod::exact) return polar_exact(m, cfg.rank_tol);
  return polar_newton_schulz(m, cfg.max_iter, cfg.tol, cfg.rank_tol);
}

}  // namespace mucon
