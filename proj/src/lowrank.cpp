#include "mucon/lowrank.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mucon/linalg.hpp"
#include "mucon/random.hpp"

namespace mucon {

DenseMatrix SubspaceSketch::left_vectors() const { return matmul(q_basis, small_svd.u); }

namespace {

// One application of MMᵀ to the basis, orthonormalizing in between.
DenseMatrix power_step(const DenseMatrix& m, const DenseMatrix& q) {
  const DenseMatrix z = orthonormalize_columns(matmul_tn(m, q));
  return orthonormalize_columns(matmul(m, z));
}

SubspaceSketch finish(const DenseMatrix& m, DenseMatrix q, int power_iters, int oversample) {
  SubspaceSketch s;
  s.power_iters = power_iters;
  s.oversample = oversample;
  s.small_svd = svd_compact(matmul_tn(q, m));
  s.q_basis = std::move(q);
  return s;
}

}  // namespace

SubspaceSketch randomized_range(const DenseMatrix& m, int rank_budget, int power_iters,
                                int oversample, std::uint64_t seed) {
  if (rank_budget < 1 || oversample < 0 || power_iters < 0) {
    throw std::invalid_argument("randomized_range: budget >= 1, oversample and power_iters >= 0");
  }
  const std::size_t ell = static_cast<std::size_t>(rank_budget + oversample);
  if (ell > std::min(m.rows(), m.cols())) {
    throw std::invalid_argument("randomized_range: rank budget " + std::to_string(rank_budget) +
                                " + oversample " + std::to_string(oversample) +
                                " exceeds min dimension of " + shape_string(m));
  }
  Rng rng(seed);
  const DenseMatrix omega = gaussian_matrix(m.cols(), ell, rng);
  DenseMatrix q = orthonormalize_columns(matmul(m, omega));
  for (int i = 0; i < power_iters && q.cols() > 0; ++i) q = power_step(m, q);
  return finish(m, std::move(q), power_iters, oversample);
}

ClipResult mclip_lowrank(const DenseMatrix& m, double tau, const LowRankConfig& cfg) {
  require_positive_tau(tau, "mclip_lowrank");
  if (cfg.initial_budget < 1 || cfg.oversample < 0 || cfg.power_iters < 0 ||
      cfg.max_power_iters < cfg.power_iters || !(cfg.margin >= 0.0 && cfg.margin < 1.0)) {
    throw std::invalid_argument("mclip_lowrank: invalid configuration");
  }
  const int min_dim = static_cast<int>(std::min(m.rows(), m.cols()));
  const int cap = cfg.budget_cap > 0 ? std::min(cfg.budget_cap, min_dim)
                                     : std::max(1, min_dim / 2);
  ClipResult out;
  out.method = ClipMethod::lowrank_deflate;
  if (max_abs(m) == 0.0) {
    out.x = DenseMatrix(m.rows(), m.cols());
    out.diagnostics["k_over"] = 0.0;
    return out;
  }

  int budget = std::min(cfg.initial_budget, cap);
  for (;;) {
    const int oversample = std::min(cfg.oversample, min_dim - budget);
    SubspaceSketch sk = randomized_range(m, budget, cfg.power_iters, oversample, cfg.seed);
    const double lead = sk.small_svd.sigma.empty() ? 0.0 : sk.small_svd.sigma.front();
    const auto& sig = sk.small_svd.sigma;
    // The whole sketch must reach below the margin, and the violators must fit
    // in the budget.
    const std::size_t ell = sk.q_basis.cols();
    const double smallest = sig.size() >= ell && ell > 0 ? sig.back() : 0.0;
    const std::size_t over = clip_plan(sig, tau).k_over;
    if (smallest > tau * (1.0 - cfg.margin) || over > static_cast<std::size_t>(budget)) {
      if (budget >= cap) {
        throw ConvergenceError("mclip_lowrank: budget exhausted at " + std::to_string(cap) +
                                   " directions; many singular values exceed tau, use a "
                                   "global method",
                               smallest);
      }
      budget = std::min(2 * budget, cap);
      continue;
    }

    // Refine until the violating Ritz triples are accurate.
    int iters = cfg.power_iters;
    std::size_t k_over = 0;
    DenseMatrix u_hat;
    DenseMatrix w;
    for (;;) {
      k_over = clip_plan(sk.small_svd.sigma, tau).k_over;
      u_hat = sk.left_vectors();
      const DenseMatrix v_over = sk.small_svd.v.leading_cols(k_over);
      w = matmul(m, v_over) -
          scale_cols(u_hat.leading_cols(k_over),
                     std::span<const double>(sk.small_svd.sigma).first(k_over));
      double worst = 0.0;
      for (std::size_t j = 0; j < k_over; ++j) worst = std::max(worst, norm_2(w.col(j)));
      if (worst <= cfg.residual_tol * std::max(lead, tau) || iters >= cfg.max_power_iters) break;
      sk = finish(m, power_step(m, sk.q_basis), ++iters, oversample);
    }

    const ClipPlan plan = clip_plan(sk.small_svd.sigma, tau);
    const DenseMatrix u_over = u_hat.leading_cols(plan.k_over);
    const DenseMatrix v_over = sk.small_svd.v.leading_cols(plan.k_over);
    out.x = lowrank_correction_assemble(m, u_over, v_over, plan.excess);

    const double sigma_next = spectral_norm(m - matmul_nt(matmul(m, v_over), v_over));
    const double w_norm = frobenius_norm(w);
    out.iterations = iters;
    out.residual = w_norm;
    out.diagnostics["k_over"] = static_cast<double>(plan.k_over);
    out.diagnostics["budget"] = budget;
    out.diagnostics["power_iters"] = iters;
    out.diagnostics["sketch_residual"] = w_norm;
    out.diagnostics["sigma_next"] = sigma_next;
    out.diagnostics["residual_bound"] = std::max(0.0, sigma_next - tau) + w_norm;
    double min_dist = tau;
    for (double s : sig) min_dist = std::min(min_dist, std::abs(s - tau));
    out.diagnostics["min_threshold_distance"] = min_dist;
    return out;
  }
}

}  // namespace mucon
