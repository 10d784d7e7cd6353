#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "mucon/bench.hpp"
#include "mucon/spectralp.hpp"

namespace mucon {

/// Draws `count` uniform_range specs with independent random shapes in
/// [min_dim, max_dim] and singular values at least `exclusion` away from τ.
struct RandomSpecsConfig {
  std::size_t count = 0;
  std::size_t min_dim = 8;
  std::size_t max_dim = 64;
  double lo = 0.2;
  double hi = 3.0;
  double exclusion = 0.1;
  std::uint64_t seed = 1;
};

std::vector<SpectrumSpec> random_specs(const RandomSpecsConfig& cfg, double tau);

/// Everything a config file can set. Sections and keys:
///   tau, seed, methods: [...]
///   polar {method, max_iter, tol, rank_tol}
///   abs_polar {polar_tol, abs_tol, max_iter, cond_cap, band_tol, flush_negative}
///   rational_filter {max_iter, tol, reg_mu, symmetrize_each_step, cond_cap,
///                    polar_tol, polar_max_iter}
///   lowrank {initial_budget, oversample, power_iters, max_power_iters,
///            residual_tol, margin, budget_cap, seed}
///   scaling {eta_base, sigma_base_sq, lambda_base, eps_base, rho_match,
///            gamma_emb, tau, n_base, l_base, n, l, alpha, tied_embeddings,
///            direction_mode, nesterov, clip_method}
///   specs [{rows, cols, law, sigma, lo, hi, exclusion, delta, fraction,
///           exponent, scale, seed}]
///   random_specs {count, min_dim, max_dim, lo, hi, exclusion, seed}
///   threshold_sweep {rows, cols, deltas, trials, fraction, reg_mu_factor, seed}
///   width_exponent {widths, trials, kind, aspect, seed}
/// Unknown keys are rejected.
struct MuconConfig {
  double tau = 1.0;
  std::uint64_t seed = 1;
  std::vector<ClipMethod> methods = {ClipMethod::exact, ClipMethod::abs_polar,
                                     ClipMethod::rational_filter, ClipMethod::lowrank_deflate};
  DirectionKernels kernels;
  ScalingConfig scaling;
  std::vector<SpectrumSpec> specs;
  RandomSpecsConfig random;
  ThresholdSweepConfig sweep;
  WidthStudyConfig width;

  /// Explicit specs followed by the random ones.
  std::vector<SpectrumSpec> all_specs() const;
};

/// Throws FormatError on malformed JSON, unknown keys or wrong value types.
MuconConfig parse_config(std::string_view json_text);
MuconConfig load_config(const std::filesystem::path& path);

}  // namespace mucon
