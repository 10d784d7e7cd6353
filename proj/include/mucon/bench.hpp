#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mucon/clip_exact.hpp"
#include "mucon/dense_matrix.hpp"
#include "mucon/spectralp.hpp"

namespace mucon {

enum class SigmaLaw { explicit_list, uniform_range, clustered_at_tau, powerlaw };

std::string_view to_string(SigmaLaw l) noexcept;
SigmaLaw parse_sigma_law(std::string_view name);

struct SpectrumSpec {
  std::size_t rows = 16;
  std::size_t cols = 16;
  SigmaLaw law = SigmaLaw::uniform_range;
  /// explicit_list: leading singular values; the rest are zero.
  std::vector<double> sigma;
  /// uniform_range: σ ~ U[lo, hi], redrawn while |σ − τ| < exclusion.
  double lo = 0.2;
  double hi = 3.0;
  double exclusion = 0.0;
  /// clustered_at_tau: σ = τ + δ·s with |s| ∈ [0.5, 1] and alternating sign for
  /// the first round(fraction·r) values; the rest come from
  /// τ·([0.2, 0.5] ∪ [1.5, 3]).
  double delta = 1e-3;
  double fraction = 1.0;
  double tau = 1.0;
  /// powerlaw: σ_i = scale·(i + 1)^(−exponent).
  double exponent = 1.0;
  double scale = 1.0;
  std::uint64_t seed = 0;
};

/// Singular values the spec asks for, sorted non-increasing, min(rows, cols) long.
std::vector<double> spectrum_values(const SpectrumSpec& spec);

/// U·diag(σ)·Vᵀ with seeded random orthonormal factors.
DenseMatrix generate_matrix(const SpectrumSpec& spec);

struct TrialRecord {
  std::size_t spec_index = 0;
  std::string method;
  std::size_t rows = 0;
  std::size_t cols = 0;
  double delta = 0.0;
  double reg_mu = 0.0;
  std::uint64_t seed = 0;
  /// ‖X − X_exact‖_F / ‖X_exact‖_F.
  double frobenius_error_vs_oracle = 0.0;
  double spectral_norm_of_output = 0.0;
  int iterations = 0;
  double min_threshold_distance = 0.0;
  double solve_condition_max = 0.0;
  double k_over = 0.0;
  std::uint64_t matmuls = 0;
  std::uint64_t flops = 0;
  double wall_time = 0.0;
  /// "ok" or the failure message.
  std::string status = "ok";

  bool ok() const noexcept { return status == "ok"; }
};

/// Runs every method on every spec against mclip_exact. Failing trials are
/// recorded with their message and the run continues. Records come back
/// sorted by (spec_index, method).
std::vector<TrialRecord> run_method_comparison(const std::vector<SpectrumSpec>& specs, double tau,
                                               const std::vector<ClipMethod>& methods,
                                               const DirectionKernels& kernels);

/// The wall_time column is only written when `with_timing` is set, so the
/// default output is byte-stable for fixed seeds.
void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& records,
                      bool with_timing = false);

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  /// Root-mean-square residual of the fit in log space.
  double residual = 0.0;
};

/// Least-squares line through (log x, log y). Needs ≥ 2 positive points.
LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

double median(std::vector<double> v);

struct ThresholdSweepConfig {
  std::size_t rows = 32;
  std::size_t cols = 32;
  std::vector<double> deltas = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  int trials = 3;
  double tau = 1.0;
  double fraction = 1.0;
  /// When positive, the rational filter runs with reg_mu = reg_mu_factor·δ.
  double reg_mu_factor = 0.0;
  std::vector<ClipMethod> methods = {ClipMethod::abs_polar, ClipMethod::rational_filter};
  std::uint64_t seed = 7;
};

struct SweepPoint {
  std::string method;
  double delta = 0.0;
  double median_error = 0.0;
  double max_condition = 0.0;
  int failures = 0;
};

struct ThresholdSweepReport {
  std::vector<TrialRecord> records;
  /// One point per (method, δ), δ in sweep order.
  std::vector<SweepPoint> points;
  /// Slope of rational-filter max condition vs δ, if that method ran.
  LogLogFit condition_fit;
};

ThresholdSweepReport threshold_sweep(const ThresholdSweepConfig& cfg,
                                     const DirectionKernels& kernels);

enum class DirectionKind { dense_iid, polar, mucon_clip };

std::string_view to_string(DirectionKind k) noexcept;
DirectionKind parse_direction_kind(std::string_view name);

struct WidthStudyConfig {
  std::vector<std::size_t> widths = {32, 64, 128, 256};
  int trials = 3;
  DirectionKind kind = DirectionKind::dense_iid;
  /// rows = aspect·N, cols = N.
  std::size_t aspect = 1;
  double tau = 1.0;
  std::uint64_t seed = 11;
};

struct WidthExponentReport {
  std::vector<std::size_t> widths;
  /// Mean RMS operator norm at each width.
  std::vector<double> rms_norms;
  /// Largest RMS operator norm seen over all trials, per width.
  std::vector<double> rms_max;
  /// √(cols/rows)·τ for each width (the clip bound).
  std::vector<double> rms_bound;
  DirectionKind kind = DirectionKind::dense_iid;
  std::size_t aspect = 1;
  LogLogFit fit;
};

/// Gaussian G at each width, mapped to G, Pol(G) or MClip_τ(G) with the
/// kernel from `kernels`, and the log-log slope of the RMS operator norm.
WidthExponentReport width_exponent_study(const WidthStudyConfig& cfg,
                                         const DirectionKernels& kernels);

struct TiedLogitStudyConfig {
  std::vector<std::size_t> widths = {64, 128, 256, 512, 1024};
  std::size_t n_base = 64;
  std::size_t vocab = 32;
  double sigma_base_sq = 1.0;
  int trials = 8;
  std::uint64_t seed = 13;
};

struct TiedLogitReport {
  std::vector<std::size_t> widths;
  /// Mean self-overlap logit m_N⁻¹·e_xᵀe_x at each width.
  std::vector<double> logits;
  LogLogFit fit;
};

/// Tied-embedding logits with h = e_x across widths; flat when the m_N⁻¹
/// output multiplier is applied.
TiedLogitReport tied_logit_width_study(const TiedLogitStudyConfig& cfg);

struct ScaleTableRow {
  Recipe recipe = Recipe::mup_adamw;
  ParamGroupKind kind = ParamGroupKind::hidden_matrix;
  double m_n = 1.0;
  double m_l = 1.0;
  GroupHyperparams hp;
};

/// All (point × recipe × kind) rows. Each point (m_N, m_L) sets
/// n = m_N·n_base and l = m_L·l_base on a copy of `base`.
std::vector<ScaleTableRow> scale_table(const ScalingConfig& base,
                                       const std::vector<std::pair<double, double>>& points);

/// CSV with header recipe,kind,m_N,m_L,alpha,lr,weight_decay,adamw_eps,
/// init_variance,forward_multiplier; absent optionals are written as "n/a".
void scale_table_emit(std::ostream& out, const ScalingConfig& base,
                      const std::vector<std::pair<double, double>>& points);

}  // namespace mucon
