#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mucon/absclip.hpp"
#include "mucon/clip_exact.hpp"
#include "mucon/dense_matrix.hpp"
#include "mucon/lowrank.hpp"
#include "mucon/polar.hpp"
#include "mucon/ratfilter.hpp"

namespace mucon {

enum class DirectionMode { muon_polar, mucon_clip };

std::string_view to_string(DirectionMode m) noexcept;
DirectionMode parse_direction_mode(std::string_view name);

struct ScalingConfig {
  double eta_base = 1e-3;
  double sigma_base_sq = 4e-4;
  double lambda_base = 0.1;
  double eps_base = 1e-8;
  double rho_match = 1.0;
  double gamma_emb = 1.0;
  double tau = 1.0;
  std::uint64_t n_base = 256;
  std::uint64_t l_base = 4;
  std::uint64_t n = 256;
  std::uint64_t l = 4;
  double alpha = 1.0;
  bool tied_embeddings = false;
  DirectionMode direction_mode = DirectionMode::mucon_clip;
  /// Direction is taken on β·B_t + G_t instead of B_t.
  bool nesterov = false;

  double m_n() const noexcept { return static_cast<double>(n) / static_cast<double>(n_base); }
  double m_l() const noexcept { return static_cast<double>(l) / static_cast<double>(l_base); }
  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

enum class ParamGroupKind {
  hidden_matrix,
  embedding,
  unembedding,
  hidden_layernorm,
  hidden_bias,
  hidden_vector,
  final_layernorm,
};

inline constexpr ParamGroupKind kAllGroupKinds[] = {
    ParamGroupKind::hidden_matrix,    ParamGroupKind::embedding,   ParamGroupKind::unembedding,
    ParamGroupKind::hidden_layernorm, ParamGroupKind::hidden_bias, ParamGroupKind::hidden_vector,
    ParamGroupKind::final_layernorm,
};

std::string_view to_string(ParamGroupKind k) noexcept;
ParamGroupKind parse_group_kind(std::string_view name);

enum class Recipe { mup_adamw, completep_adamw, spectralp };

inline constexpr Recipe kAllRecipes[] = {Recipe::mup_adamw, Recipe::completep_adamw,
                                         Recipe::spectralp};

std::string_view to_string(Recipe r) noexcept;
Recipe parse_recipe(std::string_view name);

struct GroupHyperparams {
  double lr = 0.0;
  double weight_decay = 0.0;
  /// Absent for SpectralP hidden matrices, which take a spectral direction.
  std::optional<double> adamw_eps;
  double init_variance = 0.0;
  /// Residual-branch multiplier for hidden matrices, output multiplier for
  /// the unembedding (and the tied embedding).
  std::optional<double> forward_multiplier;
};

/// Per-group multipliers. muP is width-only (m_L taken as 1); CompleteP and
/// the SpectralP companions use the residual exponent α for depth factors.
GroupHyperparams resolve_group(ParamGroupKind kind, Recipe recipe, const ScalingConfig& cfg);

/// ρ·sqrt(max(m, n)).
double kappa_muon(std::uint64_t m, std::uint64_t n, double rho_match);

struct MomentumState {
  DenseMatrix buffer;
  std::int64_t steps = 0;
};

struct AdamWState {
  DenseMatrix first_moment;
  DenseMatrix second_moment;
  std::int64_t step = 0;
};

/// Settings for the clipping kernels a MuCon direction may use.
struct DirectionKernels {
  ClipMethod clip = ClipMethod::exact;
  PolarConfig polar;
  AbsClipConfig abs;
  RationalFilterConfig rational;
  LowRankConfig lowrank;
};

struct DirectionResult {
  DenseMatrix direction;
  int iterations = 0;
  std::map<std::string, double> diagnostics;
};

/// Any of the four clipping kernels, dispatched on `k.clip`.
ClipResult clip_with(const DenseMatrix& m, double tau, const DirectionKernels& k);

/// B ← β·B + G, then Pol(B) or MClip_τ(B) according to cfg.direction_mode.
/// An empty buffer is initialized to zeros of the gradient's shape.
DirectionResult muon_direction(MomentumState& state, const DenseMatrix& grad, double momentum_beta,
                               const ScalingConfig& cfg, const DirectionKernels& kernels = {});

/// param·(1 − lr·wd) − lr·κ(m, n)·direction.
DenseMatrix apply_matrix_step(const DenseMatrix& param, const DenseMatrix& direction,
                              const GroupHyperparams& hp, const ScalingConfig& cfg);

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
};

/// Decoupled-decay AdamW with bias correction. Throws std::invalid_argument
/// when hp carries no ε.
DenseMatrix adamw_companion_step(const DenseMatrix& param, const DenseMatrix& grad,
                                 AdamWState& state, const GroupHyperparams& hp,
                                 const AdamWConfig& adam = {});

/// m_N⁻¹·E·h.
std::vector<double> tied_logit_scale(const DenseMatrix& e, std::span<const double> h, double m_n);

}  // namespace mucon
