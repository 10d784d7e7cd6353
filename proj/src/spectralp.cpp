#include "mucon/spectralp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mucon/linalg.hpp"

namespace mucon {

std::string_view to_string(DirectionMode m) noexcept {
  return m == DirectionMode::muon_polar ? "muon_polar" : "mucon_clip";
}

DirectionMode parse_direction_mode(std::string_view name) {
  if (name == "muon_polar" || name == "muon") return DirectionMode::muon_polar;
  if (name == "mucon_clip" || name == "mucon") return DirectionMode::mucon_clip;
  throw std::invalid_argument("unknown direction mode '" + std::string(name) + "'");
}

void ScalingConfig::validate() const {
  if (n == 0 || l == 0 || n_base == 0 || l_base == 0) {
    throw std::invalid_argument("scaling config: widths and depths must be positive");
  }
  if (!(tau > 0.0)) throw std::invalid_argument("scaling config: tau must be > 0");
  if (!(rho_match > 0.0)) throw std::invalid_argument("scaling config: rho_match must be > 0");
  if (!(alpha >= 0.5 && alpha <= 1.0)) {
    throw std::invalid_argument("scaling config: alpha must lie in [1/2, 1]");
  }
}

std::string_view to_string(ParamGroupKind k) noexcept {
  switch (k) {
    case ParamGroupKind::hidden_matrix: return "hidden_matrix";
    case ParamGroupKind::embedding: return "embedding";
    case ParamGroupKind::unembedding: return "unembedding";
    case ParamGroupKind::hidden_layernorm: return "hidden_layernorm";
    case ParamGroupKind::hidden_bias: return "hidden_bias";
    case ParamGroupKind::hidden_vector: return "hidden_vector";
    case ParamGroupKind::final_layernorm: return "final_layernorm";
  }
  return "unknown";
}

ParamGroupKind parse_group_kind(std::string_view name) {
  for (ParamGroupKind k : kAllGroupKinds) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown parameter group kind '" + std::string(name) + "'");
}

std::string_view to_string(Recipe r) noexcept {
  switch (r) {
    case Recipe::mup_adamw: return "mup_adamw";
    case Recipe::completep_adamw: return "completep_adamw";
    case Recipe::spectralp: return "spectralp";
  }
  return "unknown";
}

Recipe parse_recipe(std::string_view name) {
  for (Recipe r : kAllRecipes) {
    if (to_string(r) == name) return r;
  }
  if (name == "mup") return Recipe::mup_adamw;
  if (name == "completep") return Recipe::completep_adamw;
  throw std::invalid_argument("unknown recipe '" + std::string(name) + "'");
}

GroupHyperparams resolve_group(ParamGroupKind kind, Recipe recipe, const ScalingConfig& cfg) {
  cfg.validate();
  const double mn = cfg.m_n();
  const bool width_only = recipe == Recipe::mup_adamw;
  const double ml = width_only ? 1.0 : cfg.m_l();
  const double alpha = width_only ? 1.0 : cfg.alpha;
  const double lr_depth = std::pow(ml, alpha - 1.0);
  const double residual = std::pow(ml, -alpha);
  const double hidden_eps = cfg.eps_base / mn * residual;
  const double outer_eps = cfg.eps_base / mn;

  GroupHyperparams hp;
  switch (kind) {
    case ParamGroupKind::hidden_matrix:
      hp.init_variance = cfg.sigma_base_sq / mn;
      hp.forward_multiplier = width_only ? 1.0 : residual;
      if (recipe == Recipe::spectralp) {
        hp.lr = cfg.eta_base;
        hp.weight_decay = cfg.lambda_base;
      } else {
        hp.lr = cfg.eta_base / mn * lr_depth;
        hp.weight_decay = cfg.lambda_base * mn;
        hp.adamw_eps = hidden_eps;
      }
      break;
    case ParamGroupKind::embedding:
    case ParamGroupKind::unembedding:
      hp.lr = cfg.gamma_emb * cfg.eta_base;
      hp.weight_decay = cfg.lambda_base;
      hp.adamw_eps = outer_eps;
      hp.init_variance = cfg.sigma_base_sq;
      if (kind == ParamGroupKind::unembedding || cfg.tied_embeddings) {
        hp.forward_multiplier = 1.0 / mn;
      }
      break;
    case ParamGroupKind::hidden_layernorm:
    case ParamGroupKind::hidden_bias:
    case ParamGroupKind::hidden_vector:
      hp.lr = cfg.eta_base * lr_depth;
      hp.adamw_eps = hidden_eps;
      break;
    case ParamGroupKind::final_layernorm:
      hp.lr = cfg.eta_base;
      hp.adamw_eps = outer_eps;
      break;
  }
  return hp;
}

double kappa_muon(std::uint64_t m, std::uint64_t n, double rho_match) {
  if (m == 0 || n == 0) throw std::invalid_argument("kappa_muon: dimensions must be positive");
  if (!(rho_match > 0.0)) throw std::invalid_argument("kappa_muon: rho_match must be > 0");
  return rho_match * std::sqrt(static_cast<double>(std::max(m, n)));
}

ClipResult clip_with(const DenseMatrix& m, double tau, const DirectionKernels& k) {
  switch (k.clip) {
    case ClipMethod::exact: return mclip_exact(m, tau);
    case ClipMethod::abs_polar: return mclip_abs(m, tau, k.abs);
    case ClipMethod::rational_filter: return mclip_rational(m, tau, k.rational);
    case ClipMethod::lowrank_deflate: return mclip_lowrank(m, tau, k.lowrank);
  }
  throw std::invalid_argument("clip_with: unknown method");
}

DirectionResult muon_direction(MomentumState& state, const DenseMatrix& grad, double momentum_beta,
                               const ScalingConfig& cfg, const DirectionKernels& kernels) {
  if (!(momentum_beta >= 0.0 && momentum_beta < 1.0)) {
    throw std::invalid_argument("muon_direction: momentum beta must lie in [0, 1)");
  }
  if (state.buffer.empty()) state.buffer = DenseMatrix(grad.rows(), grad.cols());
  require_same_shape(state.buffer, grad, "muon_direction");
  state.buffer *= momentum_beta;
  state.buffer += grad;
  ++state.steps;
  const DenseMatrix b = cfg.nesterov ? momentum_beta * state.buffer + grad : state.buffer;

  DirectionResult out;
  if (cfg.direction_mode == DirectionMode::mucon_clip) {
    ClipResult r = clip_with(b, cfg.tau, kernels);
    out.direction = std::move(r.x);
    out.iterations = r.iterations;
    out.diagnostics = std::move(r.diagnostics);
    return out;
  }
  if (max_abs(b) == 0.0) {
    out.direction = DenseMatrix(b.rows(), b.cols());
    return out;
  }
  PolarResult p = polar(b, kernels.polar);
  out.direction = std::move(p.q);
  out.iterations = p.iterations;
  out.diagnostics["polar_residual"] = p.ortho_residual;
  out.diagnostics["converged"] = p.converged ? 1.0 : 0.0;
  return out;
}

DenseMatrix apply_matrix_step(const DenseMatrix& param, const DenseMatrix& direction,
                              const GroupHyperparams& hp, const ScalingConfig& cfg) {
  require_same_shape(param, direction, "apply_matrix_step");
  const double kappa = kappa_muon(param.rows(), param.cols(), cfg.rho_match);
  DenseMatrix out = (1.0 - hp.lr * hp.weight_decay) * param;
  out -= (hp.lr * kappa) * direction;
  return out;
}

DenseMatrix adamw_companion_step(const DenseMatrix& param, const DenseMatrix& grad,
                                 AdamWState& state, const GroupHyperparams& hp,
                                 const AdamWConfig& adam) {
  if (!hp.adamw_eps) throw std::invalid_argument("adamw_companion_step: group has no AdamW eps");
  require_same_shape(param, grad, "adamw_companion_step");
  if (state.first_moment.empty()) {
    state.first_moment = DenseMatrix(grad.rows(), grad.cols());
    state.second_moment = DenseMatrix(grad.rows(), grad.cols());
  }
  require_same_shape(state.first_moment, grad, "adamw_companion_step");
  ++state.step;
  const double c1 = 1.0 - std::pow(adam.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(adam.beta2, static_cast<double>(state.step));
  const double eps = *hp.adamw_eps;
  DenseMatrix out = param;
  auto g = grad.data();
  auto m1 = state.first_moment.data();
  auto m2 = state.second_moment.data();
  auto p = out.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    m1[i] = adam.beta1 * m1[i] + (1.0 - adam.beta1) * g[i];
    m2[i] = adam.beta2 * m2[i] + (1.0 - adam.beta2) * g[i] * g[i];
    const double m_hat = m1[i] / c1;
    const double v_hat = m2[i] / c2;
    p[i] = p[i] * (1.0 - hp.lr * hp.weight_decay) - hp.lr * m_hat / (std::sqrt(v_hat) + eps);
  }
  return out;
}

std::vector<double> tied_logit_scale(const DenseMatrix& e, std::span<const double> h, double m_n) {
  if (h.size() != e.cols()) {
    throw ShapeError("tied_logit_scale: hidden vector of length " + std::to_string(h.size()) +
                     " does not fit " + shape_string(e));
  }
  if (!(m_n > 0.0)) throw std::invalid_argument("tied_logit_scale: m_n must be > 0");
  std::vector<double> logits = matvec(e, h);
  for (double& x : logits) x /= m_n;
  return logits;
}

}  // namespace mucon
