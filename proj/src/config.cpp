#include "mucon/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mucon/matrix_io.hpp"
#include "mucon/random.hpp"

namespace mucon {

using nlohmann::json;

std::vector<SpectrumSpec> random_specs(const RandomSpecsConfig& cfg, double tau) {
  if (cfg.min_dim == 0 || cfg.max_dim < cfg.min_dim) {
    throw std::invalid_argument("random specs: need 0 < min_dim <= max_dim");
  }
  std::vector<SpectrumSpec> out;
  out.reserve(cfg.count);
  const auto span = static_cast<std::uint64_t>(cfg.max_dim - cfg.min_dim + 1);
  for (std::size_t i = 0; i < cfg.count; ++i) {
    SpectrumSpec s;
    s.seed = derive_seed(cfg.seed, i);
    Rng rng(derive_seed(s.seed, 2));
    s.rows = cfg.min_dim + static_cast<std::size_t>(rng.next_u64() % span);
    s.cols = cfg.min_dim + static_cast<std::size_t>(rng.next_u64() % span);
    s.law = SigmaLaw::uniform_range;
    s.lo = cfg.lo;
    s.hi = cfg.hi;
    s.exclusion = cfg.exclusion * tau;
    s.tau = tau;
    out.push_back(s);
  }
  return out;
}

std::vector<SpectrumSpec> MuconConfig::all_specs() const {
  std::vector<SpectrumSpec> out = specs;
  const std::vector<SpectrumSpec> extra = random_specs(random, tau);
  out.insert(out.end(), extra.begin(), extra.end());
  return out;
}

namespace {

void check_keys(const json& obj, const char* section, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw FormatError(std::string(section) + ": expected an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : keys) known = known || item.key() == k;
    if (!known) throw FormatError(std::string(section) + ": unknown key '" + item.key() + "'");
  }
}

template <class T>
void get(const json& obj, const char* key, T& dst) {
  if (obj.contains(key)) dst = obj.at(key).get<T>();
}

template <class T, class Parse>
void get_enum(const json& obj, const char* key, T& dst, Parse parse) {
  if (obj.contains(key)) dst = parse(obj.at(key).get<std::string>());
}

void read_polar(const json& j, PolarConfig& c) {
  check_keys(j, "polar", {"method", "max_iter", "tol", "rank_tol"});
  get_enum(j, "method", c.method, parse_polar_method);
  get(j, "max_iter", c.max_iter);
  get(j, "tol", c.tol);
  get(j, "rank_tol", c.rank_tol);
}

void read_abs(const json& j, AbsClipConfig& c) {
  check_keys(j, "abs_polar",
             {"polar_tol", "abs_tol", "max_iter", "cond_cap", "band_tol", "flush_negative"});
  get(j, "polar_tol", c.polar_tol);
  get(j, "abs_tol", c.abs_tol);
  get(j, "max_iter", c.max_iter);
  get(j, "cond_cap", c.cond_cap);
  get(j, "band_tol", c.band_tol);
  get(j, "flush_negative", c.flush_negative);
}

void read_rational(const json& j, RationalFilterConfig& c) {
  check_keys(j, "rational_filter",
             {"max_iter", "tol", "reg_mu", "symmetrize_each_step", "cond_cap", "polar_tol",
              "polar_max_iter"});
  get(j, "max_iter", c.max_iter);
  get(j, "tol", c.tol);
  get(j, "reg_mu", c.reg_mu);
  get(j, "symmetrize_each_step", c.symmetrize_each_step);
  get(j, "cond_cap", c.cond_cap);
  get(j, "polar_tol", c.polar_tol);
  get(j, "polar_max_iter", c.polar_max_iter);
}

void read_lowrank(const json& j, LowRankConfig& c) {
  check_keys(j, "lowrank",
             {"initial_budget", "oversample", "power_iters", "max_power_iters", "residual_tol",
              "margin", "budget_cap", "seed"});
  get(j, "initial_budget", c.initial_budget);
  get(j, "oversample", c.oversample);
  get(j, "power_iters", c.power_iters);
  get(j, "max_power_iters", c.max_power_iters);
  get(j, "residual_tol", c.residual_tol);
  get(j, "margin", c.margin);
  get(j, "budget_cap", c.budget_cap);
  get(j, "seed", c.seed);
}

void read_scaling(const json& j, ScalingConfig& c, ClipMethod& clip) {
  check_keys(j, "scaling",
             {"eta_base", "sigma_base_sq", "lambda_base", "eps_base", "rho_match", "gamma_emb",
              "tau", "n_base", "l_base", "n", "l", "alpha", "tied_embeddings", "direction_mode",
              "nesterov", "clip_method"});
  get(j, "eta_base", c.eta_base);
  get(j, "sigma_base_sq", c.sigma_base_sq);
  get(j, "lambda_base", c.lambda_base);
  get(j, "eps_base", c.eps_base);
  get(j, "rho_match", c.rho_match);
  get(j, "gamma_emb", c.gamma_emb);
  get(j, "tau", c.tau);
  get(j, "n_base", c.n_base);
  get(j, "l_base", c.l_base);
  get(j, "n", c.n);
  get(j, "l", c.l);
  get(j, "alpha", c.alpha);
  get(j, "tied_embeddings", c.tied_embeddings);
  get_enum(j, "direction_mode", c.direction_mode, parse_direction_mode);
  get(j, "nesterov", c.nesterov);
  get_enum(j, "clip_method", clip, parse_clip_method);
  c.validate();
}

SpectrumSpec read_spec(const json& j) {
  check_keys(j, "specs[]",
             {"rows", "cols", "law", "sigma", "lo", "hi", "exclusion", "delta", "fraction",
              "exponent", "scale", "seed"});
  SpectrumSpec s;
  get(j, "rows", s.rows);
  get(j, "cols", s.cols);
  get_enum(j, "law", s.law, parse_sigma_law);
  get(j, "sigma", s.sigma);
  get(j, "lo", s.lo);
  get(j, "hi", s.hi);
  get(j, "exclusion", s.exclusion);
  get(j, "delta", s.delta);
  get(j, "fraction", s.fraction);
  get(j, "exponent", s.exponent);
  get(j, "scale", s.scale);
  get(j, "seed", s.seed);
  if (s.law == SigmaLaw::explicit_list && !j.contains("sigma")) {
    throw FormatError("specs[]: explicit_list needs 'sigma'");
  }
  return s;
}

void read_random(const json& j, RandomSpecsConfig& c) {
  check_keys(j, "random_specs", {"count", "min_dim", "max_dim", "lo", "hi", "exclusion", "seed"});
  get(j, "count", c.count);
  get(j, "min_dim", c.min_dim);
  get(j, "max_dim", c.max_dim);
  get(j, "lo", c.lo);
  get(j, "hi", c.hi);
  get(j, "exclusion", c.exclusion);
  get(j, "seed", c.seed);
}

void read_sweep(const json& j, ThresholdSweepConfig& c) {
  check_keys(j, "threshold_sweep",
             {"rows", "cols", "deltas", "trials", "fraction", "reg_mu_factor", "seed"});
  get(j, "rows", c.rows);
  get(j, "cols", c.cols);
  get(j, "deltas", c.deltas);
  get(j, "trials", c.trials);
  get(j, "fraction", c.fraction);
  get(j, "reg_mu_factor", c.reg_mu_factor);
  get(j, "seed", c.seed);
}

void read_width(const json& j, WidthStudyConfig& c) {
  check_keys(j, "width_exponent", {"widths", "trials", "kind", "aspect", "seed"});
  get(j, "widths", c.widths);
  get(j, "trials", c.trials);
  get_enum(j, "kind", c.kind, parse_direction_kind);
  get(j, "aspect", c.aspect);
  get(j, "seed", c.seed);
}

}  // namespace

MuconConfig parse_config(std::string_view text) {
  MuconConfig cfg;
  try {
    const json root = json::parse(text);
    check_keys(root, "config",
               {"tau", "seed", "methods", "polar", "abs_polar", "rational_filter", "lowrank",
                "scaling", "specs", "random_specs", "threshold_sweep", "width_exponent"});
    get(root, "tau", cfg.tau);
    get(root, "seed", cfg.seed);
    if (root.contains("methods")) {
      cfg.methods.clear();
      for (const auto& m : root.at("methods")) {
        cfg.methods.push_back(parse_clip_method(m.get<std::string>()));
      }
    }
    if (root.contains("polar")) read_polar(root.at("polar"), cfg.kernels.polar);
    if (root.contains("abs_polar")) read_abs(root.at("abs_polar"), cfg.kernels.abs);
    if (root.contains("rational_filter")) {
      read_rational(root.at("rational_filter"), cfg.kernels.rational);
    }
    if (root.contains("lowrank")) read_lowrank(root.at("lowrank"), cfg.kernels.lowrank);
    if (root.contains("scaling")) read_scaling(root.at("scaling"), cfg.scaling, cfg.kernels.clip);
    if (root.contains("specs")) {
      for (const auto& s : root.at("specs")) {
        cfg.specs.push_back(read_spec(s));
        cfg.specs.back().tau = cfg.tau;
      }
    }
    if (root.contains("random_specs")) read_random(root.at("random_specs"), cfg.random);
    if (root.contains("threshold_sweep")) read_sweep(root.at("threshold_sweep"), cfg.sweep);
    if (root.contains("width_exponent")) read_width(root.at("width_exponent"), cfg.width);
  } catch (const json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  cfg.sweep.tau = cfg.tau;
  cfg.width.tau = cfg.tau;
  if (!(cfg.tau > 0.0)) throw FormatError("config: tau must be > 0");
  return cfg;
}

MuconConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace mucon
