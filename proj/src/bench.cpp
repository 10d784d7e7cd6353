#include "mucon/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "mucon/linalg.hpp"
#include "mucon/matrix_io.hpp"
#include "mucon/random.hpp"

namespace mucon {

std::string_view to_string(SigmaLaw l) noexcept {
  switch (l) {
    case SigmaLaw::explicit_list: return "explicit_list";
    case SigmaLaw::uniform_range: return "uniform_range";
    case SigmaLaw::clustered_at_tau: return "clustered_at_tau";
    case SigmaLaw::powerlaw: return "powerlaw";
  }
  return "unknown";
}

SigmaLaw parse_sigma_law(std::string_view name) {
  if (name == "explicit_list" || name == "explicit") return SigmaLaw::explicit_list;
  if (name == "uniform_range" || name == "uniform") return SigmaLaw::uniform_range;
  if (name == "clustered_at_tau" || name == "clustered") return SigmaLaw::clustered_at_tau;
  if (name == "powerlaw") return SigmaLaw::powerlaw;
  throw std::invalid_argument("unknown sigma law '" + std::string(name) + "'");
}

std::vector<double> spectrum_values(const SpectrumSpec& spec) {
  if (spec.rows == 0 || spec.cols == 0) throw std::invalid_argument("spectrum: empty shape");
  const std::size_t r = std::min(spec.rows, spec.cols);
  std::vector<double> s(r, 0.0);
  Rng rng(derive_seed(spec.seed, 0));
  switch (spec.law) {
    case SigmaLaw::explicit_list:
      if (spec.sigma.size() > r) throw std::invalid_argument("spectrum: too many singular values");
      for (std::size_t i = 0; i < spec.sigma.size(); ++i) {
        if (!(spec.sigma[i] >= 0.0)) throw std::invalid_argument("spectrum: negative value");
        if (i > 0 && spec.sigma[i] > spec.sigma[i - 1]) {
          throw std::invalid_argument("spectrum: explicit list must be non-increasing");
        }
        s[i] = spec.sigma[i];
      }
      break;
    case SigmaLaw::uniform_range:
      if (!(spec.lo >= 0.0 && spec.hi > spec.lo)) throw std::invalid_argument("spectrum: bad range");
      for (double& x : s) {
        int guard = 0;
        do {
          x = rng.uniform(spec.lo, spec.hi);
          if (++guard > 10000) throw std::invalid_argument("spectrum: exclusion covers the range");
        } while (std::abs(x - spec.tau) < spec.exclusion);
      }
      break;
    case SigmaLaw::clustered_at_tau: {
      if (!(spec.delta > 0.0) || !(spec.fraction >= 0.0 && spec.fraction <= 1.0)) {
        throw std::invalid_argument("spectrum: clustered law needs delta > 0, fraction in [0,1]");
      }
      const auto clustered =
          static_cast<std::size_t>(std::lround(spec.fraction * static_cast<double>(r)));
      for (std::size_t i = 0; i < r; ++i) {
        if (i < clustered) {
          const double mag = rng.uniform(0.5, 1.0);
          s[i] = spec.tau + (i % 2 == 0 ? 1.0 : -1.0) * spec.delta * mag;
        } else {
          s[i] = spec.tau * ((i % 2 == 0) ? rng.uniform(1.5, 3.0) : rng.uniform(0.2, 0.5));
        }
      }
      break;
    }
    case SigmaLaw::powerlaw:
      for (std::size_t i = 0; i < r; ++i) {
        s[i] = spec.scale * std::pow(static_cast<double>(i + 1), -spec.exponent);
      }
      break;
  }
  std::sort(s.begin(), s.end(), std::greater<>());
  return s;
}

DenseMatrix generate_matrix(const SpectrumSpec& spec) {
  const std::vector<double> s = spectrum_values(spec);
  Rng rng(derive_seed(spec.seed, 1));
  const DenseMatrix u = random_orthonormal(spec.rows, s.size(), rng);
  const DenseMatrix v = random_orthonormal(spec.cols, s.size(), rng);
  return matmul_nt(scale_cols(u, s), v);
}

namespace {

double diag_or(const ClipResult& r, const char* key, double fallback) {
  const auto it = r.diagnostics.find(key);
  return it == r.diagnostics.end() ? fallback : it->second;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c == '\n' ? ' ' : c;
  }
  return q + "\"";
}

TrialRecord run_trial(const DenseMatrix& m, const ClipResult& oracle, double tau,
                      ClipMethod method, const DirectionKernels& kernels) {
  TrialRecord rec;
  rec.method = std::string(to_string(method));
  rec.rows = m.rows();
  rec.cols = m.cols();
  DirectionKernels k = kernels;
  k.clip = method;
  try {
    const OpCountScope scope;
    const auto t0 = std::chrono::steady_clock::now();
    const ClipResult r = clip_with(m, tau, k);
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const OpCounts ops = scope.elapsed();
    rec.matmuls = ops.matmuls;
    rec.flops = ops.flops;
    if (!r.x.all_finite()) throw std::runtime_error("non-finite output");
    rec.frobenius_error_vs_oracle = relative_error(r.x, oracle.x);
    rec.spectral_norm_of_output = spectral_norm(r.x);
    rec.iterations = r.iterations;
    rec.min_threshold_distance = diag_or(r, "min_threshold_distance", 0.0);
    rec.solve_condition_max =
        diag_or(r, "solve_condition_max", diag_or(r, "abs_max_condition", 0.0));
    rec.k_over = diag_or(r, "k_over", diag_or(oracle, "k_over", 0.0));
  } catch (const std::exception& e) {
    rec.status = e.what();
  }
  return rec;
}

}  // namespace

std::vector<TrialRecord> run_method_comparison(const std::vector<SpectrumSpec>& specs, double tau,
                                               const std::vector<ClipMethod>& methods,
                                               const DirectionKernels& kernels) {
  require_positive_tau(tau, "run_method_comparison");
  std::vector<TrialRecord> out;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const DenseMatrix m = generate_matrix(specs[i]);
    const ClipResult oracle = mclip_exact(m, tau);
    for (ClipMethod method : methods) {
      TrialRecord rec = run_trial(m, oracle, tau, method, kernels);
      rec.spec_index = i;
      rec.seed = specs[i].seed;
      if (specs[i].law == SigmaLaw::clustered_at_tau) rec.delta = specs[i].delta;
      if (method == ClipMethod::rational_filter) rec.reg_mu = kernels.rational.reg_mu;
      out.push_back(std::move(rec));
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const TrialRecord& a, const TrialRecord& b) {
    return a.spec_index != b.spec_index ? a.spec_index < b.spec_index : a.method < b.method;
  });
  return out;
}

void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& records,
                      bool with_timing) {
  out << "spec_index,method,rows,cols,delta,reg_mu,seed,frobenius_error_vs_oracle,"
         "spectral_norm_of_output,iterations,min_threshold_distance,solve_condition_max,"
         "k_over,matmuls,flops";
  if (with_timing) out << ",wall_time";
  out << ",status\n";
  for (const TrialRecord& r : records) {
    out << r.spec_index << ',' << r.method << ',' << r.rows << ',' << r.cols << ','
        << format_double(r.delta) << ',' << format_double(r.reg_mu) << ',' << r.seed << ','
        << format_double(r.frobenius_error_vs_oracle) << ','
        << format_double(r.spectral_norm_of_output) << ',' << r.iterations << ','
        << format_double(r.min_threshold_distance) << ',' << format_double(r.solve_condition_max)
        << ',' << format_double(r.k_over) << ',' << r.matmuls << ',' << r.flops;
    if (with_timing) out << ',' << format_double(r.wall_time);
    out << ',' << csv_field(r.status) << '\n';
  }
}

LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_loglog: length mismatch");
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  if (lx.size() < 2) throw std::invalid_argument("fit_loglog: need two positive points");
  const double n = static_cast<double>(lx.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_loglog: x values are all equal");
  LogLogFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double d = ly[i] - (f.intercept + f.slope * lx[i]);
    ss += d * d;
  }
  f.residual = std::sqrt(ss / n);
  return f;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

ThresholdSweepReport threshold_sweep(const ThresholdSweepConfig& cfg,
                                     const DirectionKernels& kernels) {
  if (cfg.trials < 1 || cfg.deltas.empty()) {
    throw std::invalid_argument("threshold_sweep: need trials >= 1 and at least one delta");
  }
  ThresholdSweepReport rep;
  for (std::size_t di = 0; di < cfg.deltas.size(); ++di) {
    const double delta = cfg.deltas[di];
    DirectionKernels k = kernels;
    if (cfg.reg_mu_factor > 0.0) k.rational.reg_mu = cfg.reg_mu_factor * delta;
    for (int t = 0; t < cfg.trials; ++t) {
      SpectrumSpec spec;
      spec.rows = cfg.rows;
      spec.cols = cfg.cols;
      spec.law = SigmaLaw::clustered_at_tau;
      spec.delta = delta;
      spec.fraction = cfg.fraction;
      spec.tau = cfg.tau;
      spec.seed = derive_seed(cfg.seed, di * 1000 + static_cast<std::size_t>(t));
      std::vector<TrialRecord> recs = run_method_comparison({spec}, cfg.tau, cfg.methods, k);
      for (TrialRecord& r : recs) {
        r.spec_index = di * static_cast<std::size_t>(cfg.trials) + static_cast<std::size_t>(t);
        rep.records.push_back(std::move(r));
      }
    }
  }

  std::vector<double> cond_x;
  std::vector<double> cond_y;
  for (ClipMethod method : cfg.methods) {
    const std::string name(to_string(method));
    for (double delta : cfg.deltas) {
      SweepPoint pt;
      pt.method = name;
      pt.delta = delta;
      std::vector<double> errs;
      for (const TrialRecord& r : rep.records) {
        if (r.method != name || r.delta != delta) continue;
        if (!r.ok()) {
          ++pt.failures;
          continue;
        }
        errs.push_back(r.frobenius_error_vs_oracle);
        pt.max_condition = std::max(pt.max_condition, r.solve_condition_max);
      }
      pt.median_error = median(errs);
      if (method == ClipMethod::rational_filter && pt.max_condition > 0.0) {
        cond_x.push_back(delta);
        cond_y.push_back(pt.max_condition);
      }
      rep.points.push_back(pt);
    }
  }
  if (cond_x.size() >= 2) rep.condition_fit = fit_loglog(cond_x, cond_y);
  return rep;
}

std::string_view to_string(DirectionKind k) noexcept {
  switch (k) {
    case DirectionKind::dense_iid: return "dense_iid";
    case DirectionKind::polar: return "polar";
    case DirectionKind::mucon_clip: return "mucon_clip";
  }
  return "unknown";
}

DirectionKind parse_direction_kind(std::string_view name) {
  if (name == "dense_iid" || name == "dense") return DirectionKind::dense_iid;
  if (name == "polar" || name == "muon") return DirectionKind::polar;
  if (name == "mucon_clip" || name == "mucon" || name == "clip") return DirectionKind::mucon_clip;
  throw std::invalid_argument("unknown direction kind '" + std::string(name) + "'");
}

WidthExponentReport width_exponent_study(const WidthStudyConfig& cfg,
                                         const DirectionKernels& kernels) {
  if (cfg.widths.size() < 4) throw std::invalid_argument("width study: need at least 4 widths");
  if (cfg.trials < 1 || cfg.aspect < 1) throw std::invalid_argument("width study: bad settings");
  WidthExponentReport rep;
  rep.kind = cfg.kind;
  rep.aspect = cfg.aspect;
  for (std::size_t w : cfg.widths) {
    if (w == 0) throw std::invalid_argument("width study: zero width");
    const std::size_t rows = cfg.aspect * w;
    double sum = 0.0;
    double worst = 0.0;
    for (int t = 0; t < cfg.trials; ++t) {
      Rng rng(derive_seed(cfg.seed, w * 1000 + static_cast<std::size_t>(t)));
      const DenseMatrix g = gaussian_matrix(rows, w, rng);
      DenseMatrix d;
      switch (cfg.kind) {
        case DirectionKind::dense_iid: d = g; break;
        case DirectionKind::polar: d = polar(g, kernels.polar).q; break;
        case DirectionKind::mucon_clip: d = clip_with(g, cfg.tau, kernels).x; break;
      }
      const double r = rms_operator_norm(d);
      sum += r;
      worst = std::max(worst, r);
    }
    rep.widths.push_back(w);
    rep.rms_norms.push_back(sum / cfg.trials);
    rep.rms_max.push_back(worst);
    rep.rms_bound.push_back(std::sqrt(static_cast<double>(w) / static_cast<double>(rows)) *
                            cfg.tau);
  }
  std::vector<double> xs(rep.widths.begin(), rep.widths.end());
  rep.fit = fit_loglog(xs, rep.rms_norms);
  return rep;
}

TiedLogitReport tied_logit_width_study(const TiedLogitStudyConfig& cfg) {
  if (cfg.widths.size() < 2 || cfg.trials < 1 || cfg.vocab == 0 || cfg.n_base == 0) {
    throw std::invalid_argument("tied logit study: bad settings");
  }
  TiedLogitReport rep;
  const double sd = std::sqrt(cfg.sigma_base_sq);
  for (std::size_t w : cfg.widths) {
    double sum = 0.0;
    for (int t = 0; t < cfg.trials; ++t) {
      Rng rng(derive_seed(cfg.seed, w * 1000 + static_cast<std::size_t>(t)));
      DenseMatrix e = gaussian_matrix(cfg.vocab, w, rng);
      e *= sd;
      const std::size_t x = static_cast<std::size_t>(t) % cfg.vocab;
      const std::vector<double> h(e.row(x).begin(), e.row(x).end());
      const double m_n = static_cast<double>(w) / static_cast<double>(cfg.n_base);
      sum += tied_logit_scale(e, h, m_n)[x];
    }
    rep.widths.push_back(w);
    rep.logits.push_back(sum / cfg.trials);
  }
  std::vector<double> xs(rep.widths.begin(), rep.widths.end());
  rep.fit = fit_loglog(xs, rep.logits);
  return rep;
}

std::vector<ScaleTableRow> scale_table(const ScalingConfig& base,
                                       const std::vector<std::pair<double, double>>& points) {
  std::vector<ScaleTableRow> rows;
  for (const auto& [mn, ml] : points) {
    ScalingConfig cfg = base;
    const double n = mn * static_cast<double>(base.n_base);
    const double l = ml * static_cast<double>(base.l_base);
    if (!(n >= 1.0 && l >= 1.0) || n != std::round(n) || l != std::round(l)) {
      throw std::invalid_argument("scale table: multipliers must give integer widths and depths");
    }
    cfg.n = static_cast<std::uint64_t>(n);
    cfg.l = static_cast<std::uint64_t>(l);
    for (Recipe recipe : kAllRecipes) {
      for (ParamGroupKind kind : kAllGroupKinds) {
        rows.push_back({recipe, kind, cfg.m_n(), cfg.m_l(), resolve_group(kind, recipe, cfg)});
      }
    }
  }
  return rows;
}

void scale_table_emit(std::ostream& out, const ScalingConfig& base,
                      const std::vector<std::pair<double, double>>& points) {
  const auto opt = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string("n/a");
  };
  out << "recipe,kind,m_N,m_L,alpha,lr,weight_decay,adamw_eps,init_variance,forward_multiplier\n";
  for (const ScaleTableRow& r : scale_table(base, points)) {
    out << to_string(r.recipe) << ',' << to_string(r.kind) << ',' << format_double(r.m_n) << ','
        << format_double(r.m_l) << ',' << format_double(base.alpha) << ','
        << format_double(r.hp.lr) << ',' << format_double(r.hp.weight_decay) << ','
        << opt(r.hp.adamw_eps) << ',' << format_double(r.hp.init_variance) << ','
        << opt(r.hp.forward_multiplier) << '\n';
  }
}

}  // namespace mucon
