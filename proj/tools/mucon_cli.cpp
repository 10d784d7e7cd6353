// mucon: clip matrices, run the method benchmarks and print scaling tables.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mucon/bench.hpp"
#include "mucon/config.hpp"
#include "mucon/matrix_io.hpp"
#include "mucon/spectralp.hpp"

namespace {

using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitTrialFailure = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

mucon::MuconConfig config_or_default(const std::string& path) {
  return path.empty() ? mucon::MuconConfig{} : mucon::load_config(path);
}

// Writes to `path`, or stdout when empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
}

std::vector<std::pair<double, double>> parse_points(const std::string& text) {
  std::vector<std::pair<double, double>> pts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw UsageError("points must look like mN:mL, got '" + item + "'");
    try {
      pts.emplace_back(std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
    } catch (const std::exception&) {
      throw UsageError("bad point '" + item + "'");
    }
  }
  if (pts.empty()) throw UsageError("no points given");
  return pts;
}

int count_failures(const std::vector<mucon::TrialRecord>& recs) {
  int n = 0;
  for (const auto& r : recs) n += r.ok() ? 0 : 1;
  return n;
}

ordered_json fit_json(const mucon::LogLogFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"residual", f.residual}};
}

int run_clip(const std::string& input, const std::string& output, double tau,
             const std::string& method, const std::string& config_path) {
  mucon::MuconConfig cfg = config_or_default(config_path);
  mucon::DirectionKernels k = cfg.kernels;
  if (!method.empty()) k.clip = mucon::parse_clip_method(method);
  const mucon::DenseMatrix m = mucon::load_matrix(input);
  mucon::ClipResult r;
  try {
    r = mucon::clip_with(m, tau, k);
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception& e) {
    std::cerr << "mucon clip: " << e.what() << '\n';
    return kExitTrialFailure;
  }
  mucon::save_matrix(output, r.x);
  ordered_json j;
  j["method"] = std::string(mucon::to_string(r.method));
  j["rows"] = r.x.rows();
  j["cols"] = r.x.cols();
  j["tau"] = tau;
  j["iterations"] = r.iterations;
  j["residual"] = r.residual;
  j["diagnostics"] = r.diagnostics;
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

int run_compare(const std::string& config_path, const std::string& out, const std::string& summary,
                bool with_timing) {
  mucon::MuconConfig cfg = config_or_default(config_path);
  if (cfg.specs.empty() && cfg.random.count == 0) cfg.random.count = 20;
  const auto recs =
      mucon::run_method_comparison(cfg.all_specs(), cfg.tau, cfg.methods, cfg.kernels);
  std::ostringstream csv;
  mucon::write_trials_csv(csv, recs, with_timing);
  emit(out, csv.str());
  if (!summary.empty()) {
    ordered_json j;
    j["trials"] = recs.size();
    j["failures"] = count_failures(recs);
    for (auto m : cfg.methods) {
      const std::string name(mucon::to_string(m));
      std::vector<double> errs;
      double worst = 0.0;
      for (const auto& r : recs) {
        if (r.method != name || !r.ok()) continue;
        errs.push_back(r.frobenius_error_vs_oracle);
        worst = std::max(worst, r.frobenius_error_vs_oracle);
      }
      j["methods"][name] = {{"ok", errs.size()},
                            {"median_error", errs.empty() ? 0.0 : mucon::median(errs)},
                            {"max_error", worst}};
    }
    emit(summary, j.dump(2) + "\n");
  }
  return count_failures(recs) > 0 ? kExitTrialFailure : kExitOk;
}

int run_sweep(const std::string& config_path, const std::string& out, const std::string& summary,
              bool with_timing, std::optional<double> reg_mu_factor, std::optional<int> trials) {
  mucon::MuconConfig cfg = config_or_default(config_path);
  if (reg_mu_factor) cfg.sweep.reg_mu_factor = *reg_mu_factor;
  if (trials) cfg.sweep.trials = *trials;
  const auto rep = mucon::threshold_sweep(cfg.sweep, cfg.kernels);
  std::ostringstream csv;
  mucon::write_trials_csv(csv, rep.records, with_timing);
  emit(out, csv.str());
  if (!summary.empty()) {
    ordered_json j;
    j["reg_mu_factor"] = cfg.sweep.reg_mu_factor;
    j["condition_fit"] = fit_json(rep.condition_fit);
    j["points"] = ordered_json::array();
    for (const auto& p : rep.points) {
      j["points"].push_back({{"method", p.method},
                             {"delta", p.delta},
                             {"median_error", p.median_error},
                             {"max_condition", p.max_condition},
                             {"failures", p.failures}});
    }
    emit(summary, j.dump(2) + "\n");
  }
  return count_failures(rep.records) > 0 ? kExitTrialFailure : kExitOk;
}

int run_width(const std::string& config_path, const std::string& out, const std::string& summary,
              const std::string& kind, std::optional<std::size_t> aspect,
              const std::vector<std::size_t>& widths, std::optional<int> trials) {
  mucon::MuconConfig cfg = config_or_default(config_path);
  if (!kind.empty()) cfg.width.kind = mucon::parse_direction_kind(kind);
  if (aspect) cfg.width.aspect = *aspect;
  if (!widths.empty()) cfg.width.widths = widths;
  if (trials) cfg.width.trials = *trials;
  const auto rep = mucon::width_exponent_study(cfg.width, cfg.kernels);
  std::ostringstream csv;
  csv << "kind,aspect,width,rms_mean,rms_max,rms_bound\n";
  for (std::size_t i = 0; i < rep.widths.size(); ++i) {
    csv << mucon::to_string(rep.kind) << ',' << rep.aspect << ',' << rep.widths[i] << ','
        << mucon::format_double(rep.rms_norms[i]) << ',' << mucon::format_double(rep.rms_max[i])
        << ',' << mucon::format_double(rep.rms_bound[i]) << '\n';
  }
  emit(out, csv.str());
  if (!summary.empty()) {
    ordered_json j;
    j["kind"] = std::string(mucon::to_string(rep.kind));
    j["aspect"] = rep.aspect;
    j["fit"] = fit_json(rep.fit);
    emit(summary, j.dump(2) + "\n");
  }
  return kExitOk;
}

int run_scale_table(const std::string& config_path, const std::string& points,
                    const std::string& out) {
  const mucon::MuconConfig cfg = config_or_default(config_path);
  std::ostringstream csv;
  mucon::scale_table_emit(csv, cfg.scaling, parse_points(points));
  emit(out, csv.str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Singular-value clipping kernels and benchmarks"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  std::string summary;
  bool with_timing = false;

  auto* clip = app.add_subcommand("clip", "Clip one matrix file (DMAT or CSV)");
  std::string input;
  std::string output;
  double tau = 1.0;
  std::string method;
  clip->add_option("input", input, "Input matrix")->required()->check(CLI::ExistingFile);
  clip->add_option("-o,--output", output, "Output matrix (.csv for CSV, else DMAT)")->required();
  clip->add_option("--tau", tau, "Clipping threshold")->capture_default_str();
  clip->add_option("--method", method, "exact | abs_polar | rational_filter | lowrank_deflate");
  clip->add_option("--config", config_path, "JSON config file");

  auto* bench = app.add_subcommand("bench", "Benchmarks against the SVD oracle");
  bench->require_subcommand(1);
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("-o,--out", out, "CSV output path (default stdout)");
    sub->add_option("--summary", summary, "JSON summary path");
  };
  auto* compare = bench->add_subcommand("compare", "All methods on the configured spectra");
  add_common(compare);
  compare->add_flag("--with-timing", with_timing, "Add a wall_time column");

  auto* sweep = bench->add_subcommand("threshold-sweep", "Clustered spectra approaching tau");
  add_common(sweep);
  sweep->add_flag("--with-timing", with_timing, "Add a wall_time column");
  std::optional<double> reg_mu_factor;
  std::optional<int> trials;
  sweep->add_option("--reg-mu-factor", reg_mu_factor, "Run the rational filter with reg_mu = f*delta");
  sweep->add_option("--trials", trials, "Trials per delta");

  auto* width = bench->add_subcommand("width-exponent", "Log-log slope of RMS operator norms");
  add_common(width);
  std::string kind;
  std::optional<std::size_t> aspect;
  std::vector<std::size_t> widths;
  width->add_option("--kind", kind, "dense_iid | polar | mucon_clip");
  width->add_option("--aspect", aspect, "rows = aspect * width");
  width->add_option("--widths", widths, "Widths to fit over")->delimiter(',');
  width->add_option("--trials", trials, "Trials per width");

  auto* table = app.add_subcommand("scale-table", "Resolved per-group hyperparameters as CSV");
  std::string points = "1:1,4:2,8:8";
  table->add_option("--config", config_path, "JSON config file (scaling section)");
  table->add_option("--points", points, "Comma-separated mN:mL pairs")->capture_default_str();
  table->add_option("-o,--out", out, "CSV output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (clip->parsed()) return run_clip(input, output, tau, method, config_path);
    if (compare->parsed()) return run_compare(config_path, out, summary, with_timing);
    if (sweep->parsed()) {
      return run_sweep(config_path, out, summary, with_timing, reg_mu_factor, trials);
    }
    if (width->parsed()) {
      return run_width(config_path, out, summary, kind, aspect, widths, trials);
    }
    if (table->parsed()) return run_scale_table(config_path, points, out);
  } catch (const mucon::FormatError& e) {
    std::cerr << "mucon: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "mucon: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "mucon: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "mucon: " << e.what() << '\n';
    return kExitTrialFailure;
  }
  return kExitUsage;
}
