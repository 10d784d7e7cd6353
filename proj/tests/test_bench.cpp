#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "mucon/bench.hpp"
#include "mucon/config.hpp"
#include "mucon/decompositions.hpp"
#include "mucon/linalg.hpp"
#include "mucon/matrix_io.hpp"
#include "support.hpp"

using namespace mucon;

TEST(Spectrum, LawsProduceRequestedValues) {
  SpectrumSpec s;
  s.rows = 6;
  s.cols = 4;
  s.law = SigmaLaw::explicit_list;
  s.sigma = {3.0, 1.0};
  EXPECT_EQ(spectrum_values(s), (std::vector<double>{3.0, 1.0, 0.0, 0.0}));

  s.law = SigmaLaw::powerlaw;
  s.exponent = 2.0;
  s.scale = 4.0;
  EXPECT_EQ(spectrum_values(s), (std::vector<double>{4.0, 1.0, 4.0 / 9, 0.25}));

  s.law = SigmaLaw::uniform_range;
  s.rows = s.cols = 50;
  s.exclusion = 0.2;
  for (double v : spectrum_values(s)) {
    EXPECT_GE(v, s.lo);
    EXPECT_LE(v, s.hi);
    EXPECT_GE(std::abs(v - 1.0), 0.2);
  }

  s.law = SigmaLaw::clustered_at_tau;
  s.delta = 1e-4;
  s.fraction = 0.5;
  int near = 0;
  for (double v : spectrum_values(s)) {
    if (std::abs(v - 1.0) <= 1e-4) {
      ++near;
    } else {
      EXPECT_TRUE((v >= 0.2 && v <= 0.5) || (v >= 1.5 && v <= 3.0)) << v;
    }
  }
  EXPECT_EQ(near, 25);
}

TEST(Spectrum, GeneratedMatrixHasSpectrum) {
  SpectrumSpec s;
  s.rows = 20;
  s.cols = 11;
  s.seed = 9;
  const auto want = spectrum_values(s);
  const auto got = svd_compact(generate_matrix(s)).sigma;
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  EXPECT_EQ(generate_matrix(s), generate_matrix(s));
}

TEST(Stats, LogLogFitAndMedian) {
  const std::vector<double> x = {1, 2, 4, 8};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, -1.5));
  const LogLogFit f = fit_loglog(x, y);
  EXPECT_NEAR(f.slope, -1.5, 1e-14);
  EXPECT_NEAR(f.intercept, std::log(3.0), 1e-14);
  EXPECT_NEAR(f.residual, 0.0, 1e-14);
  EXPECT_THROW(fit_loglog({1.0}, {1.0}), std::invalid_argument);
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 2, 3}), 2.5);
}

TEST(Comparison, RecordsAndCsv) {
  RandomSpecsConfig rc;
  rc.count = 3;
  rc.max_dim = 16;
  const auto recs = run_method_comparison(random_specs(rc, 1.0), 1.0,
                                          {ClipMethod::exact, ClipMethod::abs_polar}, {});
  ASSERT_EQ(recs.size(), 6u);
  for (const auto& r : recs) {
    EXPECT_TRUE(r.ok()) << r.status;
    EXPECT_LE(r.spectral_norm_of_output, 1.0 + 1e-7);
    if (r.method == "exact") {
      EXPECT_EQ(r.frobenius_error_vs_oracle, 0.0);
    }
  }
  std::ostringstream plain;
  std::ostringstream timed;
  write_trials_csv(plain, recs);
  write_trials_csv(timed, recs, true);
  const std::string text = plain.str();
  EXPECT_EQ(text.substr(0, text.find('\n')).find("wall_time"), std::string::npos);
  EXPECT_NE(timed.str().find("wall_time"), std::string::npos);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 7);
}

TEST(Comparison, FailuresAreRecordedNotThrown) {
  SpectrumSpec s;
  s.rows = s.cols = 12;
  s.lo = 1.5;  // every value violates: low-rank budget runs out
  const auto recs = run_method_comparison({s}, 1.0, {ClipMethod::lowrank_deflate}, {});
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_FALSE(recs[0].ok());
  EXPECT_NE(recs[0].status.find("budget"), std::string::npos);
}

TEST(Sweep, ConditionGrowsAsDeltaShrinks) {
  ThresholdSweepConfig cfg;
  cfg.rows = cfg.cols = 12;
  cfg.deltas = {1e-2, 1e-4};
  cfg.trials = 1;
  const auto rep = threshold_sweep(cfg, {});
  ASSERT_EQ(rep.points.size(), 4u);
  EXPECT_LT(rep.condition_fit.slope, -0.5);
}

TEST(Sweep, DegradationAsValuesApproachThreshold) {
  ThresholdSweepConfig cfg;
  cfg.fraction = 0.5;
  const auto rep = threshold_sweep(cfg, {});
  std::vector<SweepPoint> abs_pts;
  std::vector<SweepPoint> rat_pts;
  for (const auto& p : rep.points) {
    EXPECT_EQ(p.failures, 0);
    (p.method == "abs_polar" ? abs_pts : rat_pts).push_back(p);
  }
  ASSERT_EQ(rat_pts.size(), cfg.deltas.size());
  for (std::size_t i = 1; i < rat_pts.size(); ++i) {
    EXPECT_GE(rat_pts[i].median_error, rat_pts[i - 1].median_error) << rat_pts[i].delta;
    EXPECT_GE(abs_pts[i].max_condition, abs_pts[i - 1].max_condition) << abs_pts[i].delta;
  }
  // The absolute-value route stays at rounding level: |·| is Lipschitz, so its
  // growing sign-iteration condition does not reach the output.
  for (const auto& p : abs_pts) EXPECT_LT(p.median_error, 1e-9) << p.delta;
}

TEST(Width, ClipBoundAndDenseGrowth) {
  WidthStudyConfig cfg;
  cfg.widths = {8, 16, 32, 64};
  cfg.trials = 2;
  cfg.kind = DirectionKind::mucon_clip;
  const auto clip = width_exponent_study(cfg, {});
  for (std::size_t i = 0; i < clip.widths.size(); ++i) {
    EXPECT_LE(clip.rms_max[i], clip.rms_bound[i] * (1 + 1e-12));
  }
  cfg.kind = DirectionKind::dense_iid;
  EXPECT_GT(width_exponent_study(cfg, {}).fit.slope, 0.3);
}

TEST(ScaleTable, RowCountAndMarkers) {
  std::ostringstream out;
  scale_table_emit(out, ScalingConfig{}, {{1, 1}, {2, 2}});
  const std::string s = out.str();
  EXPECT_EQ(s.substr(0, s.find('\n')),
            "recipe,kind,m_N,m_L,alpha,lr,weight_decay,adamw_eps,init_variance,forward_multiplier");
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 1 + 2 * 3 * 7);
  EXPECT_NE(s.find("spectralp,hidden_matrix,1,1,1,0.001,0.1,n/a"), std::string::npos);
}

TEST(Config, ParsesSectionsAndRejectsUnknownKeys) {
  const MuconConfig c = parse_config(R"({
    "tau": 2.0, "methods": ["exact", "rational"],
    "rational_filter": {"reg_mu": 0.01},
    "specs": [{"rows": 4, "cols": 3, "law": "explicit_list", "sigma": [3, 1]}],
    "random_specs": {"count": 2}
  })");
  EXPECT_EQ(c.tau, 2.0);
  EXPECT_EQ(c.methods.size(), 2u);
  EXPECT_EQ(c.kernels.rational.reg_mu, 0.01);
  EXPECT_EQ(c.all_specs().size(), 3u);
  EXPECT_EQ(c.all_specs()[0].tau, 2.0);
  EXPECT_EQ(c.sweep.tau, 2.0);
  EXPECT_THROW(parse_config(R"({"taus": 1})"), FormatError);
  EXPECT_THROW(parse_config(R"({"lowrank": {"budget": 3}})"), FormatError);
  EXPECT_THROW(parse_config(R"({"tau": "one"})"), FormatError);
  EXPECT_THROW(parse_config(R"({"tau": -1})"), FormatError);
  EXPECT_THROW(parse_config("{"), FormatError);
  EXPECT_THROW(parse_config(R"({"specs": [{"law": "explicit_list"}]})"), FormatError);
}

// ---- command-line tool ----

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string("\"") + MUCON_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("mucon_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::filesystem::path dir_;
};

}  // namespace

TEST_F(Cli, ClipWritesClippedMatrix) {
  const auto c = mucon::test::construct(7, 5, {2.0, 0.5}, 3);
  save_matrix(path("in.dmat"), c.m);
  EXPECT_EQ(run("clip " + path("in.dmat") + " -o " + path("out.csv") + " --method abs"), 0);
  EXPECT_LT(frobenius_norm(load_matrix(path("out.csv")) - c.clipped(1.0)), 1e-7);
  EXPECT_EQ(run("clip " + path("in.dmat") + " -o " + path("out.dmat") + " --tau 0.25"), 0);
  EXPECT_LT(frobenius_norm(load_matrix(path("out.dmat")) - c.clipped(0.25)), 1e-12);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_EQ(run("clip /nonexistent -o x.csv"), 1);
  std::ofstream(path("bad.csv")) << "1,2\n3\n";
  EXPECT_EQ(run("clip " + path("bad.csv") + " -o " + path("o.csv")), 1);
  std::ofstream(path("ok.csv")) << "3,0\n0,0.5\n";
  EXPECT_EQ(run("clip " + path("ok.csv") + " -o " + path("o.csv") + " --tau -1"), 1);
  EXPECT_EQ(run("clip " + path("ok.csv") + " -o " + path("o.csv") + " --method nope"), 1);
  std::ofstream(path("cfg.json")) << R"({"unknown": 1})";
  EXPECT_EQ(run("bench compare --config " + path("cfg.json")), 1);

  // Every value above τ: the low-rank method fails its trials.
  std::ofstream(path("dense.json"))
      << R"({"methods": ["lowrank"], "specs": [{"rows": 10, "cols": 10, "lo": 1.5}]})";
  EXPECT_EQ(run("bench compare --config " + path("dense.json") + " -o " + path("d.csv")), 2);
  std::ofstream(path("fine.json"))
      << R"({"methods": ["exact", "abs"], "random_specs": {"count": 2, "max_dim": 12}})";
  EXPECT_EQ(run("bench compare --config " + path("fine.json") + " -o " + path("f.csv") +
                " --summary " + path("f.json")),
            0);
  EXPECT_TRUE(std::filesystem::exists(path("f.json")));
  EXPECT_EQ(run("scale-table --points 1:1,2:x"), 1);
  EXPECT_EQ(run("scale-table -o " + path("t.csv")), 0);
  EXPECT_EQ(run("bench width-exponent --kind polar --widths 8,16 --trials 1"), 1);
  EXPECT_EQ(run("bench width-exponent --kind polar --widths 8,16,24,32 --trials 1 -o " + path("w.csv")),
            0);
}
