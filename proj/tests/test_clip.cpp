#include <cmath>
#include <limits>

#include <gmpxx.h>
#include <gtest/gtest.h>

#include "mucon/absclip.hpp"
#include "mucon/clip_exact.hpp"
#include "mucon/decompositions.hpp"
#include "mucon/linalg.hpp"
#include "mucon/lowrank.hpp"
#include "mucon/polar.hpp"
#include "mucon/ratfilter.hpp"
#include "support.hpp"

using namespace mucon;
using mucon::test::construct;
using mucon::test::construct_sym;
using mucon::test::rel_diff;
using mucon::test::uniform_values;

namespace {

struct Shape {
  std::size_t rows;
  std::size_t cols;
};

const Shape kShapes[] = {{20, 20}, {35, 12}, {12, 35}, {1, 9}, {9, 1}, {2, 2}};

}  // namespace

// ---- exact clip ----

TEST(ClipPlan, UsesStrictInequality) {
  const std::vector<double> s = {3.0, 1.0, 1.0 + 1e-15, 0.5};
  const ClipPlan p = clip_plan(s, 1.0);
  EXPECT_EQ(p.k_over, 2u);
  EXPECT_EQ(p.violating_indices, (std::vector<std::size_t>{0, 2}));
  EXPECT_DOUBLE_EQ(p.excess[0], 2.0);
}

TEST(ClipExact, MatchesConstructedOracle) {
  std::uint64_t seed = 1;
  for (const Shape& sh : kShapes) {
    const std::size_t r = std::min(sh.rows, sh.cols);
    const auto c = construct(sh.rows, sh.cols, uniform_values(r, 0.2, 3.0, seed), seed + 50);
    const ClipResult x = mclip_exact(c.m, 1.0);
    EXPECT_LT(rel_diff(x.x, c.clipped(1.0)), 1e-12) << sh.rows << "x" << sh.cols;
    ++seed;
  }
}

TEST(ClipExact, NoOpBelowThresholdAndValidation) {
  const auto c = construct(8, 6, {0.9, 0.5, 0.1}, 3);
  EXPECT_EQ(mclip_exact(c.m, 1.0).x, c.m);
  EXPECT_EQ(mclip_exact(DenseMatrix(3, 4), 1.0).x, DenseMatrix(3, 4));
  EXPECT_THROW(mclip_exact(c.m, 0.0), std::invalid_argument);
  EXPECT_THROW(mclip_exact(c.m, -1.0), std::invalid_argument);
  EXPECT_THROW(mclip_exact(c.m, std::nan("")), std::invalid_argument);
}

TEST(ClipExact, LowRankCorrectionIdentity) {
  const auto c = construct(15, 10, {4.0, 2.5, 0.7, 0.3}, 4);
  const double tau = 1.0;
  const DenseMatrix x = lowrank_correction_assemble(c.m, c.u.leading_cols(2), c.v.leading_cols(2),
                                                    std::vector<double>{3.0, 1.5});
  EXPECT_LT(rel_diff(x, c.clipped(tau)), 1e-14);
}

TEST(ClipMethodNames, RoundTrip) {
  for (ClipMethod m : {ClipMethod::exact, ClipMethod::abs_polar, ClipMethod::rational_filter,
                       ClipMethod::lowrank_deflate}) {
    EXPECT_EQ(parse_clip_method(to_string(m)), m);
  }
  EXPECT_EQ(parse_clip_method("abs"), ClipMethod::abs_polar);
  EXPECT_THROW(parse_clip_method("svd"), std::invalid_argument);
}

// ---- polar ----

TEST(Polar, NewtonSchulzMatchesConstructedFactor) {
  std::uint64_t seed = 10;
  for (const Shape& sh : kShapes) {
    const std::size_t r = std::min(sh.rows, sh.cols);
    const auto c = construct(sh.rows, sh.cols, uniform_values(r, 0.01, 4.0, seed), seed + 1);
    const PolarResult p = polar_newton_schulz(c.m);
    EXPECT_TRUE(p.converged);
    EXPECT_LT(frobenius_norm(p.q - c.polar()), 1e-7) << sh.rows << "x" << sh.cols;
    seed += 2;
  }
}

TEST(Polar, QuadraticTailAndResidualHistory) {
  const auto c = construct(30, 20, uniform_values(20, 0.1, 1.0, 12), 13);
  const PolarResult p = polar_newton_schulz(c.m, 40, 1e-12);
  const auto& r = p.residual_history;
  ASSERT_GE(r.size(), 3u);
  EXPECT_GT(p.quadratic_constant, 0.0);
  // Each eigenvalue error e of XᵀX − I maps to e²(3 + e)/4, so above the
  // rounding floor r_{k+1} ≤ r_k².
  int checked = 0;
  for (std::size_t k = 0; k + 1 < r.size(); ++k) {
    if (r[k] < 0.1 && r[k] > 1e-6) {
      EXPECT_LE(r[k + 1], r[k] * r[k]);
      ++checked;
    }
  }
  EXPECT_GE(checked, 1);
  // Inside the basin the residual never increases until rounding takes over.
  for (std::size_t k = 0; k + 1 < r.size(); ++k) {
    if (r[k] < 1.0 && r[k] > 1e-13) {
      EXPECT_LE(r[k + 1], r[k]);
    }
  }
}

TEST(Polar, RankDeficientInputMapsToPartialIsometry) {
  const auto c = construct(10, 8, {3.0, 1.0, 0.5}, 14);
  const PolarResult ex = polar_exact(c.m);
  EXPECT_LT(frobenius_norm(ex.q - c.polar()), 1e-12);
  const PolarResult ns = polar_newton_schulz(c.m);
  EXPECT_TRUE(ns.rank_deficient);
  EXPECT_LT(frobenius_norm(ns.q - c.polar()), 1e-7);
}

TEST(Polar, ZeroInputAndDispatch) {
  EXPECT_THROW(polar_newton_schulz(DenseMatrix(3, 3)), std::invalid_argument);
  EXPECT_EQ(polar_exact(DenseMatrix(3, 2)).q, DenseMatrix(3, 2));
  const auto c = construct(6, 6, {2.0, 1.0, 1.0, 0.5, 0.5, 0.3}, 15);
  PolarConfig cfg;
  cfg.method = PolarMethod::exact;
  EXPECT_LT(frobenius_norm(polar(c.m, cfg).q - c.polar()), 1e-12);
  EXPECT_EQ(parse_polar_method("newton_schulz"), PolarMethod::newton_schulz);
}

// ---- matrix absolute value and abs-based clip ----

TEST(MatrixAbs, MatchesConstructedSpectrum) {
  const auto c = construct_sym({3.0, 1.2, -0.4, -2.0, 0.7, -0.05}, 20);
  const MatrixAbsResult r = matrix_abs(c.h);
  EXPECT_FALSE(r.fallback);
  EXPECT_LT(frobenius_norm(r.abs - c.apply([](double l) { return std::abs(l); })), 1e-11);
  EXPECT_NEAR(r.min_abs_eigenvalue, 0.05, 1e-9);
}

TEST(MatrixAbs, SingularInputFallsBack) {
  const auto c = construct_sym({2.0, -1.0, 0.0, 0.5}, 21);
  const MatrixAbsResult r = matrix_abs(c.h);
  EXPECT_TRUE(r.fallback);
  EXPECT_LT(frobenius_norm(r.abs - c.apply([](double l) { return std::abs(l); })), 1e-12);
}

TEST(AbsClip, MatchesConstructedOracle) {
  std::uint64_t seed = 30;
  for (const Shape& sh : kShapes) {
    const std::size_t r = std::min(sh.rows, sh.cols);
    const auto c =
        construct(sh.rows, sh.cols, uniform_values(r, 0.2, 3.0, seed, 1.0, 0.1), seed + 1);
    const ClipResult x = mclip_abs(c.m, 1.0);
    EXPECT_LT(rel_diff(x.x, c.clipped(1.0)), 1e-7) << sh.rows << "x" << sh.cols;
    EXPECT_EQ(x.diagnostics.at("side"), sh.rows >= sh.cols ? 0.0 : 1.0);
    seed += 2;
  }
}

TEST(AbsClip, FlushClampsNegativeEigenvalues) {
  // A symmetric factor with a small negative eigenvalue, as produced by a
  // slightly inaccurate polar factor.
  const auto c = construct_sym({2.0, 0.5, -1e-6}, 31);
  std::map<std::string, double> diag;
  AbsClipConfig cfg;
  const DenseMatrix flushed = clip_symmetric_factor({c.h, FactorSide::right}, 1.0, cfg, diag);
  EXPECT_LT(frobenius_norm(flushed - c.apply([](double l) { return std::clamp(l, 0.0, 1.0); })),
            1e-12);
  cfg.flush_negative = false;
  const DenseMatrix raw = clip_symmetric_factor({c.h, FactorSide::right}, 1.0, cfg, diag);
  EXPECT_LT(frobenius_norm(raw - c.apply([](double l) { return std::min(l, 1.0); })), 1e-12);
}

TEST(AbsClip, SymmetricFactorIsExactlySymmetric) {
  const auto c = construct(9, 5, {2.0, 1.5, 1.0, 0.5, 0.1}, 32);
  const SymmetricFactor f = symmetric_factor_from_polar(c.m, c.polar(), FactorSide::right);
  EXPECT_EQ(f.h, f.h.transpose());
  // H = V·diag(σ)·Vᵀ.
  EXPECT_LT(frobenius_norm(f.h - matmul_nt(scale_cols(c.v, c.sigma), c.v)), 1e-13);
  const SymmetricFactor k = symmetric_factor_from_polar(c.m, c.polar(), FactorSide::left);
  EXPECT_LT(frobenius_norm(k.h - matmul_nt(scale_cols(c.u, c.sigma), c.u)), 1e-13);
}

// ---- rational filter ----

TEST(ScalarNewton, ExactIteratesForSigmaTwoTauOne) {
  const auto t = scalar_clip_newton<mpq_class>(mpq_class(2), mpq_class(1), 3);
  EXPECT_EQ(t.iterates[1], mpq_class(2, 3));
  EXPECT_EQ(t.iterates[2], mpq_class(14, 15));
  EXPECT_EQ(t.iterates[3], mpq_class(254, 255));
  const auto d = scalar_clip_newton(2.0, 1.0, 3);
  EXPECT_DOUBLE_EQ(d.iterates[3], 254.0 / 255.0);
}

TEST(ScalarNewton, ConvergesToSmallerRootFromBelow) {
  for (double sigma : {0.0, 0.3, 0.99, 1.01, 5.0}) {
    const auto t = scalar_clip_newton(sigma, 1.0, 60);
    for (std::size_t k = 0; k + 1 < t.iterates.size(); ++k) {
      EXPECT_LE(t.iterates[k], t.iterates[k + 1]);
    }
    EXPECT_NEAR(t.iterates.back(), std::min(sigma, 1.0), 1e-12);
  }
  EXPECT_THROW(scalar_clip_newton(-1.0, 1.0, 1), std::invalid_argument);
  EXPECT_THROW(scalar_clip_newton(1.0, 0.0, 1), std::invalid_argument);
}

TEST(RationalFilter, ConvergesToClampedSpectrum) {
  const auto c = construct_sym({2.5, 1.7, 1.2, 0.8, 0.4, 0.0}, 40);
  const RationalFilterResult r = rational_filter_psd({c.h, FactorSide::right}, 1.0);
  EXPECT_TRUE(r.converged);
  EXPECT_FALSE(r.linear_mode);
  EXPECT_LT(frobenius_norm(r.p - c.apply([](double l) { return std::min(l, 1.0); })), 1e-12);
  EXPECT_NEAR(r.min_threshold_distance, 0.2, 1e-8);
  EXPECT_EQ(r.conditions.size(), static_cast<std::size_t>(r.iterations));
  EXPECT_EQ(r.steps.size(), static_cast<std::size_t>(r.iterations));
}

TEST(RationalFilter, IteratesIncreaseInLoewnerOrder) {
  const auto c = construct_sym({2.6, 1.9, 1.3, 0.9, 0.6, 0.2, 0.05}, 45);
  RationalFilterConfig cfg;
  cfg.record_iterates = true;
  const RationalFilterResult r = rational_filter_psd({c.h, FactorSide::right}, 1.0, cfg);
  ASSERT_EQ(r.iterates.size(), static_cast<std::size_t>(r.iterations) + 1);
  for (std::size_t k = 0; k + 1 < r.iterates.size(); ++k) {
    EXPECT_GE(sym_eig(r.iterates[k + 1] - r.iterates[k]).lambda.back(), -1e-10) << k;
  }
}

TEST(RationalFilter, RegularizedIterationKeepsFixedPoint) {
  const auto c = construct_sym({2.0, 1.0 + 1e-2, 1.0 - 1e-2, 0.5}, 41);
  RationalFilterConfig cfg;
  cfg.reg_mu = 1e-3;
  const RationalFilterResult r = rational_filter_psd({c.h, FactorSide::right}, 1.0, cfg);
  // Accuracy is capped by the non-commuting rounding modes, which grow by
  // about ½·0.49·(1/0.011 − 1/0.501) ≈ 22 per step here.
  EXPECT_LT(frobenius_norm(r.p - c.apply([](double l) { return std::min(l, 1.0); })), 1e-6);
  EXPECT_LT(r.max_condition, 1e4);
  for (std::size_t k = 1; k < r.steps.size(); ++k) {
    if (r.steps[k - 1] < 1e-3) {
      EXPECT_LT(r.steps[k], r.steps[k - 1]);
    }
  }
}

TEST(RationalFilter, RegularizationBoundsErrorOnThreshold) {
  const auto c = construct_sym({2.0, 1.0, 0.5}, 44);
  RationalFilterConfig cfg;
  cfg.reg_mu = 1e-4;
  const RationalFilterResult r = rational_filter_psd({c.h, FactorSide::right}, 1.0, cfg);
  EXPECT_LE(frobenius_norm(r.p - c.apply([](double l) { return std::min(l, 1.0); })),
            10 * cfg.reg_mu);
  EXPECT_LE(r.max_condition, 10.0 / cfg.reg_mu);
}

TEST(RationalFilter, EigenvalueOnThresholdEntersLinearMode) {
  const auto c = construct_sym({2.0, 1.0, 0.5}, 42);
  const RationalFilterResult r = rational_filter_psd({c.h, FactorSide::right}, 1.0);
  EXPECT_TRUE(r.linear_mode);
  EXPECT_FALSE(r.converged);
  // Components away from τ are exact; the one on τ is still halving its error.
  const SymEig e = sym_eig(r.p);
  EXPECT_NEAR(e.lambda[2], 0.5, 1e-10);
  EXPECT_NEAR(e.lambda[0], 1.0, 1e-3);
  EXPECT_NEAR(e.lambda[1], 1.0, 1e-3);
  EXPECT_LE(e.lambda[0], 1.0 + 1e-10);
}

TEST(RationalFilter, ConditionCapThrowsWithoutRegularization) {
  const auto c = construct_sym({3.0, 0.1}, 43);
  RationalFilterConfig cfg;
  cfg.cond_cap = 2.0;
  EXPECT_THROW(rational_filter_psd({c.h, FactorSide::right}, 1.0, cfg), ConvergenceError);
  cfg.reg_mu = -0.1;
  EXPECT_THROW(rational_filter_psd({c.h, FactorSide::right}, 1.0, cfg), std::invalid_argument);
}

TEST(RationalFilter, FullClipMatchesOracle) {
  std::uint64_t seed = 50;
  for (const Shape& sh : kShapes) {
    const std::size_t r = std::min(sh.rows, sh.cols);
    const auto c =
        construct(sh.rows, sh.cols, uniform_values(r, 0.2, 3.0, seed, 1.0, 0.1), seed + 1);
    const ClipResult x = mclip_rational(c.m, 1.0);
    EXPECT_LT(rel_diff(x.x, c.clipped(1.0)), 1e-7) << sh.rows << "x" << sh.cols;
    seed += 2;
  }
}

TEST(GTau, ScalarAndMatrixForms) {
  EXPECT_EQ(g_tau(0.5, 1.0), 1.0);
  EXPECT_EQ(g_tau(4.0, 2.0), 0.5);
  const auto c = construct(12, 7, {3.0, 2.0, 0.9, 0.4}, 60);
  const auto f = symmetric_factor_from_polar(c.m, c.polar(), FactorSide::right);
  const DenseMatrix p = matmul_nt(scale_cols(c.v, std::vector<double>{1.0, 1.0, 0.9, 0.4}), c.v);
  for (GTauMode mode : {GTauMode::spectral, GTauMode::polar_product}) {
    EXPECT_LT(rel_diff(g_tau_apply(c.m, f, p, 1.0, mode).x, c.clipped(1.0)), 1e-10);
  }
}

// ---- low rank ----

TEST(LowRank, MatchesOracleForFewViolators) {
  std::uint64_t seed = 70;
  for (const Shape& sh : {Shape{40, 30}, Shape{25, 60}, Shape{64, 64}}) {
    const std::size_t r = std::min(sh.rows, sh.cols);
    std::vector<double> s = uniform_values(r, 0.1, 0.9, seed);
    s[0] = 3.0;
    s[1] = 1.5;
    const auto c = construct(sh.rows, sh.cols, s, seed + 1);
    const ClipResult x = mclip_lowrank(c.m, 1.0);
    EXPECT_EQ(x.diagnostics.at("k_over"), 2.0);
    const double err = frobenius_norm(x.x - c.clipped(1.0));
    EXPECT_LT(err / frobenius_norm(c.clipped(1.0)), 1e-9);
    EXPECT_LE(err, x.diagnostics.at("residual_bound") + 1e-12);
    EXPECT_NEAR(x.diagnostics.at("sigma_next"), s[2], 1e-8);
    seed += 2;
  }
}

TEST(LowRank, GrowsBudgetAndGivesUpWhenDense) {
  std::vector<double> s(40);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = i < 9 ? 2.0 + 0.1 * i : 0.5;
  std::sort(s.begin(), s.end(), std::greater<>());
  const auto c = construct(50, 40, s, 80);
  const ClipResult x = mclip_lowrank(c.m, 1.0);
  EXPECT_GE(x.diagnostics.at("budget"), 9.0);
  EXPECT_LT(rel_diff(x.x, c.clipped(1.0)), 1e-9);

  const auto dense = construct(20, 20, uniform_values(20, 1.5, 3.0, 81), 82);
  EXPECT_THROW(mclip_lowrank(dense.m, 1.0), ConvergenceError);
}

TEST(LowRank, RangeFinderValidation) {
  Rng rng(90);
  const DenseMatrix m = gaussian_matrix(10, 6, rng);
  EXPECT_THROW(randomized_range(m, 4, 1, 4, 1), std::invalid_argument);
  EXPECT_THROW(randomized_range(m, 0, 1, 0, 1), std::invalid_argument);
  const SubspaceSketch sk = randomized_range(m, 3, 2, 1, 1);
  EXPECT_EQ(sk.q_basis.cols(), 4u);
  EXPECT_LT(max_abs(add_identity(-1.0 * matmul_tn(sk.q_basis, sk.q_basis), 1.0)), 1e-13);
}

TEST(LowRank, ZeroMatrixIsUnchanged) {
  EXPECT_EQ(mclip_lowrank(DenseMatrix(6, 5), 1.0).x, DenseMatrix(6, 5));
}
