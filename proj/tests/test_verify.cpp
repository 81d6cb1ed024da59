#include <gtest/gtest.h>

#include <cmath>

#include "logpot/verify.hpp"

using namespace logpot;

namespace {

const EquilibriumResult& semicircle_eq(std::size_t n) {
  static std::map<std::size_t, EquilibriumResult> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, solve_equilibrium(Potential::quadratic(), -3.0, 3.0, n)).first;
  return it->second;
}

TabulatedFunction bump(double amplitude) {
  return TabulatedFunction::sample(-6.0, 6.0, 2401, [=](double x) {
    return std::fabs(x) < 1.0 ? amplitude * std::exp(1.0 - 1.0 / (1.0 - x * x)) : 0.0;
  });
}

}  // namespace

TEST(FormatNumber, RoundTripsAndTokens) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(kInfinity), "inf");
  EXPECT_EQ(format_number(-kInfinity), "-inf");
  EXPECT_EQ(format_number(std::nan("")), "nan");
  const double x = 1.0 / 3.0;
  EXPECT_EQ(std::strtod(format_number(x).c_str(), nullptr), x);
}

TEST(T1Scan, FamilyHasTwentyDistinctMembers) {
  const auto fam = t1_family(-3.0, 3.0, 600);
  ASSERT_EQ(fam.size(), 20u);
  for (std::size_t i = 0; i < fam.size(); ++i)
    for (std::size_t j = i + 1; j < fam.size(); ++j) EXPECT_NE(fam[i].name, fam[j].name);
}

TEST(T1Scan, EquilibriumItselfIsSkipped) {
  const auto& eq = semicircle_eq(1200);
  const auto scan = t1_ratio_scan(Potential::quadratic(), eq, {{"self", eq.measure}});
  ASSERT_EQ(scan.records.size(), 1u);
  EXPECT_TRUE(scan.records[0].skipped);
  EXPECT_EQ(scan.sup_ratio, 0.0);
}

TEST(T1Scan, RatiosFiniteAndW2Companion) {
  const auto& eq = semicircle_eq(1200);
  const auto scan = t1_ratio_scan(Potential::quadratic(), eq, t1_family(-3.0, 3.0, 1200));
  for (const auto& r : scan.records) {
    EXPECT_FALSE(r.skipped) << r.name;
    EXPECT_TRUE(std::isfinite(r.ratio)) << r.name;
    EXPECT_GT(r.ratio, 0.0) << r.name;
    // convex case with kappa = 1
    EXPECT_LE(r.w2_sq, 2.0 * r.sigma * (1.0 + 1e-3) + 1e-6) << r.name;
  }
  EXPECT_GT(scan.sup_ratio, 0.0);
}

TEST(T1Scan, SupStableUnderGridDoubling) {
  const auto V = Potential::quadratic();
  const double a = t1_ratio_scan(V, semicircle_eq(1200), t1_family(-3.0, 3.0, 1200)).sup_ratio;
  const double b = t1_ratio_scan(V, semicircle_eq(2400), t1_family(-3.0, 3.0, 2400)).sup_ratio;
  EXPECT_LT(std::fabs(a - b) / b, 0.05);
}

TEST(T1Scan, ThreadCountDoesNotChangeRecords) {
  const auto& eq = semicircle_eq(1200);
  const auto fam = t1_family(-3.0, 3.0, 1200);
  const auto a = t1_ratio_scan(Potential::quadratic(), eq, fam, 1e-9, 1);
  const auto b = t1_ratio_scan(Potential::quadratic(), eq, fam, 1e-9, 3);
  for (std::size_t i = 0; i < fam.size(); ++i) EXPECT_EQ(a.records[i].ratio, b.records[i].ratio);
}

TEST(Perturbation, ConstantShiftLeavesMeasureUnchanged) {
  const auto f = TabulatedFunction::sample(-6.0, 6.0, 11, [](double) { return 0.7; });
  const auto rep = perturbation_check(Potential::quadratic(), f, 3.0, {0.1, 0.4}, 800);
  for (const auto& r : rep.records) {
    EXPECT_EQ(r.oscillation, 0.0);
    EXPECT_LT(r.w1, 1e-7);
  }
}

TEST(Perturbation, BumpRatiosBoundedAcrossScales) {
  const auto rep = perturbation_check(Potential::quadratic(), bump(0.2), 3.0);
  ASSERT_EQ(rep.records.size(), 4u);
  for (const auto& r : rep.records) {
    EXPECT_NEAR(r.oscillation, 0.2 * r.epsilon, 1e-12);
    EXPECT_GT(r.w1, 0.0);
  }
  EXPECT_LT(rep.max_ratio / rep.min_ratio, 3.0);
}

TEST(Perturbation, EscapingSupportIsReported) {
  EXPECT_THROW(perturbation_check(Potential::quadratic(), bump(0.2), 1.5), SupportTouchesWindow);
}

TEST(Truncation, CompactMeasureIsUnchanged) {
  const auto& eq = semicircle_eq(1200);
  const auto m = laws::semicircle(-8.0, 8.0, 1600, 0.5, 1.5);
  const auto rep = truncation_map(Potential::quadratic(), m, 4.0, eq);
  EXPECT_EQ(rep.alpha, 0.0);
  EXPECT_LT(w1(rep.truncated, m), 1e-12);
  EXPECT_NEAR(rep.sigma_after, rep.sigma_before, 1e-10);
}

TEST(Truncation, FarMassMovedInLowersEntropy) {
  const auto& eq = semicircle_eq(1200);
  const auto m = GridMeasure::from_cdf(-8.0, 8.0, 1600, [](double x) {
    return 0.9 * laws::semicircle_cdf(x) + 0.1 * laws::uniform_cdf(x, 5.0, 6.0);
  });
  const auto rep = truncation_map(Potential::quadratic(), m, 4.0, eq);
  EXPECT_NEAR(rep.alpha, 0.1, 1e-12);
  EXPECT_LT(rep.sigma_after, rep.sigma_before);
  EXPECT_LE(rep.w1, rep.transport_bound + 1e-12);
  EXPECT_GT(rep.gamma_hat, 0.0);
  // tail mass 0.1 with 1 + |x| averaging 6.5
  EXPECT_NEAR(rep.transport_bound, 0.65, 1e-9);
}

TEST(Truncation, RecipeRadiusExceedsTailLocation) {
  // the recipe radius for x^2/2 lies beyond the bulk and grows with gamma
  const auto V = Potential::quadratic();
  const double r0 = truncation_radius(V, 0.0);
  const double r1 = truncation_radius(V, 0.125);
  EXPECT_GT(r0, 2.0);
  EXPECT_GT(r1, r0);
}

TEST(Truncation, RejectsSmallRadius) {
  const auto& eq = semicircle_eq(1200);
  EXPECT_THROW(truncation_map(Potential::quadratic(), eq.measure, 1.0, eq), InvalidArgument);
}

TEST(EntropyGap, CombEntropyIsLogN) {
  const auto recs = entropy_gap_demo({2, 4, 16});
  for (const auto& r : recs) {
    EXPECT_NEAR(r.relative_entropy, std::log(static_cast<double>(r.n)), 1e-12);
    EXPECT_GT(r.sigma, 0.0);
  }
  EXPECT_THROW(entropy_gap_demo({1}), InvalidArgument);
}

TEST(EntropyGap, CombHasExactMass) {
  const auto nu = comb_measure(8);
  double total = 0.0;
  for (std::size_t i = 0; i < nu.size(); ++i) total += nu.mass(i);
  EXPECT_NEAR(total, 1.0, 1e-14);
  EXPECT_EQ(nu.size(), 64u);
}

TEST(Concentration, ZeroThetaHasFullTail) {
  ConcentrationConfig cfg;
  cfg.Ns = {4};
  cfg.thetas = {0.0};
  cfg.reps = 200;
  cfg.cells = 1200;
  const auto res = concentration_experiment(Potential::quadratic(), cfg);
  ASSERT_EQ(res.cells.size(), 1u);
  EXPECT_EQ(res.cells[0].tail.frequency, 1.0);
  EXPECT_FALSE(res.cells[0].fitted);
  EXPECT_EQ(res.sampler, "tridiagonal");
}

TEST(Concentration, ReproducibleAcrossThreadCounts) {
  ConcentrationConfig cfg;
  cfg.Ns = {6, 12};
  cfg.thetas = {0.15, 0.25};
  cfg.reps = 300;
  cfg.cells = 1200;
  const auto a = concentration_experiment(Potential::quadratic(), cfg);
  cfg.threads = 3;
  const auto b = concentration_experiment(Potential::quadratic(), cfg);
  ASSERT_EQ(a.cells.size(), b.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i) EXPECT_EQ(a.cells[i].tail.hits, b.cells[i].tail.hits);
  EXPECT_EQ(a.median_w1, b.median_w1);
}

TEST(Concentration, CompactVariantInclusion) {
  ConcentrationConfig cfg;
  cfg.Ns = {8, 16};
  cfg.thetas = {0.1, 0.2};
  cfg.reps = 500;
  cfg.cells = 1200;
  const auto V = Potential::quadratic();
  const auto full = concentration_experiment(V, cfg);
  const auto huge = concentration_compact_variant(V, cfg, 1e6);
  const auto tight = concentration_compact_variant(V, cfg, 2.2);
  for (std::size_t i = 0; i < full.cells.size(); ++i) {
    EXPECT_EQ(huge.cells[i].restricted.hits, full.cells[i].tail.hits);
    EXPECT_LE(tight.cells[i].restricted.hits, full.cells[i].tail.hits);
  }
  const auto c25 = concentration_compact_variant(V, cfg, 2.5);
  EXPECT_GT(c25.complement[0].frequency, c25.complement[1].frequency);
}

TEST(Concentration, MetropolisPathForGeneralPotential) {
  ConcentrationConfig cfg;
  cfg.Ns = {4};
  cfg.thetas = {0.3};
  cfg.reps = 64;
  cfg.cells = 1200;
  cfg.burn_in = 500;
  cfg.thinning = 5;
  const auto V = Potential::polynomial({0, 0, 0, 0, 1}, Growth{1.0, -1.0, 4.0});
  const auto res = concentration_experiment(V, cfg);
  EXPECT_EQ(res.sampler, "metropolis");
  EXPECT_EQ(res.cells[0].tail.total, 64u);
  // quartic limit of 2V/beta = V has support near +-1.07
  EXPECT_NEAR(support_of(res.limit.measure).back().hi, 1.0746, 0.01);
}

TEST(Concentration, ExponentFitOnSyntheticCells) {
  std::vector<ConcentrationCell> cells;
  for (std::size_t N : {4u, 8u})
    for (double th : {0.2, 0.3}) {
      ConcentrationCell c{N, th, {}, {}};
      c.tail.frequency = std::exp(-(0.5 * N * N * th * th + 0.1));
      c.fitted = true;
      cells.push_back(c);
    }
  const auto fit = fit_exponent(cells);
  EXPECT_EQ(fit.points, 4u);
  EXPECT_NEAR(fit.slope, 0.5, 1e-12);
  EXPECT_NEAR(fit.intercept, 0.1, 1e-12);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
}
