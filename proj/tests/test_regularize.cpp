#include <gtest/gtest.h>

#include <random>

#include "logpot/regularize.hpp"

using namespace logpot;

namespace {

EmpiricalMeasure random_config_with_ties(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> size(2, 40);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int N = size(rng);
  std::vector<double> p;
  for (int i = 0; i < N; ++i) {
    if (!p.empty() && u(rng) < 0.3)
      p.push_back(p[static_cast<std::size_t>(u(rng) * p.size())]);  // tie
    else if (!p.empty() && u(rng) < 0.2)
      p.push_back(p.back() + 1e-5 * u(rng));  // near tie
    else
      p.push_back(nd(rng));
  }
  return EmpiricalMeasure(p);
}

}  // namespace

TEST(Spread, WellSeparatedPointsAreUnchanged) {
  EmpiricalMeasure e({-1.0, 0.0, 0.5, 2.0});
  const auto r = spread_points(e);
  EXPECT_EQ(r.spread.points(), e.points());
}

TEST(Spread, TripleTie) {
  const auto r = spread_points(EmpiricalMeasure({0.0, 0.0, 0.0}));
  EXPECT_DOUBLE_EQ(r.spread.points()[0], 0.0);
  EXPECT_DOUBLE_EQ(r.spread.points()[1], 1.0 / 9.0);
  EXPECT_DOUBLE_EQ(r.spread.points()[2], 2.0 / 9.0);
}

TEST(Spread, InvariantSuite) {
  std::mt19937_64 rng(17);
  int with_ties = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto e = random_config_with_ties(rng);
    with_ties += e.has_ties();
    const auto r = spread_points(e);
    const double N = static_cast<double>(r.N);
    const auto& y = r.spread.points();
    for (std::size_t i = 1; i < y.size(); ++i) ASSERT_GE(y[i] - y[i - 1], 1.0 / (N * N));
    EXPECT_LE(w1(e, r.spread), 1.0 / (2.0 * N));
    EXPECT_LE(w1(r.spread, r.smoothed), 1.0 / (N * N * N));
    EXPECT_LE(w1(e, r.smoothed), 2.0 / N);
    EXPECT_TRUE(std::isfinite(j_functional(Potential::quadratic(), r.smoothed)));
  }
  EXPECT_GT(with_ties, 50);
}

TEST(Spread, EntropyMonotonicityDirection) {
  std::mt19937_64 rng(23);
  auto V = Potential::quadratic();
  for (int rep = 0; rep < 50; ++rep) {
    const auto e = random_config_with_ties(rng);
    const auto r = spread_points(e);
    const double lip = lipschitz_norm_on(V, e.min() - 1.0, r.spread.max() + 1.0);
    const double lhs = sigma_tilde_empirical(V, e, 0.75);
    const double rhs = sigma_tilde_empirical(V, r.spread, 0.75) - lip * 2.0 / static_cast<double>(r.N);
    EXPECT_GE(lhs, rhs);
  }
}

TEST(ApproxT1, QuantilesHold) {
  auto V = Potential::quadratic();
  auto eq = solve_equilibrium(V, -3.0, 3.0, 1200);
  for (std::size_t N : {16u, 64u}) {
    auto q = quantile_points(eq.measure, N);
    const auto r = approx_t1_check(V, q, eq, 2.1, 0.0, q.min(), q.max());
    EXPECT_TRUE(r.holds);
    EXPECT_GT(r.margin, 0.0);
  }
}

TEST(ApproxT1, TiesHoldTrivially) {
  auto V = Potential::quadratic();
  auto eq = solve_equilibrium(V, -3.0, 3.0, 600);
  const auto r = approx_t1_check(V, EmpiricalMeasure({1.0, 1.0, 1.0}), eq, 2.0, 0.0, 1.0, 1.0);
  EXPECT_TRUE(r.ties);
  EXPECT_TRUE(r.holds);
  EXPECT_THROW(approx_t1_check(V, EmpiricalMeasure({1.0, 3.0}), eq, 2.0, 0.0, 0.0, 2.0),
               InvalidArgument);
}

TEST(ApproxT1, RequiredConstantIsTheBreakEven) {
  auto V = Potential::quadratic();
  auto eq = solve_equilibrium(V, -3.0, 3.0, 1200);
  auto e = EmpiricalMeasure({-1.7, -0.9, -0.2, 0.4, 1.1, 1.8, 2.3});
  for (auto form : {ApproxT1Form::stated, ApproxT1Form::proof}) {
    const auto probe = approx_t1_check(V, e, eq, 2.1, 0.0, -3.0, 3.0, form);
    const double B = required_slack_constant(probe, 2.1);
    const auto at = approx_t1_check(V, e, eq, 2.1, B, -3.0, 3.0, form);
    EXPECT_NEAR(at.margin, 0.0, 1e-12);
    EXPECT_TRUE(approx_t1_check(V, e, eq, 2.1, B + 1e-6, -3.0, 3.0, form).holds);
    EXPECT_FALSE(approx_t1_check(V, e, eq, 2.1, B - 1e-6, -3.0, 3.0, form).holds);
  }
}
