#include "senf/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "senf/error.hpp"

namespace senf::stats {
namespace {

using V = std::vector<double>;

TEST(FractionalRanks, DistinctValues) {
  EXPECT_EQ(fractional_ranks(V{10, 20, 30}), (V{1, 2, 3}));
}

TEST(FractionalRanks, FullTie) { EXPECT_EQ(fractional_ranks(V{5, 5, 5}), (V{2, 2, 2})); }

TEST(FractionalRanks, TieBlock) {
  // 3 takes position 1; the two 7s share positions 2 and 3.
  EXPECT_EQ(fractional_ranks(V{7, 3, 7}), (V{2.5, 1, 2.5}));
}

TEST(FractionalRanks, EmptyIsAnError) {
  EXPECT_THROW(fractional_ranks(V{}), InvalidArgument);
}

TEST(FractionalRanks, RankSumIsConserved) {
  std::mt19937_64 gen(7);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 1 + static_cast<int>(gen() % 40);
    V v(n);
    for (auto& x : v) x = static_cast<double>(gen() % 6);
    auto r = fractional_ranks(v);
    EXPECT_DOUBLE_EQ(std::accumulate(r.begin(), r.end(), 0.0), n * (n + 1) / 2.0);
  }
}

TEST(A12, PairCountingExamples) {
  // 1 win (3 > 2) and 2 half ties (2 = 2, 3 = 3) over 9 pairs.
  EXPECT_DOUBLE_EQ(a12(V{1, 2, 3}, V{2, 3, 4}), 2.0 / 9.0);
  EXPECT_DOUBLE_EQ(a12(V{5, 5, 5}, V{5, 5, 5}), 0.5);
  EXPECT_DOUBLE_EQ(a12(V{10, 20}, V{1, 2}), 1.0);
}

TEST(A12, FractionMatchesPairCount) {
  auto f = a12_fraction(V{1, 2, 3}, V{2, 3, 4});
  EXPECT_EQ(f.numerator, 4u);
  EXPECT_EQ(f.denominator, 18u);
}

TEST(A12, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(a12(V{}, V{1}), InvalidArgument);
  EXPECT_THROW(a12(V{1}, V{NAN}), InvalidArgument);
}

TEST(MwuExact, FullSeparationOfThree) {
  // 20 assignments; only {1,2,3} and {4,5,6} are as extreme.
  auto p = mwu_p(V{1, 2, 3}, V{4, 5, 6}, MwuMode::exact);
  EXPECT_EQ(p.method, PMethod::exact);
  EXPECT_DOUBLE_EQ(p.value, 0.1);
  auto c = mwu_exact_count(V{1, 2, 3}, V{4, 5, 6});
  EXPECT_EQ(c.extreme, 2u);
  EXPECT_EQ(c.total, 20u);
}

TEST(MwuExact, IndistinguishableSamples) {
  EXPECT_DOUBLE_EQ(mwu_p(V{7, 7}, V{7, 7}, MwuMode::exact).value, 1.0);
  EXPECT_DOUBLE_EQ(mwu_p(V{7, 7}, V{7, 7}, MwuMode::approx).value, 1.0);
}

TEST(MwuExact, SingletonsOfEqualValue) {
  EXPECT_DOUBLE_EQ(mwu_p(V{3}, V{3}).value, 1.0);
  EXPECT_DOUBLE_EQ(mwu_p(V{3}, V{4}).value, 1.0);
}

TEST(MwuExact, MatchesPermutationOracleWithTies) {
  std::mt19937_64 gen(11);
  for (int rep = 0; rep < 300; ++rep) {
    const int m = 1 + static_cast<int>(gen() % 6), n = 1 + static_cast<int>(gen() % 6);
    V x(m), y(n);
    for (auto& v : x) v = static_cast<double>(gen() % 4);
    for (auto& v : y) v = static_cast<double>(gen() % 4);
    auto got = mwu_exact_count(x, y);
    auto want = oracle::mwu_permutation(x, y);
    ASSERT_EQ(got.extreme, want.extreme);
    ASSERT_EQ(got.total, want.total);
  }
}

TEST(MwuExact, LargestSupportedSizeDoesNotOverflow) {
  V x(33), y(33);
  for (int i = 0; i < 33; ++i) {
    x[i] = i;
    y[i] = 100 + i;
  }
  auto c = mwu_exact_count(x, y);
  EXPECT_EQ(c.total, oracle::choose(66, 33));
  EXPECT_EQ(c.extreme, 2u);
  x.push_back(1000);
  EXPECT_THROW(mwu_exact_count(x, y), InvalidArgument);
}

TEST(MwuApprox, FullSeparationAtThirtyIsTiny) {
  V fast(30), slow(30);
  for (int i = 0; i < 30; ++i) {
    fast[i] = 10 + i;
    slow[i] = 1000 + i;
  }
  auto p = mwu_p(fast, slow, MwuMode::approx);
  EXPECT_EQ(p.method, PMethod::normal_approx);
  // U = 0, mean 450, sd sqrt(900*61/12): z = 449.5/67.64 > 6.
  const double z = 449.5 / std::sqrt(900.0 * 61.0 / 12.0);
  EXPECT_GT(z, 6.0);
  EXPECT_LT(p.value, 1e-6);
  EXPECT_GT(p.value, 0.0);
}

TEST(MwuApprox, CloseToExactOnSmallSamples) {
  // Samples of 8 to 13. Largest gap on this grid is 0.023.
  std::mt19937_64 gen(3);
  double worst = 0.0;
  for (int rep = 0; rep < 500; ++rep) {
    const int m = 8 + static_cast<int>(gen() % 6), n = 8 + static_cast<int>(gen() % 6);
    V x(m), y(n);
    for (auto& v : x) v = static_cast<double>(gen() % 20);
    for (auto& v : y) v = static_cast<double>(gen() % 20) + 2.0;
    const double pe = mwu_p(x, y, MwuMode::exact).value;
    const double pa = mwu_p(x, y, MwuMode::approx).value;
    worst = std::max(worst, std::fabs(pe - pa));
  }
  EXPECT_LT(worst, 0.03);
}

TEST(MwuAuto, SwitchesAtTheSizeLimit) {
  V x(10, 1.0), y(10, 2.0);
  EXPECT_EQ(mwu_p(x, y, MwuMode::automatic, 20).method, PMethod::exact);
  x.push_back(1.0);
  EXPECT_EQ(mwu_p(x, y, MwuMode::automatic, 20).method, PMethod::normal_approx);
  EXPECT_THROW(mwu_p(x, y, MwuMode::automatic, 67), InvalidArgument);
}

TEST(MwuP, IsSymmetric) {
  std::mt19937_64 gen(5);
  for (int rep = 0; rep < 200; ++rep) {
    V x(1 + gen() % 12), y(1 + gen() % 12);
    for (auto& v : x) v = static_cast<double>(gen() % 8);
    for (auto& v : y) v = static_cast<double>(gen() % 8);
    EXPECT_EQ(mwu_p(x, y, MwuMode::exact).value, mwu_p(y, x, MwuMode::exact).value);
    EXPECT_EQ(mwu_p(x, y, MwuMode::approx).value, mwu_p(y, x, MwuMode::approx).value);
  }
}

TEST(Fisher, ExtremeSmallTable) {
  // Margins 3/3: each extreme table has probability 1/20.
  EXPECT_NEAR(fisher_exact_p({3, 0, 0, 3}).value, 0.1, 1e-15);
}

TEST(Fisher, IdenticalRows) { EXPECT_DOUBLE_EQ(fisher_exact_p({5, 5, 5, 5}).value, 1.0); }

TEST(Fisher, ExtremeThirtyTable) {
  const double want = 2.0 / static_cast<double>(oracle::choose(60, 30));
  EXPECT_NEAR(fisher_exact_p({30, 0, 0, 30}).value / want, 1.0, 1e-10);
  EXPECT_NEAR(want, 1.7e-17, 0.05e-17);
}

TEST(Fisher, RowSwapInvariance) {
  for (int a = 0; a <= 6; ++a)
    for (int b = 0; b <= 6; ++b)
      for (int c = 0; c <= 6; ++c)
        for (int d = 0; d <= 6; ++d) {
          if (a + b == 0 || c + d == 0) continue;
          EXPECT_NEAR(fisher_exact_p({a, b, c, d}).value, fisher_exact_p({c, d, a, b}).value,
                      1e-12);
        }
}

TEST(Fisher, RejectsEmptyRowsAndNegativeCells) {
  EXPECT_THROW(fisher_exact_p({0, 0, 1, 1}), InvalidArgument);
  EXPECT_THROW(fisher_exact_p({1, -1, 1, 1}), InvalidArgument);
}

TEST(OddsRatio, Examples) {
  EXPECT_DOUBLE_EQ(odds_ratio({2, 1, 1, 2}), 4.0);
  EXPECT_DOUBLE_EQ(odds_ratio({5, 5, 5, 5}), 1.0);
  // Zero cells: (3.5 * 3.5) / (0.5 * 0.5).
  EXPECT_DOUBLE_EQ(odds_ratio({3, 0, 0, 3}), 49.0);
}

TEST(OddsRatio, RowSwapGivesReciprocal) {
  for (int a = 1; a <= 5; ++a)
    for (int b = 1; b <= 5; ++b)
      for (int c = 1; c <= 5; ++c)
        for (int d = 1; d <= 5; ++d)
          EXPECT_NEAR(odds_ratio({c, d, a, b}), 1.0 / odds_ratio({a, b, c, d}), 1e-12);
}

TEST(OddsRatio, SignAgreesWithValue) {
  for (int a = 0; a <= 4; ++a)
    for (int b = 0; b <= 4; ++b)
      for (int c = 0; c <= 4; ++c)
        for (int d = 0; d <= 4; ++d) {
          if (a + b == 0 || c + d == 0) continue;
          const double r = odds_ratio({a, b, c, d});
          EXPECT_EQ(odds_ratio_sign({a, b, c, d}), (r > 1.0) - (r < 1.0));
        }
}

}  // namespace
}  // namespace senf::stats
