// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>

#include "test_util.h"
#include "wmeval/stats.h"

namespace wmeval::stats {
namespace {

TEST(SuccessRate, Basics) {
  EXPECT_EQ(SuccessRate({true, true, false, false}), 0.5);
  EXPECT_EQ(SuccessRate({true, true, true}), 1.0);
  std::vector<bool> nine(9, false);
  for (int i = 0; i < 7; ++i) nine[static_cast<std::size_t>(i)] = true;
  EXPECT_DOUBLE_EQ(SuccessRate(nine), 7.0 / 9.0);
  EXPECT_THROW(SuccessRate({}), std::invalid_argument);
}

TEST(SeedAveraged, Examples) {
  std::vector<OutcomeSet> all(10, OutcomeSet(6, true));
  EXPECT_EQ(SeedAveragedSuccessRate(all), 1.0);
  std::vector<OutcomeSet> mixed(10, OutcomeSet(6, false));
  mixed[0] = {true, true, true, false, false, false};
  EXPECT_NEAR(SeedAveragedSuccessRate(mixed), 0.05, 1e-15);
  std::vector<OutcomeSet> single = {{true, false}};
  EXPECT_EQ(SeedAveragedSuccessRate(single), 0.5);
}

TEST(MajorityVote, StrictRule) {
  EXPECT_TRUE(MajorityVote({true, true, true, true, false, false}));
  EXPECT_FALSE(MajorityVote({true, true, true, false, false, false}));
  EXPECT_TRUE(MajorityVote({true}));
}

TEST(Pearson, HandCases) {
  const std::vector<double> xs = {0, 1, 2, 3};
  std::vector<double> lin, neg;
  for (double x : xs) {
    lin.push_back(2 * x + 1);
    neg.push_back(-x);
  }
  EXPECT_NEAR(Pearson(xs, lin).r, 1.0, 1e-12);
  EXPECT_NEAR(Pearson(xs, neg).r, -1.0, 1e-12);
  const std::vector<double> ys = {0, 1, 1, 2};
  // cov = 3/2 (sums), sx^2 = 5, sy^2 = 2: r = 3 / sqrt(10)
  const Correlation c = Pearson(xs, ys);
  EXPECT_NEAR(c.r, 3.0 / std::sqrt(10.0), 1e-12);
  EXPECT_NEAR(c.r, 0.9487, 1e-4);
  // t = r sqrt(2 / (1 - r^2)) = 3 * sqrt(2) / 1 ... on 2 df the two-sided p is
  // 1 - t / sqrt(2 + t^2).
  const double t = c.r * std::sqrt(2.0 / (1.0 - c.r * c.r));
  EXPECT_NEAR(c.p_two_sided, 1.0 - t / std::sqrt(2.0 + t * t), 1e-9);
}

TEST(Pearson, Undefined) {
  const std::vector<double> xs = {1, 2, 3}, flat = {1, 1, 1};
  EXPECT_THROW(Pearson(xs, flat), UndefinedStatistic);
  const std::vector<double> two = {1, 2};
  EXPECT_THROW(Pearson(two, two), std::invalid_argument);
}

TEST(Pearson, RandomAgainstOracles) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g;
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 3 + rng() % 20;
    std::vector<double> x(n), y(n);
    for (std::size_t k = 0; k < n; ++k) {
      x[k] = g(rng);
      y[k] = 0.5 * x[k] + g(rng);
    }
    const Correlation c = Pearson(x, y);
    EXPECT_NEAR(c.r, wmtest::PearsonROracle(x, y), 1e-9);
    const double df = static_cast<double>(n - 2);
    const double t = c.r * std::sqrt(df / (1 - c.r * c.r));
    const boost::math::students_t dist(df);
    EXPECT_NEAR(c.p_two_sided, 2 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))), 1e-9);
  }
}

TEST(IncompleteBeta, MatchesBoost) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ab(0.1, 60), x(0, 1);
  for (int i = 0; i < 500; ++i) {
    const double a = ab(rng), b = ab(rng), v = x(rng);
    EXPECT_NEAR(RegularizedIncompleteBeta(a, b, v), boost::math::ibeta(a, b, v), 1e-10);
  }
  EXPECT_EQ(RegularizedIncompleteBeta(2, 3, 0), 0.0);
  EXPECT_EQ(RegularizedIncompleteBeta(2, 3, 1), 1.0);
}

TEST(Mmrv, Examples) {
  const std::vector<double> same = {0.2, 0.5, 0.9};
  EXPECT_EQ(Mmrv(same, same), 0.0);
  EXPECT_NEAR(Mmrv(std::vector<double>{0.9, 0.1}, std::vector<double>{0.2, 0.8}), 0.6, 1e-15);
  EXPECT_NEAR(Mmrv(std::vector<double>{0.5, 0.5}, std::vector<double>{0.3, 0.7}), 0.2, 1e-15);
  EXPECT_THROW(Mmrv(std::vector<double>{0.1, 0.2}, std::vector<double>{0.1}), std::invalid_argument);
}

TEST(Mmrv, BruteForceOracle) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 2 + rng() % 7;
    std::vector<double> sim(n), real(n);
    // Coarse rates so ties are common, as with real success rates.
    for (std::size_t k = 0; k < n; ++k) {
      sim[k] = static_cast<double>(rng() % 11) / 10.0;
      real[k] = static_cast<double>(rng() % 11) / 10.0;
    }
    EXPECT_DOUBLE_EQ(Mmrv(sim, real), wmtest::MmrvOracle(sim, real));
  }
}

TEST(Mmrv, RankConsistentIsZero) {
  std::mt19937_64 rng(10);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 2 + rng() % 7;
    std::vector<double> real(n), sim(n);
    for (std::size_t k = 0; k < n; ++k) {
      real[k] = static_cast<double>(rng() % 11) / 10.0;
      sim[k] = 0.3 * real[k] * real[k] + 0.1;  // strictly increasing map
    }
    EXPECT_EQ(Mmrv(sim, real), 0.0);
  }
}

TEST(Mbe, Examples) {
  const std::vector<double> same = {0.1, 0.5};
  const BiasEstimate zero = MeanBiasError(same, same);
  EXPECT_EQ(zero.mbe, 0.0);
  EXPECT_EQ(zero.ci_low, 0.0);
  EXPECT_EQ(zero.ci_high, 0.0);
  const BiasEstimate b = MeanBiasError(std::vector<double>{1.0, 0.8}, std::vector<double>{0.6, 0.6});
  EXPECT_NEAR(b.mbe, 0.3, 1e-15);
  // diffs 0.4, 0.2: sd = sqrt(0.02), half width 1.96 * 0.1
  EXPECT_NEAR(b.ci_low, 0.3 - 0.196, 1e-12);
  EXPECT_NEAR(b.ci_high, 0.3 + 0.196, 1e-12);
  const BiasEstimate one = MeanBiasError(std::vector<double>{0.7}, std::vector<double>{0.2});
  EXPECT_NEAR(one.mbe, 0.5, 1e-15);
  EXPECT_TRUE(std::isnan(one.ci_low));
  EXPECT_THROW(MeanBiasError(std::vector<double>{}, std::vector<double>{}), std::invalid_argument);
}

TEST(BlandAltman, Examples) {
  const std::vector<double> same = {0.3, 0.6};
  const LimitsOfAgreement z = BlandAltman(same, same);
  EXPECT_EQ(z.mean_diff, 0.0);
  EXPECT_EQ(z.low, 0.0);
  EXPECT_EQ(z.high, 0.0);
  const LimitsOfAgreement l = BlandAltman(std::vector<double>{0.6, 0.8}, std::vector<double>{0.5, 0.5});
  EXPECT_NEAR(l.mean_diff, 0.2, 1e-15);
  EXPECT_NEAR(l.sd, std::sqrt(0.02), 1e-15);
  EXPECT_NEAR(l.low, -0.0772, 1e-4);
  EXPECT_NEAR(l.high, 0.4772, 1e-4);
}

TEST(BlandAltman, WidthIdentity) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> a(5), b(5);
    for (int k = 0; k < 5; ++k) {
      a[static_cast<std::size_t>(k)] = u(rng);
      b[static_cast<std::size_t>(k)] = u(rng);
    }
    const LimitsOfAgreement l = BlandAltman(a, b);
    EXPECT_NEAR(l.high - l.low, 2 * 1.96 * l.sd, 1e-12);
  }
}

TEST(Icc, IdenticalColumns) {
  RatingMatrix m(4, 2, {0, 0, 1, 1, 0, 0, 1, 1});
  EXPECT_NEAR(Icc21(m), 1.0, 1e-15);
  RatingMatrix flat(3, 2, std::vector<double>(6, 1.0));
  EXPECT_EQ(Icc21(flat), 1.0);
}

TEST(Icc, FourByTwoHandMatrix) {
  // Rows 1..8 in pairs: rater two is always one higher.
  RatingMatrix m(4, 2, {1, 2, 3, 4, 5, 6, 7, 8});
  const double want = wmtest::IccOracle({{1, 2}, {3, 4}, {5, 6}, {7, 8}});
  EXPECT_NEAR(Icc21(m), want, 1e-12);
  // By hand: MSR = 40/3, MSC = 2, MSE = 0, so 40/3 / (40/3 + 2 * 2 / 4).
  EXPECT_NEAR(want, (40.0 / 3) / (40.0 / 3 + 1.0), 1e-12);
}

TEST(Icc, RandomAgainstAnova) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 10);
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 2 + rng() % 10, k = 2 + rng() % 4;
    std::vector<std::vector<double>> rows(n, std::vector<double>(k));
    std::vector<double> flat;
    for (auto& row : rows) {
      for (double& v : row) {
        v = u(rng);
        flat.push_back(v);
      }
    }
    EXPECT_NEAR(Icc21(RatingMatrix(n, k, flat)), wmtest::IccOracle(rows), 1e-9);
  }
}

TEST(Icc, BadShape) {
  EXPECT_ANY_THROW(RatingMatrix(2, 2, {1, 2, 3}));
  EXPECT_ANY_THROW(Icc21(RatingMatrix(1, 2, {1, 2})));
}

}  // namespace
}  // namespace wmeval::stats
