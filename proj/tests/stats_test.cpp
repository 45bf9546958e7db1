/*
 * Copyright 2026 The sampler-smith Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "sampler_smith/families.hpp"
#include "sampler_smith/stats.hpp"

namespace sampler_smith {
namespace {

// Survival function of chi-square with one degree of freedom, written
// independently of the incomplete gamma function.
double chi1_sf_oracle(double x) { return std::erfc(std::sqrt(x / 2.0)); }

TEST(SampleMoments, SymmetricTwoPoint) {
  auto m = sample_moments({-1.0, 1.0});
  ASSERT_TRUE(m);
  EXPECT_DOUBLE_EQ(m->mean, 0.0);
  EXPECT_DOUBLE_EQ(m->sd, 1.0);
  EXPECT_DOUBLE_EQ(m->skew, 0.0);
  EXPECT_DOUBLE_EQ(m->kurt, -2.0);
}

TEST(SampleMoments, ThreePoints) {
  // m2 = 2/3, m3 = 0, m4 = 2/3, so kurt = (2/3)/(4/9) - 3 = -1.5.
  auto m = sample_moments({1.0, 2.0, 3.0});
  ASSERT_TRUE(m);
  EXPECT_DOUBLE_EQ(m->mean, 2.0);
  EXPECT_NEAR(m->sd, std::sqrt(2.0 / 3.0), 1e-15);
  EXPECT_NEAR(m->skew, 0.0, 1e-15);
  EXPECT_NEAR(m->kurt, -1.5, 1e-14);
}

TEST(SampleMoments, DegenerateSample) {
  auto m = sample_moments({5.0, 5.0, 5.0});
  ASSERT_TRUE(m);
  EXPECT_EQ(*m, (MomentVector{5.0, 0.0, 0.0, 0.0}));
}

TEST(SampleMoments, NonFiniteIsInvalid) {
  EXPECT_FALSE(sample_moments({1.0, NAN}));
  EXPECT_FALSE(sample_moments({1.0, INFINITY}));
  EXPECT_THROW(sample_moments({1.0}), std::invalid_argument);
}

TEST(MomentKernel, ZeroResidual) {
  MomentVector t{0.3, 1.2, 0.1, -0.5};
  const double s = 0.25;
  EXPECT_NEAR(moment_log_kernel(t, t, {s, s, s, s}), 4.0 * std::log(1.0 / (s * std::sqrt(2.0 * M_PI))), 1e-12);
}

TEST(MomentKernel, ConstantZeroAgainstStandardNormal) {
  const double s = 0.001;
  const double oracle = 4.0 * std::log(1.0 / (s * std::sqrt(2.0 * M_PI))) - 1.0 / (2.0 * s * s);
  const double got = moment_log_kernel({0, 0, 0, 0}, {0, 1, 0, 0}, {s, s, s, s});
  EXPECT_NEAR(got, oracle, 1e-6);
  EXPECT_NEAR(got, -499976.04, 0.01);
}

TEST(MomentKernel, DoublingSigmaAtZeroResidual) {
  MomentVector t{1, 2, 3, 4};
  const double a = moment_log_kernel(t, t, {0.1, 0.1, 0.1, 0.1});
  const double b = moment_log_kernel(t, t, {0.2, 0.2, 0.2, 0.2});
  EXPECT_NEAR(a - b, 4.0 * std::log(2.0), 1e-12);
}

TEST(GStatistic, Examples) {
  EXPECT_DOUBLE_EQ(g_statistic({50, 50}, {0.5, 0.5}), 0.0);
  EXPECT_NEAR(g_statistic({60, 40}, {0.5, 0.5}), 2.0 * (60 * std::log(1.2) + 40 * std::log(0.8)), 1e-12);
  EXPECT_NEAR(g_statistic({60, 40}, {0.5, 0.5}), 4.0271, 1e-4);
  EXPECT_NEAR(g_statistic({0, 100}, {0.3, 0.7}), 200.0 * std::log(100.0 / 70.0), 1e-10);
  EXPECT_NEAR(g_statistic({0, 100}, {0.3, 0.7}), 71.335, 1e-3);
  EXPECT_EQ(g_statistic({1, 5}, {0.0, 1.0}), INFINITY);
}

TEST(GStatistic, DoublingCountsDoublesG) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<long> c(5);
    std::vector<double> p(5);
    double s = 0;
    for (int i = 0; i < 5; ++i) {
      c[i] = static_cast<long>(rng() % 50);
      p[i] = 1.0 + rng() % 10;
      s += p[i];
    }
    c[0] += 1;
    for (double& v : p) v /= s;
    std::vector<long> c2 = c;
    for (long& v : c2) v *= 2;
    EXPECT_NEAR(g_statistic(c2, p), 2.0 * g_statistic(c, p), 1e-9);
  }
}

TEST(ChiSquare, Examples) {
  for (int k = 1; k < 10; ++k) EXPECT_EQ(chi_square_sf(0.0, k), 1.0);
  EXPECT_NEAR(chi_square_sf(2.0, 2), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(chi_square_sf(3.841459, 1), chi1_sf_oracle(3.841459), 1e-12);
  EXPECT_NEAR(chi_square_sf(3.841459, 1), 0.05, 1e-7);
}

TEST(ChiSquare, MatchesClosedFormAtTwoDegreesAndIsMonotone) {
  double prev = 1.0;
  for (int i = 0; i < 100; ++i) {
    const double x = 0.3 * i;
    const double v = chi_square_sf(x, 2);
    EXPECT_NEAR(v, std::exp(-x / 2.0), 1e-10);
    EXPECT_LE(v, prev);
    prev = v;
    for (int k : {1, 3, 7}) EXPECT_GE(chi_square_sf(x, k), chi_square_sf(x + 0.1, k));
  }
}

std::vector<double> bernoulli_set(int ones, int zeros) {
  std::vector<double> xs(ones, 1.0);
  xs.insert(xs.end(), zeros, 0.0);
  return xs;
}

TEST(GTest, BernoulliExamples) {
  EXPECT_NEAR(g_test_p_value(bernoulli_set(50, 50), Family::kBernoulli, {0.5}), 1.0, 1e-15);
  const double p = g_test_p_value(bernoulli_set(60, 40), Family::kBernoulli, {0.5});
  EXPECT_NEAR(p, chi1_sf_oracle(2.0 * (60 * std::log(1.2) + 40 * std::log(0.8))), 1e-12);
  EXPECT_NEAR(p, 0.0448, 1e-4);
  auto off = bernoulli_set(50, 49);
  off.push_back(0.5);
  EXPECT_EQ(g_test_p_value(off, Family::kBernoulli, {0.5}), 0.0);
  EXPECT_EQ(g_test_p_value({2.0, 1.0}, Family::kBernoulli, {0.5}), 0.0);
  EXPECT_THROW(g_test_p_value({}, Family::kBernoulli, {0.5}), std::invalid_argument);
  // Within the rounding tolerance a value counts as its integer.
  EXPECT_NEAR(g_test_p_value({1.0 + 1e-12, 0.0}, Family::kBernoulli, {0.5}), 1.0, 1e-12);
}

TEST(GTest, DegenerateBernoulli) {
  EXPECT_EQ(g_test_p_value(bernoulli_set(10, 0), Family::kBernoulli, {1.0}), 1.0);
  EXPECT_EQ(g_test_p_value(bernoulli_set(9, 1), Family::kBernoulli, {1.0}), 0.0);
}

TEST(GTest, CountableBinTables) {
  for (double p : {0.1, 0.5, 0.9}) {
    BinTable t = bin_table(Family::kGeometric, {p});
    double s = 0;
    for (double v : t.probs) s += v;
    EXPECT_NEAR(s, 1.0, 1e-12);
    EXPECT_EQ(t.first, 1);
    EXPECT_LE(t.probs.back(), 1.0 - kBinQuantile + 1e-12);
    // The last individual value reaches the quantile and the one before does not.
    const double k = static_cast<double>(t.probs.size() - 1);
    EXPECT_GE(1.0 - std::pow(1.0 - p, k), kBinQuantile - 1e-12);
    EXPECT_LT(1.0 - std::pow(1.0 - p, k - 1), kBinQuantile);
  }
  BinTable t = bin_table(Family::kPoisson, {3.0});
  EXPECT_EQ(t.first, 0);
  EXPECT_NEAR(t.probs[0], std::exp(-3.0), 1e-15);
  EXPECT_NEAR(t.probs[2], std::exp(-3.0) * 4.5, 1e-15);
  EXPECT_THROW(bin_table(Family::kNormal, {0.0, 1.0}), std::invalid_argument);
}

TEST(GTest, GeometricAndPoissonSupport) {
  EXPECT_EQ(g_test_p_value({0.0, 1.0, 2.0}, Family::kGeometric, {0.5}), 0.0);
  EXPECT_GT(g_test_p_value({1.0, 1.0, 2.0, 3.0, 1.0, 40.0}, Family::kGeometric, {0.5}), 0.0);
  EXPECT_EQ(g_test_p_value({-1.0, 1.0}, Family::kPoisson, {1.0}), 0.0);
}

// Under the null the p-value is close to uniform. The G statistic is only
// asymptotically chi-square and the p-values of a discrete family come in
// atoms, so the check uses 3000 draws per sample set (at 100 draws the
// Kolmogorov distance is around 0.1).
TEST(GTest, PValuesRoughlyUniformUnderTheNull) {
  std::mt19937_64 rng(17);
  struct Case {
    Family f;
    std::vector<double> params;
  };
  for (const Case& c : {Case{Family::kBernoulli, {0.3}}, Case{Family::kGeometric, {0.5}}, Case{Family::kPoisson, {3.0}}}) {
    std::vector<double> ps;
    for (int set = 0; set < 1000; ++set) {
      std::vector<double> xs;
      for (int i = 0; i < 3000; ++i) {
        if (c.f == Family::kBernoulli) xs.push_back(std::bernoulli_distribution(c.params[0])(rng));
        if (c.f == Family::kGeometric) xs.push_back(1.0 + std::geometric_distribution<int>(c.params[0])(rng));
        if (c.f == Family::kPoisson) xs.push_back(std::poisson_distribution<int>(c.params[0])(rng));
      }
      ps.push_back(g_test_p_value(xs, c.f, c.params));
    }
    const double d = ks_distance(ps, [](double x) { return std::clamp(x, 0.0, 1.0); });
    EXPECT_LT(d, 0.06) << family_name(c.f);
  }
}

TEST(Families, AnalyticMomentExamples) {
  EXPECT_EQ(analytic_moments(Family::kBernoulli, {0.5}), (MomentVector{0.5, 0.5, 0.0, -2.0}));
  EXPECT_EQ(analytic_moments(Family::kNormal, {0.0, 1.0}), (MomentVector{0.0, 1.0, 0.0, 0.0}));
  const auto g = analytic_moments(Family::kGeometric, {0.5});
  EXPECT_DOUBLE_EQ(g.mean, 2.0);
  EXPECT_DOUBLE_EQ(g.sd, std::sqrt(2.0));
  EXPECT_THROW(analytic_moments(Family::kBernoulli, {1.5}), std::domain_error);
  EXPECT_THROW(analytic_moments(Family::kNormal, {0.0}), std::domain_error);
  EXPECT_THROW(analytic_moments(Family::kGamma, {-1.0}), std::domain_error);
}

// Closed forms against 10^6 draws from the standard library's samplers.
TEST(Families, AnalyticMomentsMatchSimulation) {
  std::mt19937_64 rng(123);
  const int n = 1000000;
  struct Case {
    Family f;
    std::vector<double> params;
  };
  for (const Case& c : {Case{Family::kBernoulli, {0.3}}, Case{Family::kGeometric, {0.5}},
                        Case{Family::kPoisson, {2.5}}, Case{Family::kNormal, {1.0, 2.0}},
                        Case{Family::kGamma, {1.7}}, Case{Family::kBeta, {2.0, 3.0}}}) {
    std::vector<double> xs(n);
    for (auto& x : xs) {
      switch (c.f) {
        case Family::kBernoulli: x = std::bernoulli_distribution(c.params[0])(rng); break;
        case Family::kGeometric: x = 1.0 + std::geometric_distribution<int>(c.params[0])(rng); break;
        case Family::kPoisson: x = std::poisson_distribution<int>(c.params[0])(rng); break;
        case Family::kNormal: x = std::normal_distribution<double>(c.params[0], c.params[1])(rng); break;
        case Family::kGamma: x = std::gamma_distribution<double>(c.params[0], 1.0)(rng); break;
        case Family::kBeta: {
          const double a = std::gamma_distribution<double>(c.params[0], 1.0)(rng);
          const double b = std::gamma_distribution<double>(c.params[1], 1.0)(rng);
          x = a / (a + b);
          break;
        }
      }
    }
    const auto got = *sample_moments(xs);
    const auto want = analytic_moments(c.f, c.params);
    const double se = want.sd / std::sqrt(n);
    EXPECT_NEAR(got.mean, want.mean, 5 * se) << family_name(c.f);
    EXPECT_NEAR(got.sd, want.sd, 0.01 * want.sd) << family_name(c.f);
    EXPECT_NEAR(got.skew, want.skew, 0.03 + 0.02 * std::abs(want.skew)) << family_name(c.f);
    EXPECT_NEAR(got.kurt, want.kurt, 0.1 + 0.05 * std::abs(want.kurt)) << family_name(c.f);
  }
}

TEST(Stats, KsDistanceOfExactQuantiles) {
  std::vector<double> xs;
  for (int i = 0; i < 1000; ++i) xs.push_back((i + 0.5) / 1000.0);
  EXPECT_NEAR(ks_distance(xs, [](double x) { return x; }), 0.0005, 1e-12);
  EXPECT_NEAR(normal_cdf(0.0), 0.5, 1e-15);
  EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-12);
}

}  // namespace
}  // namespace sampler_smith
