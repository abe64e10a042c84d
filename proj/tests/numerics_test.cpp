#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <gtest/gtest.h>

#include "noisylabel/errors.hpp"
#include "noisylabel/numerics.hpp"

namespace nl = noisylabel;

TEST(Softmax, UniformForEqualLogits) {
  const auto p = nl::softmax(std::vector<double>{0, 0, 0, 0});
  for (double v : p) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Softmax, LargeLogitsDoNotOverflow) {
  const auto p = nl::softmax(std::vector<double>{1000, 0});
  EXPECT_NEAR(p[0], 1.0, 1e-12);
  EXPECT_NEAR(p[1], 0.0, 1e-12);
}

TEST(Softmax, MatchesLongDoubleEvaluation) {
  const std::vector<double> z{1, 2, 3};
  long double total = 0;
  for (double v : z) total += std::exp(static_cast<long double>(v));
  const auto p = nl::softmax(z);
  for (std::size_t k = 0; k < z.size(); ++k) {
    EXPECT_NEAR(p[k], static_cast<double>(std::exp(static_cast<long double>(z[k])) / total), 1e-12);
  }
  EXPECT_NEAR(p[0], 0.09003, 1e-5);
  EXPECT_NEAR(p[1], 0.24473, 1e-5);
  EXPECT_NEAR(p[2], 0.66524, 1e-5);
}

TEST(Softmax, RejectsSingleLogit) { EXPECT_THROW(nl::softmax(std::vector<double>{1.0}), nl::InvalidInput); }

TEST(Softmax, RejectsNonFinite) {
  EXPECT_THROW(nl::softmax(std::vector<double>{0, NAN}), nl::InvalidInput);
  EXPECT_THROW(nl::softmax(std::vector<double>{INFINITY, 0}), nl::InvalidInput);
}

TEST(Softmax, PropertySumsToOneAndShiftInvariant) {
  nl::RngStream rng(3, 0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> z(2 + rng.below(9));
    for (double& v : z) v = rng.uniform(-50, 50);
    const auto p = nl::softmax(z);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    auto shifted = z;
    for (double& v : shifted) v += 17.5;
    const auto ps = nl::softmax(shifted);
    for (std::size_t k = 0; k < p.size(); ++k) EXPECT_NEAR(p[k], ps[k], 1e-12);
  }
}

TEST(Percentile, SingleElementAndExtremes) {
  EXPECT_EQ(nl::percentile(std::vector<double>{5.0}, 37.0), 5.0);
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  EXPECT_EQ(nl::percentile(v, 0), 1.0);
  EXPECT_EQ(nl::percentile(v, 100), 100.0);
}

TEST(Percentile, InterpolatesBetweenRanks) {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  std::reverse(v.begin(), v.end());
  // rank position 0.95 * 99 = 94.05 on the sorted values 1..100
  const double idx = 0.95 * 99;
  const double oracle = 95.0 + (idx - 94.0) * (96.0 - 95.0);
  EXPECT_NEAR(nl::percentile(v, 95), oracle, 1e-12);
  EXPECT_NEAR(nl::percentile(v, 95), 95.05, 1e-9);
}

TEST(Percentile, RejectsBadInput) {
  EXPECT_THROW(nl::percentile(std::vector<double>{}, 50), nl::InvalidInput);
  EXPECT_THROW(nl::percentile(std::vector<double>{1.0}, -1), nl::InvalidInput);
  EXPECT_THROW(nl::percentile(std::vector<double>{1.0}, 100.5), nl::InvalidInput);
}

TEST(Percentile, PropertyMonotoneInLevel) {
  nl::RngStream rng(9, 0);
  std::vector<double> v(37);
  for (double& x : v) x = rng.normal();
  double prev = -INFINITY;
  for (double l = 0; l <= 100; l += 2.5) {
    const double cur = nl::percentile(v, l);
    EXPECT_GE(cur, prev);
    prev = cur;
  }
}

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  nl::RngStream a(42, 1), b(42, 1), c(42, 2), d(43, 1);
  std::vector<std::uint64_t> xa, xb, xc, xd;
  for (int i = 0; i < 16; ++i) {
    xa.push_back(a.next_u64());
    xb.push_back(b.next_u64());
    xc.push_back(c.next_u64());
    xd.push_back(d.next_u64());
  }
  EXPECT_EQ(xa, xb);
  EXPECT_NE(xa, xc);
  EXPECT_NE(xa, xd);
  EXPECT_NE(nl::RngStream(1, 0).child(3).next_u64(), nl::RngStream(1, 0).child(4).next_u64());
}

TEST(Rng, BelowCoversRangeUniformly) {
  nl::RngStream rng(5, 0);
  std::vector<int> counts(7, 0);
  const int draws = 70000;
  for (int i = 0; i < draws; ++i) ++counts[rng.below(7)];
  for (int c : counts) EXPECT_NEAR(c, draws / 7.0, 5 * std::sqrt(draws / 7.0));
}

TEST(Rng, PermutationIsAPermutation) {
  nl::RngStream rng(8, 0);
  const auto perm = nl::random_permutation(50, rng);
  EXPECT_EQ(std::set<std::size_t>(perm.begin(), perm.end()).size(), 50u);
  EXPECT_EQ(*std::max_element(perm.begin(), perm.end()), 49u);
}

TEST(Rng, NormalMoments) {
  nl::RngStream rng(6, 0);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(SampleBeta, UniformCaseStaysInRangeWithMeanHalf) {
  nl::RngStream rng(1, 0);
  double sum = 0;
  for (int i = 0; i < 100000; ++i) {
    const double x = nl::sample_beta(1.0, rng);
    ASSERT_GE(x, 0.0);
    ASSERT_LE(x, 1.0);
    sum += x;
  }
  EXPECT_NEAR(sum / 100000, 0.5, 0.01);
}

TEST(SampleBeta, VarianceMatchesClosedForm) {
  const double alpha = 0.3;
  const double oracle = 1.0 / (4.0 * (2.0 * alpha + 1.0));
  nl::RngStream rng(2, 0);
  const int n = 1000000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double x = nl::sample_beta(alpha, rng);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  EXPECT_NEAR(sq / n - mean * mean, oracle, 0.002);
  EXPECT_NEAR(oracle, 0.15625, 1e-12);
}

TEST(SampleBeta, SmallAlphaPutsMassNearEndpoints) {
  const double alpha = 0.1;
  // P(X <= 0.1) + P(X >= 0.9) = 2 I_0.1(a, a) by symmetry.
  const double oracle = 2.0 * boost::math::ibeta(alpha, alpha, 0.1);
  nl::RngStream rng(4, 0);
  const int n = 1000000;
  int tails = 0;
  for (int i = 0; i < n; ++i) {
    const double x = nl::sample_beta(alpha, rng);
    if (x <= 0.1 || x >= 0.9) ++tails;
  }
  const double frac = static_cast<double>(tails) / n;
  EXPECT_GE(frac, 0.6);
  EXPECT_NEAR(frac, oracle, 0.003);
}

TEST(SampleBeta, RejectsNonPositiveAlpha) {
  nl::RngStream rng(1, 0);
  EXPECT_THROW(nl::sample_beta(0.0, rng), nl::InvalidInput);
  EXPECT_THROW(nl::sample_beta(-1.0, rng), nl::InvalidInput);
}

TEST(MeanCi, DegenerateCasesHaveZeroWidth) {
  auto r = nl::mean_ci(std::vector<double>{66.5, 66.5, 66.5});
  EXPECT_DOUBLE_EQ(r.mean, 66.5);
  EXPECT_EQ(r.half_width, 0.0);
  r = nl::mean_ci(std::vector<double>{12.25});
  EXPECT_DOUBLE_EQ(r.mean, 12.25);
  EXPECT_EQ(r.half_width, 0.0);
  EXPECT_THROW(nl::mean_ci(std::vector<double>{}), nl::InvalidInput);
}

TEST(MeanCi, TwoRunsMatchCauchyQuantile) {
  // With one degree of freedom the t distribution is Cauchy: quantile(p) = tan(pi (p - 1/2)).
  const double t = std::tan(std::numbers::pi * (0.975 - 0.5));
  const double s = std::sqrt(0.5);
  const double oracle = t * s / std::sqrt(2.0);
  const auto r = nl::mean_ci(std::vector<double>{66.0, 67.0});
  EXPECT_DOUBLE_EQ(r.mean, 66.5);
  EXPECT_NEAR(r.half_width, oracle, 1e-9);
  EXPECT_NEAR(r.half_width, 6.353, 1e-3);
}
