#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "detprod/alias_sampler.hpp"
#include "detprod/random.hpp"
#include "detprod/zipf.hpp"

namespace detprod {
namespace {

TEST(RankFrequencies, SortsDescendingWithTokenTies) {
  auto rc = rank_frequencies(std::map<std::string, int>{{"a", 5}, {"c", 2}, {"b", 2}});
  EXPECT_EQ(rc.counts, (std::vector<double>{5, 2, 2}));
  EXPECT_EQ(rank_frequencies(std::map<std::string, int>{{"x", 1}}).counts, std::vector<double>{1});
  EXPECT_THROW(rank_frequencies(std::map<std::string, int>{}), Error);
}

TEST(ZipfProbability, HandValues) {
  EXPECT_DOUBLE_EQ(zipf_probability(1, 1, 0.3), 1.0);
  EXPECT_DOUBLE_EQ(zipf_probability(1, 1, 2.5), 1.0);
  // 1 / (1 + 1/2 + 1/3)
  EXPECT_NEAR(zipf_probability(1, 3, 1.0), 6.0 / 11.0, 1e-15);
  EXPECT_NEAR(zipf_probability(3, 3, 1.0), 2.0 / 11.0, 1e-15);
  EXPECT_THROW(zipf_probability(0, 3, 1.0), Error);
  EXPECT_THROW(zipf_probability(4, 3, 1.0), Error);
  EXPECT_THROW(zipf_probability(1, 3, 0.0), Error);
}

TEST(ZipfProbability, NormalizedAndStrictlyDecreasing) {
  for (double a : {0.5, 1.0, 1.06, 2.0}) {
    ZipfDistribution z(100, a);
    double total = 0;
    for (std::size_t r = 1; r <= 100; ++r) {
      total += z(r);
      if (r > 1) {
        EXPECT_LT(z(r), z(r - 1));
      }
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(FitZipf, ExactPowerLaws) {
  for (double a : {1.0, 2.0, 0.7}) {
    RankedCounts rc;
    for (int r = 1; r <= 50; ++r) rc.counts.push_back(1000.0 / std::pow(r, a));
    auto fit = fit_zipf_shape(rc);
    EXPECT_NEAR(fit.a, a, 1e-9);
    EXPECT_NEAR(fit.r_squared, 1.0, 1e-9);
    EXPECT_EQ(fit.ranks, 50u);
  }
}

TEST(FitZipf, ScaleInvariant) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    RankedCounts rc;
    double c = 1e4;
    for (int r = 0; r < 30; ++r) {
      rc.counts.push_back(c);
      c *= 0.5 + 0.5 * std::uniform_real_distribution<double>(0, 1)(rng);
    }
    auto base = fit_zipf_shape(rc);
    RankedCounts scaled = rc;
    for (auto& x : scaled.counts) x *= 37.5;
    auto s = fit_zipf_shape(scaled);
    EXPECT_NEAR(s.a, base.a, 1e-10);
    EXPECT_NEAR(s.r_squared, base.r_squared, 1e-10);
  }
}

TEST(FitZipf, Errors) {
  EXPECT_THROW(fit_zipf_shape(RankedCounts{{5}}), Error);
  EXPECT_THROW(fit_zipf_shape(RankedCounts{{3, 3, 3}}), Error);
  EXPECT_THROW(fit_zipf_shape(RankedCounts{{3, 0}}), Error);
}

TEST(AliasSampler, MatchesTargetFrequencies) {
  std::vector<double> w{0.5, 0.25, 0.125, 0.125, 0.0};
  AliasSampler s(w);
  Rng rng(1);
  std::vector<double> hits(w.size());
  const int draws = 400000;
  for (int i = 0; i < draws; ++i) hits[s(rng)] += 1;
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(hits[i] / draws, w[i], 0.004);
  EXPECT_EQ(hits[4], 0.0);
  EXPECT_THROW(AliasSampler(std::vector<double>{}), Error);
  EXPECT_THROW(AliasSampler(std::vector<double>{0.0, 0.0}), Error);
}

}  // namespace
}  // namespace detprod
