#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>

#include "../support/oracles.hpp"
#include "bmrf/error.hpp"
#include "bmrf/prior.hpp"

using namespace bmrf;

TEST(Stirling, Examples) {
  EXPECT_EQ(stirling2(3, 2), 3);
  EXPECT_EQ(stirling2(11, 1), 1);
  EXPECT_EQ(stirling2(11, 11), 1);
  EXPECT_EQ(stirling2(11, 5), 246730);
  EXPECT_EQ(bell(11), 678570);
  EXPECT_THROW(stirling2(3, 4), ValidationError);
  EXPECT_THROW(stirling2(3, 0), ValidationError);
}

TEST(Stirling, FormulasAgree) {
  for (int n = 1; n <= 20; ++n)
    for (int r = 1; r <= n; ++r) EXPECT_EQ(stirling2(n, r), stirling2_alternating(n, r)) << n << " " << r;
}

TEST(Stirling, LargeArguments) {
  // 3x3 template: 401 classes.
  const BigInt s = stirling2(401, 200);
  EXPECT_GT(s, 0);
  EXPECT_TRUE(std::isfinite(log_big(s)));
  EXPECT_NEAR(log_big(BigInt(1) << 2000), 2000 * std::log(2.0), 1e-9);
}

TEST(PartitionPriorType, GammaZeroIsUniformOverPartitions) {
  const PartitionPrior prior({0.0, 10.0, 11});
  EXPECT_NEAR(prior.prob_r(5), 0.36, 0.005);
  EXPECT_NEAR(prior.prob_r(1), 1.0 / 678570.0, 1e-15);
  EXPECT_NEAR(prior.prob_r(11), prior.prob_r(1), 1e-18);
  for (int r = 1; r <= 11; ++r) {
    EXPECT_NEAR(prior.prob_r(r), std::exp(log_big(stirling2(11, r)) - log_big(bell(11))), 1e-12);
    EXPECT_NEAR(prior.log_prob(r), -std::log(678570.0), 1e-12);
  }
}

TEST(PartitionPriorType, GammaOneIsUniformOverR) {
  const PartitionPrior prior({1.0, 10.0, 11});
  for (int r = 1; r <= 11; ++r) EXPECT_NEAR(prior.prob_r(r), 1.0 / 11.0, 1e-12);
  std::vector<int> all(11);
  for (int c = 0; c < 11; ++c) all[c] = c;
  EXPECT_NEAR(std::exp(log_prior_partition({all}, prior)), 0.09, 0.001);
}

TEST(PartitionPriorType, ProbabilitiesSumToOne) {
  for (double gamma : {0.0, 0.25, 0.5, 1.0})
    for (int K : {1, 3, 11, 45, 401}) {
      const PartitionPrior prior({gamma, 10.0, K});
      double total = 0.0;
      for (int r = 1; r <= K; ++r) total += prior.prob_r(r);
      EXPECT_NEAR(total, 1.0, 1e-9) << gamma << " " << K;
    }
}

TEST(PartitionPriorType, ExhaustiveSum) {
  for (double gamma : {0.0, 0.5, 1.0}) {
    const PartitionPrior prior({gamma, 10.0, 8});
    double total = 0.0;
    long count = 0;
    oracle::for_each_partition(8, [&](const auto& groups) {
      total += std::exp(log_prior_partition(groups, prior));
      ++count;
    });
    EXPECT_EQ(count, 4140);
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(PartitionPriorType, UnnormalisedDiffersByConstant) {
  const PartitionPrior prior({0.5, 10.0, 6});
  const double a = log_prior_partition({{0, 1}, {2, 3, 4, 5}}, prior) -
                   log_prior_partition_unnormalised({{0, 1}, {2, 3, 4, 5}}, prior);
  const double b = log_prior_partition({{0}, {1}, {2}, {3, 4, 5}}, prior) -
                   log_prior_partition_unnormalised({{0}, {1}, {2}, {3, 4, 5}}, prior);
  EXPECT_NEAR(a, b, 1e-12);
  EXPECT_NEAR(a, -prior.log_normaliser(), 1e-12);
  EXPECT_THROW(log_prior_partition({{0, 1}, {2}}, prior), ValidationError);
}

TEST(PriorConfigType, Validation) {
  EXPECT_THROW(PartitionPrior({1.5, 10.0, 11}), ValidationError);
  EXPECT_THROW(PartitionPrior({-0.1, 10.0, 11}), ValidationError);
  EXPECT_THROW(PartitionPrior({0.5, 0.0, 11}), ValidationError);
  EXPECT_THROW(PartitionPrior({0.5, 10.0, 0}), ValidationError);
}

TEST(ValuesPrior, Examples) {
  const PriorConfig cfg{0.5, 10.0, 11};
  const std::vector<double> zeros(4, 0.0);
  EXPECT_NEAR(log_prior_values(zeros, cfg), -4 * std::log(10.0 * std::sqrt(2 * std::numbers::pi)), 1e-12);
  const std::vector<double> v{1.0, -3.0, 2.0};
  const std::vector<double> w{2.0, -6.0, 4.0};
  EXPECT_LT(log_prior_values(w, cfg), log_prior_values(v, cfg));
  EXPECT_NEAR(log_prior_values(w, cfg) - log_prior_values(v, cfg), (56.0 - 14.0) / (-2.0 * 100.0), 1e-12);
  const std::vector<double> bad{1.0, 0.0};
  EXPECT_THROW(log_prior_values(bad, cfg), ValidationError);
  EXPECT_NEAR(log_values_constraint_normaliser(3, cfg), -0.5 * std::log(2 * std::numbers::pi * 300.0), 1e-12);
  EXPECT_NEAR(log_values_constraint_normaliser(1, cfg), log_prior_values(std::vector<double>{0.0}, cfg), 1e-12);
}

TEST(ValuesPrior, ConditionalDensityIntegratesToOne) {
  // r = 2: values (a, -a); the conditional density in a must integrate to 1.
  const PriorConfig cfg{0.5, 1.5, 5};
  double total = 0.0;
  const double h = 1e-3;
  for (double a = -12.0; a <= 12.0; a += h) {
    const std::vector<double> v{a, -a};
    total += std::exp(log_prior_values(v, cfg) - log_values_constraint_normaliser(2, cfg)) * h;
  }
  EXPECT_NEAR(total, 1.0, 1e-6);
}

TEST(ThetaPrior, Gaussian) {
  const std::vector<double> theta{0.0, 1.0};
  EXPECT_NEAR(log_prior_theta(theta, 2.0), -2 * std::log(2.0 * std::sqrt(2 * std::numbers::pi)) - 0.125, 1e-12);
  EXPECT_EQ(log_prior_theta({}, 2.0), 0.0);
}

TEST(SamplePrior, PartitionFrequenciesMatchPrior) {
  const PartitionPrior prior({0.5, 10.0, 4});
  Rng rng = stream(41, {1});
  std::map<std::vector<std::vector<int>>, double> counts;
  std::vector<std::vector<std::vector<int>>> all;
  oracle::for_each_partition(4, [&](const auto& g) { all.push_back(g); });
  const int draws = 30000;
  double var2 = 0.0;
  int n2 = 0;
  for (int d = 0; d < draws; ++d) {
    const auto z = sample_prior(prior, rng, 2, 3.0);
    counts[z.groups()] += 1.0;
    double sum = 0.0;
    for (double v : z.values()) sum += v;
    EXPECT_NEAR(sum, 0.0, 1e-12);
    EXPECT_EQ(z.theta().size(), 2u);
    if (z.r() == 2) {
      var2 += z.values()[0] * z.values()[0];
      ++n2;
    }
  }
  std::vector<double> obs;
  std::vector<double> probs;
  for (const auto& g : all) {
    obs.push_back(counts[g]);
    probs.push_back(std::exp(log_prior_partition(g, prior)));
  }
  EXPECT_GT(oracle::chi2_gof_p(obs, probs), 0.001);
  // With r = 2 the first value is (g1 - g2) / 2, variance sigma^2 / 2.
  var2 /= n2;
  EXPECT_NEAR(var2, 50.0, 50.0 * 4.0 * std::sqrt(2.0 / n2));
}
