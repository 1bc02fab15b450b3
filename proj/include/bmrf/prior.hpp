#pragma once

#include <span>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "bmrf/model.hpp"
#include "bmrf/rng.hpp"

namespace bmrf {

using BigInt = boost::multiprecision::cpp_int;

// Stirling number of the second kind: partitions of n items into r
// non-empty blocks. Two independent evaluations, used to cross-check.
BigInt stirling2(int n, int r);              // recurrence
BigInt stirling2_alternating(int n, int r);  // (1/r!) sum_i (-1)^(r-i) C(r,i) i^n
BigInt bell(int n);

// Natural log of a positive big integer.
double log_big(const BigInt& v);

struct PriorConfig {
  double gamma = 0.5;
  double sigma_phi = 10.0;
  int class_count = 0;

  void validate() const;
};

// Mixture p1^(1-gamma) p2^gamma over set partitions of the classes, where p1
// is uniform over all partitions and p2 makes the number of groups r
// uniform. Both depend on a partition only through r, so the normaliser is
// an exact finite sum over r.
class PartitionPrior {
 public:
  explicit PartitionPrior(PriorConfig cfg);

  const PriorConfig& config() const { return cfg_; }
  // Unnormalised log mass of any single partition with r groups.
  double log_mass(int r) const;
  double log_normaliser() const { return log_norm_; }
  // Normalised log probability of one partition with r groups.
  double log_prob(int r) const { return log_mass(r) - log_norm_; }
  // Induced probability that the partition has r groups.
  double prob_r(int r) const;
  // log S2(K, r), the number of partitions with r groups.
  double log_partitions(int r) const { return log_stirling_[r]; }

 private:
  PriorConfig cfg_;
  double log_bell_ = 0.0;
  std::vector<double> log_stirling_;  // index r
  double log_norm_ = 0.0;
};

double log_prior_partition(const std::vector<std::vector<int>>& groups, const PartitionPrior& prior);
double log_prior_partition_unnormalised(const std::vector<std::vector<int>>& groups, const PartitionPrior& prior);

// Sum of independent N(0, sigma_phi^2) log densities, evaluated on the
// sum-to-zero plane.
double log_prior_values(std::span<const double> values, const PriorConfig& cfg);

// log N(0; 0, r sigma_phi^2): the density of the sum of r independent
// N(0, sigma_phi^2) values at zero. Subtracting it from log_prior_values
// gives the conditional density of the first r-1 values given a zero sum,
// which is the measure the split/merge Jacobians are written in.
double log_values_constraint_normaliser(int r, const PriorConfig& cfg);

// Independent N(0, sd^2) prior on the covariate coefficients.
double log_prior_theta(std::span<const double> theta, double sd);

// Full log prior of a state: partition + conditional values + theta.
double log_prior(const PartitionState& z, const PartitionPrior& prior, double theta_sd);

// Direct draw from the prior: partition from p(r) then uniform among
// partitions with r groups, values g - mean(g) with g iid N(0, sigma_phi^2).
PartitionState sample_prior(const PartitionPrior& prior, Rng& rng, int theta_dim = 0, double theta_sd = 10.0);

}  // namespace bmrf
