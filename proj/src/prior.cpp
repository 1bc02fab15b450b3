#include "bmrf/prior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "bmrf/error.hpp"

namespace bmrf {

namespace {

// S(n, 0..n) by the standard recurrence S(n,r) = S(n-1,r-1) + r S(n-1,r).
std::vector<BigInt> stirling_row(int n) {
  std::vector<BigInt> row{1};
  for (int i = 1; i <= n; ++i) {
    std::vector<BigInt> next(i + 1);
    next[0] = 0;
    for (int r = 1; r <= i; ++r) {
      next[r] = row[r - 1];
      if (r < i) next[r] += BigInt(r) * row[r];
    }
    row = std::move(next);
  }
  return row;
}

void check_domain(int n, int r) {
  if (n < 1 || r < 1 || r > n) throw ValidationError("stirling2 needs 1 <= r <= n");
}

double log_sum_exp(const std::vector<double>& v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

int checked_group_count(const std::vector<std::vector<int>>& groups, int class_count) {
  std::vector<char> seen(class_count, 0);
  for (const auto& g : groups) {
    if (g.empty()) throw ValidationError("partition contains an empty group");
    for (int c : g) {
      if (c < 0 || c >= class_count) throw ValidationError("class id out of range in partition");
      if (seen[c]) throw ValidationError("class appears in two groups");
      seen[c] = 1;
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) throw ValidationError("partition does not cover every class");
  return static_cast<int>(groups.size());
}

}  // namespace

BigInt stirling2(int n, int r) {
  check_domain(n, r);
  return stirling_row(n)[r];
}

BigInt stirling2_alternating(int n, int r) {
  check_domain(n, r);
  BigInt sum = 0;
  BigInt binom = 1;  // C(r, i)
  for (int i = 0; i <= r; ++i) {
    const BigInt term = binom * boost::multiprecision::pow(BigInt(i), static_cast<unsigned>(n));
    if ((r - i) % 2 == 0)
      sum += term;
    else
      sum -= term;
    binom = binom * (r - i) / (i + 1);
  }
  BigInt fact = 1;
  for (int i = 2; i <= r; ++i) fact *= i;
  return sum / fact;
}

BigInt bell(int n) {
  if (n < 0) throw ValidationError("bell needs n >= 0");
  const auto row = stirling_row(n);
  BigInt s = 0;
  for (const auto& v : row) s += v;
  return s;
}

double log_big(const BigInt& v) {
  if (v <= 0) throw ValidationError("log of a non-positive integer");
  const auto bits = boost::multiprecision::msb(v);
  if (bits < 900) return std::log(v.convert_to<double>());
  const auto shift = bits - 64;
  const BigInt top = v >> shift;
  return std::log(top.convert_to<double>()) + static_cast<double>(shift) * std::numbers::ln2;
}

void PriorConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ValidationError("prior.gamma must lie in [0, 1]");
  if (!(sigma_phi > 0.0) || !std::isfinite(sigma_phi)) throw ValidationError("prior.sigma_phi must be positive");
  if (class_count < 1) throw ValidationError("prior class count must be positive");
}

PartitionPrior::PartitionPrior(PriorConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  const int K = cfg_.class_count;
  const auto row = stirling_row(K);
  log_stirling_.assign(K + 1, -std::numeric_limits<double>::infinity());
  BigInt total = 0;
  for (int r = 1; r <= K; ++r) {
    log_stirling_[r] = log_big(row[r]);
    total += row[r];
  }
  log_bell_ = log_big(total);
  std::vector<double> terms;
  for (int r = 1; r <= K; ++r) terms.push_back(log_stirling_[r] + log_mass(r));
  log_norm_ = log_sum_exp(terms);
}

double PartitionPrior::log_mass(int r) const {
  if (r < 1 || r > cfg_.class_count) throw ValidationError("group count out of range");
  const double log_p1 = -log_bell_;
  const double log_p2 = -std::log(static_cast<double>(cfg_.class_count)) - log_stirling_[r];
  return (1.0 - cfg_.gamma) * log_p1 + cfg_.gamma * log_p2;
}

double PartitionPrior::prob_r(int r) const { return std::exp(log_stirling_[r] + log_prob(r)); }

double log_prior_partition(const std::vector<std::vector<int>>& groups, const PartitionPrior& prior) {
  return prior.log_prob(checked_group_count(groups, prior.config().class_count));
}

double log_prior_partition_unnormalised(const std::vector<std::vector<int>>& groups, const PartitionPrior& prior) {
  return prior.log_mass(checked_group_count(groups, prior.config().class_count));
}

double log_prior_values(std::span<const double> values, const PriorConfig& cfg) {
  if (values.empty()) throw ValidationError("no group values");
  const double sum = std::accumulate(values.begin(), values.end(), 0.0);
  if (std::abs(sum) > kSumToZeroTolerance) throw ValidationError("group values must sum to zero");
  const double s2 = cfg.sigma_phi * cfg.sigma_phi;
  double lp = 0.0;
  for (double v : values) lp += -0.5 * v * v / s2;
  return lp - static_cast<double>(values.size()) * std::log(cfg.sigma_phi * std::sqrt(2.0 * std::numbers::pi));
}

double log_values_constraint_normaliser(int r, const PriorConfig& cfg) {
  return -0.5 * std::log(2.0 * std::numbers::pi * r * cfg.sigma_phi * cfg.sigma_phi);
}

double log_prior_theta(std::span<const double> theta, double sd) {
  double lp = 0.0;
  for (double t : theta) lp += -0.5 * t * t / (sd * sd) - std::log(sd * std::sqrt(2.0 * std::numbers::pi));
  return lp;
}

double log_prior(const PartitionState& z, const PartitionPrior& prior, double theta_sd) {
  return log_prior_partition(z.groups(), prior) + log_prior_values(z.values(), prior.config()) -
         log_values_constraint_normaliser(z.r(), prior.config()) + log_prior_theta(z.theta(), theta_sd);
}

PartitionState sample_prior(const PartitionPrior& prior, Rng& rng, int theta_dim, double theta_sd) {
  const int K = prior.config().class_count;
  double u = uniform01(rng);
  int r = K;
  for (int q = 1; q < K; ++q) {
    const double p = prior.prob_r(q);
    if (u < p) {
      r = q;
      break;
    }
    u -= p;
  }

  // Uniform partition of {0..K-1} into r blocks, placing items from the last
  // one down: item n-1 opens its own block with probability
  // S(n-1, r-1) / S(n, r), otherwise joins one of the r blocks uniformly.
  std::vector<std::vector<double>> log_s(K + 1, std::vector<double>(K + 1, -std::numeric_limits<double>::infinity()));
  {
    std::vector<BigInt> row{1};
    log_s[0][0] = 0.0;
    for (int i = 1; i <= K; ++i) {
      std::vector<BigInt> next(i + 1);
      for (int q = 1; q <= i; ++q) {
        next[q] = row[q - 1];
        if (q < i) next[q] += BigInt(q) * row[q];
        log_s[i][q] = log_big(next[q]);
      }
      row = std::move(next);
    }
  }
  // Item n-1 opening a block takes label blocks-1, so the blocks among items
  // 0..n-2 are always labelled 0..blocks-1.
  int blocks = r;
  std::vector<int> assign(K);
  for (int n = K; n >= 1; --n) {
    const double p_new = std::exp(log_s[n - 1][blocks - 1] - log_s[n][blocks]);
    if (blocks >= 1 && uniform01(rng) < p_new) {
      assign[n - 1] = blocks - 1;
      --blocks;
    } else {
      assign[n - 1] = static_cast<int>(uniform_index(rng, blocks));
    }
  }
  std::vector<std::vector<int>> groups(r);
  for (int c = 0; c < K; ++c) groups[assign[c]].push_back(c);

  std::vector<double> g(r);
  for (double& v : g) v = normal(rng, prior.config().sigma_phi);
  const double mean = std::accumulate(g.begin(), g.end(), 0.0) / r;
  for (double& v : g) v -= mean;
  // Remove residual round-off so the sum is exactly representable as zero.
  double drift = std::accumulate(g.begin(), g.end(), 0.0);
  g.back() -= drift;

  std::vector<double> theta(theta_dim);
  for (double& t : theta) t = normal(rng, theta_sd);
  return PartitionState(K, std::move(groups), std::move(g), std::move(theta));
}

}  // namespace bmrf
