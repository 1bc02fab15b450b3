#pragma once

#include <map>
#include <string>
#include <vector>

#include "bmrf/likelihood.hpp"
#include "bmrf/model.hpp"
#include "bmrf/param.hpp"

namespace bmrf {

struct StatisticId {
  enum class Kind { SumOnes, EqualVerticalPairs, EqualHorizontalPairs, PatternCount };

  Kind kind = Kind::SumOnes;
  // PatternCount only: template-local on-mask of the exact configuration.
  std::uint32_t pattern = 0;

  std::string name() const;
};

// "sum", "vpairs", "hpairs" or "pattern:<bitmap>" such as "pattern:10/01".
StatisticId parse_statistic(const std::string& s, const TemplateClique& tpl);

// SumOnes counts ones; the pair statistics count equal-valued neighbour
// pairs (wrapping on a torus image); PatternCount counts maximal cliques
// whose exact configuration equals the pattern.
long statistic(const BinaryImage& x, const StatisticId& id, const Geometry& geom);

// Symmetric class-by-class matrix of the fraction of states in which two
// classes share a group.
struct PairMatrix {
  int size = 0;
  std::vector<double> p;  // row-major
  double at(int a, int b) const { return p[static_cast<std::size_t>(a) * size + b]; }
};

PairMatrix pair_matrix(const std::vector<PartitionState>& states);

// Fraction of states with r groups, index r (0 unused).
std::vector<double> r_histogram(const std::vector<PartitionState>& states);

// Most frequent partitions (ignoring values), most visited first.
std::vector<std::pair<std::vector<std::vector<int>>, double>> partition_frequencies(
    const std::vector<PartitionState>& states);

struct BetaSummary {
  int cls = 0;
  double mean = 0.0;
  double lower = 0.0;  // 2.5% quantile
  double median = 0.0;
  double upper = 0.0;  // 97.5% quantile
};

// Converts every state to beta with the torus table and summarises each
// class with a central 95% interval.
std::vector<BetaSummary> beta_posterior(const std::vector<PartitionState>& states, const ConversionTable& table);

// For each state, `draws` Gibbs simulations of x | z, evaluating every
// statistic. Result: statistic name -> samples in state order.
std::map<std::string, std::vector<long>> posterior_predictive(const std::vector<PartitionState>& states,
                                                              const Geometry& geom, const CovariateField* cov,
                                                              const std::vector<StatisticId>& stats, int draws,
                                                              int sweeps, std::uint64_t seed,
                                                              Exec exec = Exec::Serial);

}  // namespace bmrf
