#include "bmrf/stats.hpp"

#include <algorithm>
#include <cmath>

#include "bmrf/error.hpp"

namespace bmrf {

std::string StatisticId::name() const {
  switch (kind) {
    case Kind::SumOnes: return "sum";
    case Kind::EqualVerticalPairs: return "vpairs";
    case Kind::EqualHorizontalPairs: return "hpairs";
    case Kind::PatternCount: return "pattern" + std::to_string(pattern);
  }
  return "?";
}

StatisticId parse_statistic(const std::string& s, const TemplateClique& tpl) {
  StatisticId id;
  if (s == "sum") return id;
  if (s == "vpairs") {
    id.kind = StatisticId::Kind::EqualVerticalPairs;
    return id;
  }
  if (s == "hpairs") {
    id.kind = StatisticId::Kind::EqualHorizontalPairs;
    return id;
  }
  const std::string prefix = "pattern:";
  if (s.rfind(prefix, 0) == 0) {
    id.kind = StatisticId::Kind::PatternCount;
    const std::string bits = s.substr(prefix.size());
    int i = 0;
    int j = 0;
    for (char ch : bits) {
      if (ch == '/') {
        ++i;
        j = 0;
        continue;
      }
      if (ch != '0' && ch != '1') throw ValidationError("pattern bitmap may only contain 0, 1 and '/'");
      const int b = tpl.bit_of({i, j});
      if (b < 0) throw ValidationError("pattern cell (" + std::to_string(i) + "," + std::to_string(j) + ") is outside the template");
      if (ch == '1') id.pattern |= 1u << b;
      ++j;
    }
    return id;
  }
  throw ValidationError("unknown statistic '" + s + "' (expected sum, vpairs, hpairs or pattern:<bitmap>)");
}

long statistic(const BinaryImage& x, const StatisticId& id, const Geometry& geom) {
  geom.check_image(x);
  const bool torus = x.boundary == Boundary::Torus;
  long count = 0;
  switch (id.kind) {
    case StatisticId::Kind::SumOnes:
      for (auto v : x.data) count += v;
      return count;
    case StatisticId::Kind::EqualVerticalPairs:
      for (int i = 0; i < x.n; ++i) {
        if (!torus && i + 1 >= x.n) break;
        const int below = (i + 1) % x.n;
        for (int j = 0; j < x.m; ++j) count += x.at(i, j) == x.at(below, j);
      }
      return count;
    case StatisticId::Kind::EqualHorizontalPairs:
      for (int i = 0; i < x.n; ++i)
        for (int j = 0; j < x.m; ++j) {
          if (!torus && j + 1 >= x.m) break;
          count += x.at(i, j) == x.at(i, (j + 1) % x.m);
        }
      return count;
    case StatisticId::Kind::PatternCount:
      for (int c = 0; c < geom.maximal_clique_count(); ++c) count += geom.clique_mask(x, c) == id.pattern;
      return count;
  }
  return count;
}

PairMatrix pair_matrix(const std::vector<PartitionState>& states) {
  if (states.empty()) throw ValidationError("pair_matrix needs at least one state");
  const int K = states.front().class_count();
  PairMatrix pm;
  pm.size = K;
  pm.p.assign(static_cast<std::size_t>(K) * K, 0.0);
  for (const auto& z : states) {
    if (z.class_count() != K) throw ValidationError("states come from different catalogs");
    for (int a = 0; a < K; ++a)
      for (int b = 0; b < K; ++b) pm.p[static_cast<std::size_t>(a) * K + b] += z.group_of(a) == z.group_of(b);
  }
  for (double& v : pm.p) v /= static_cast<double>(states.size());
  return pm;
}

std::vector<double> r_histogram(const std::vector<PartitionState>& states) {
  if (states.empty()) throw ValidationError("r_histogram needs at least one state");
  std::vector<double> h(states.front().class_count() + 1, 0.0);
  for (const auto& z : states) h[z.r()] += 1.0;
  for (double& v : h) v /= static_cast<double>(states.size());
  return h;
}

std::vector<std::pair<std::vector<std::vector<int>>, double>> partition_frequencies(
    const std::vector<PartitionState>& states) {
  std::map<std::vector<std::vector<int>>, long> counts;
  for (const auto& z : states) ++counts[z.groups()];
  std::vector<std::pair<std::vector<std::vector<int>>, double>> out;
  for (auto& [g, c] : counts) out.emplace_back(g, static_cast<double>(c) / static_cast<double>(states.size()));
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

namespace {

// Linear interpolation between order statistics.
double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.size() == 1) return sorted.front();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - w) + sorted[hi] * w;
}

}  // namespace

std::vector<BetaSummary> beta_posterior(const std::vector<PartitionState>& states, const ConversionTable& table) {
  if (states.empty()) throw ValidationError("beta_posterior needs at least one state");
  const int K = table.class_count();
  std::vector<std::vector<double>> samples(K);
  for (const auto& z : states) {
    const BetaVector beta = phi_to_beta(phi_of(z), table);
    for (int c = 0; c < K; ++c) samples[c].push_back(beta[c]);
  }
  std::vector<BetaSummary> out;
  for (int c = 0; c < K; ++c) {
    auto& s = samples[c];
    std::sort(s.begin(), s.end());
    BetaSummary b;
    b.cls = c;
    double sum = 0.0;
    for (double v : s) sum += v;
    b.mean = sum / static_cast<double>(s.size());
    b.lower = quantile(s, 0.025);
    b.median = quantile(s, 0.5);
    b.upper = quantile(s, 0.975);
    out.push_back(b);
  }
  return out;
}

std::map<std::string, std::vector<long>> posterior_predictive(const std::vector<PartitionState>& states,
                                                              const Geometry& geom, const CovariateField* cov,
                                                              const std::vector<StatisticId>& stats, int draws,
                                                              int sweeps, std::uint64_t seed, Exec exec) {
  std::map<std::string, std::vector<long>> out;
  for (const auto& s : stats) out[s.name()];
  if (draws <= 0) return out;
  for (std::size_t q = 0; q < states.size(); ++q)
    for (int d = 0; d < draws; ++d) {
      Rng rng = stream(seed, {q, static_cast<std::uint64_t>(d)});
      const BinaryImage x = gibbs_sample(states[q], geom, cov, sweeps, rng, nullptr, exec);
      for (const auto& s : stats) out[s.name()].push_back(statistic(x, s, geom));
    }
  return out;
}

}  // namespace bmrf
