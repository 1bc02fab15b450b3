#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <tuple>

#include "../support/fixtures.hpp"
#include "bmrf/error.hpp"
#include "bmrf/sampler.hpp"

using namespace bmrf;

namespace {

double value_sum(const PartitionState& z) { return std::accumulate(z.values().begin(), z.values().end(), 0.0); }

// Random state that has at least one singleton group and one group with two
// or more classes, so both split and merge are available.
PartitionState mixed_state(int K, Rng& rng) {
  for (;;) {
    auto z = fixture::random_state(K, rng, K - 1);
    bool single = false;
    bool multi = false;
    for (const auto& g : z.groups()) {
      single = single || g.size() == 1;
      multi = multi || g.size() >= 2;
    }
    if (single && multi) return z;
  }
}

// (from, to, class) of the move that turns z into target, by trying them all.
std::tuple<int, int, int> find_move(const PartitionState& z, const PartitionState& target) {
  const auto probs = move_pair_probs(z);
  for (int c = 0; c < z.class_count(); ++c)
    for (int to = 0; to < z.r(); ++to) {
      const int from = z.group_of(c);
      if (probs.empty() || probs[from * z.r() + to] <= 0.0) continue;
      if (move_with(z, from, to, c).z == target) return {from, to, c};
    }
  return {-1, -1, -1};
}

// Move that undoes `forward` (applied to z), as a proposal from forward.z.
Proposal reverse_move(const PartitionState& z, const Proposal& forward) {
  const auto [from, to, cls] = find_move(z, forward.z);
  const auto& src = z.groups()[from];
  const int stays = src[0] == cls ? src[1] : src[0];
  return move_with(forward.z, forward.z.group_of(cls), forward.z.group_of(stays), cls);
}

struct ExactTarget {
  std::shared_ptr<const Geometry> geom = fixture::geometry(3, 4, "2x2");
  LikelihoodEngine engine{geom, EngineConfig{EngineKind::ExactBruteForce}};
  PartitionPrior prior{PriorConfig{0.5, 2.0, 11}};
  BinaryImage x;
  Target target;

  explicit ExactTarget(Rng& rng) : x(fixture::random_image(3, 4, rng)) {
    target.engine = &engine;
    target.x = &x;
    target.prior = &prior;
  }
};

}  // namespace

TEST(ValueWalk, Properties) {
  Rng rng = stream(51, {1});
  const auto z = fixture::random_state(11, rng, 6);
  EXPECT_EQ(value_walk_with(z, 0, 0.0).z, z);
  const auto single = PartitionState::single_group(11);
  EXPECT_EQ(value_walk_with(single, 0, 1.3).z, single);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = fixture::random_state(11, rng, 11, 3.0);
    const auto p = propose_value_walk(s, rng, 0.3);
    EXPECT_NEAR(value_sum(p.z), 0.0, 1e-12);
    EXPECT_EQ(p.log_q_ratio, 0.0);
    EXPECT_EQ(p.z.groups(), s.groups());
  }
}

TEST(Move, SingleGroupIsNoop) {
  Rng rng = stream(51, {2});
  EXPECT_TRUE(propose_move(PartitionState::single_group(11), rng).noop);
  EXPECT_TRUE(propose_move(PartitionState::full_split(5), rng).noop);
}

TEST(Move, EqualValuesGiveUniformPairs) {
  const PartitionState z(6, {{0, 1}, {2, 3, 4}, {5}}, {0.0, 0.0, 0.0});
  const auto probs = move_pair_probs(z);
  // Valid sources: groups 0 and 1, two targets each.
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(probs[i * 3 + j], (i != j && i < 2) ? 0.25 : 0.0, 1e-15);
}

TEST(Move, ReverseProbabilityConsistency) {
  Rng rng = stream(51, {3});
  for (int trial = 0; trial < 100; ++trial) {
    const auto z = fixture::random_state(11, rng, 6);
    const auto p = propose_move(z, rng);
    if (p.noop) continue;
    EXPECT_NEAR(value_sum(p.z), 0.0, 1e-12);
    const auto [from, to, cls] = find_move(z, p.z);
    ASSERT_GE(cls, 0);
    const double q_fwd = move_pair_probs(z)[from * z.r() + to] / z.groups()[from].size();
    const int to_star = p.z.group_of(cls);
    const int from_star = p.z.group_of(z.groups()[from][0] == cls ? z.groups()[from][1] : z.groups()[from][0]);
    const double q_rev = move_pair_probs(p.z)[to_star * p.z.r() + from_star] / p.z.groups()[to_star].size();
    EXPECT_NEAR(q_fwd * std::exp(p.log_q_ratio), q_rev, 1e-12);
    const auto back = move_with(p.z, to_star, from_star, cls);
    EXPECT_EQ(back.z, z);
    EXPECT_NEAR(back.log_q_ratio, -p.log_q_ratio, 1e-12);
  }
}

TEST(SplitMerge, ForcedDirections) {
  EXPECT_EQ(split_probability(PartitionState::full_split(5)), 0.0);
  EXPECT_EQ(split_probability(PartitionState::single_group(5)), 1.0);
  EXPECT_EQ(split_probability(PartitionState(5, {{0, 1}, {2, 3, 4}}, {0.5, -0.5})), 1.0);
  EXPECT_EQ(split_probability(PartitionState(5, {{0}, {1, 2, 3, 4}}, {0.5, -0.5})), 0.5);
  Rng rng = stream(51, {4});
  for (int trial = 0; trial < 20; ++trial) {
    EXPECT_EQ(propose_split_merge(PartitionState::full_split(5), rng, 0.3).direction, Proposal::Direction::Merge);
    EXPECT_EQ(propose_split_merge(PartitionState::single_group(5), rng, 0.3).direction, Proposal::Direction::Split);
  }
}

TEST(SplitMerge, Jacobians) {
  for (int r = 2; r <= 6; ++r) {
    std::vector<std::vector<int>> groups(r);
    for (int g = 0; g < r; ++g) groups[g] = {g};
    groups[0].push_back(r);  // r + 1 classes so group 0 can split
    const PartitionState z(r + 1, groups, std::vector<double>(r, 0.0));
    EXPECT_EQ(split_with(z, 0, r, 0.4, 0.3).log_jacobian, std::log(static_cast<double>(r) / (r + 1)));
    EXPECT_EQ(merge_with(z, 1, 0, 0.3).log_jacobian, std::log(static_cast<double>(r) / (r - 1)));
  }
  EXPECT_NEAR(std::exp(split_with(PartitionState(4, {{0, 3}, {1}, {2}}, {0, 0, 0}), 0, 3, 0.1, 0.3).log_jacobian), 0.75, 1e-15);
  EXPECT_NEAR(std::exp(merge_with(PartitionState(4, {{0, 3}, {1}, {2}}, {0, 0, 0}), 1, 2, 0.3).log_jacobian), 1.5, 1e-15);
}

TEST(SplitMerge, SplitThenMergeIsIdentity) {
  Rng rng = stream(51, {5});
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto z = fixture::random_state(11, rng, 10, 2.0);
    const auto p = propose_split_merge(z, rng, 0.3);
    EXPECT_NEAR(value_sum(p.z), 0.0, 1e-12);
    if (p.direction != Proposal::Direction::Split) continue;
    // The new group is a singleton split off a larger one. A two-class donor
    // leaves two singletons, so every candidate is tried and exactly the
    // true one must restore the original values.
    bool restored = false;
    for (const auto& g : p.z.groups()) {
      if (g.size() != 1 || z.groups()[z.group_of(g[0])].size() == 1) continue;
      const int cls = g[0];
      const auto& old_group = z.groups()[z.group_of(cls)];
      const int stays = old_group[0] == cls ? old_group[1] : old_group[0];
      const auto back = merge_with(p.z, p.z.group_of(cls), p.z.group_of(stays), 0.3);
      ASSERT_EQ(back.z.groups(), z.groups());
      bool same = true;
      for (int q = 0; q < z.r(); ++q) same = same && std::abs(back.z.values()[q] - z.values()[q]) < 1e-12;
      if (!same) continue;
      restored = true;
      EXPECT_NEAR(back.log_q_ratio, -p.log_q_ratio, 1e-12);
      EXPECT_NEAR(back.log_jacobian, -p.log_jacobian, 1e-15);
    }
    EXPECT_TRUE(restored);
    ++checked;
  }
  EXPECT_GT(checked, 50);
}

// For every kernel, the forward acceptance ratio must be the exact negative
// of the reverse one under the exact engine; this is detailed balance
// pi(z) q(z->z*) a(z,z*) = pi(z*) q(z*->z) a(z*,z) in log form.
TEST(Acceptance, DetailedBalanceOnFrozenPairs) {
  Rng rng = stream(51, {6});
  ExactTarget t(rng);
  Rng engine_rng = stream(51, {7});
  for (int trial = 0; trial < 40; ++trial) {
    const auto z = mixed_state(11, rng);
    // Split / merge.
    int group = -1;
    for (int g = 0; g < z.r(); ++g)
      if (z.groups()[g].size() >= 2) group = g;
    const int cls = z.groups()[group].back();
    const double eps = normal(rng, 0.3);
    const auto split = split_with(z, group, cls, eps, 0.3);
    const auto merge = merge_with(split.z, split.z.group_of(cls), split.z.group_of(z.groups()[group][0]), 0.3);
    const double a_fwd = log_acceptance(z, split, t.target, engine_rng);
    const double a_rev = log_acceptance(split.z, merge, t.target, engine_rng);
    EXPECT_NEAR(a_fwd, -a_rev, 1e-10);

    // Move.
    const auto mv = propose_move(z, rng);
    if (!mv.noop) {
      const auto back = reverse_move(z, mv);
      EXPECT_NEAR(log_acceptance(z, mv, t.target, engine_rng), -log_acceptance(mv.z, back, t.target, engine_rng), 1e-10);
    }

    // Value walk.
    const int g = static_cast<int>(uniform_index(rng, z.r()));
    const double e = normal(rng, 0.3);
    const auto vw = value_walk_with(z, g, e);
    const auto vb = value_walk_with(vw.z, g, -e);
    for (int q = 0; q < z.r(); ++q) EXPECT_NEAR(vb.z.values()[q], z.values()[q], 1e-12);
    EXPECT_NEAR(log_acceptance(z, vw, t.target, engine_rng), -log_acceptance(vw.z, vb, t.target, engine_rng), 1e-10);
  }
}

TEST(Acceptance, IdentityAndNoop) {
  Rng rng = stream(51, {8});
  ExactTarget t(rng);
  auto z = fixture::random_state(11, rng, 4);
  Proposal same;
  same.z = z;
  Rng r1 = stream(1, {1});
  Rng r2 = stream(1, {2});
  const auto res = mh_step(z, same, t.target, r1, r2);
  EXPECT_TRUE(res.accepted);
  EXPECT_EQ(res.log_alpha, 0.0);
  Proposal noop = same;
  noop.noop = true;
  EXPECT_FALSE(mh_step(z, noop, t.target, r1, r2).accepted);
}

TEST(Acceptance, InvariantUnderGroupRelabelling) {
  Rng rng = stream(51, {9});
  ExactTarget t(rng);
  const PartitionState a(11, {{0, 10}, {1, 2, 3, 6, 7, 8, 9}, {4, 5}}, {0.4, 0.0, -0.4});
  const PartitionState b(11, {{4, 5}, {0, 10}, {9, 8, 7, 6, 3, 2, 1}}, {-0.4, 0.4, 0.0});
  EXPECT_EQ(a, b);
  Proposal p;
  p.z = PartitionState::single_group(11);
  Rng e1 = stream(3, {1});
  Rng e2 = stream(3, {1});
  EXPECT_EQ(log_acceptance(a, p, t.target, e1), log_acceptance(b, p, t.target, e2));
}

TEST(Covariate, StepChangesOneCoordinate) {
  Rng rng = stream(51, {10});
  const auto z = fixture::random_state(11, rng, 3, 1.0, 3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = propose_covariate(z, rng, 0.1);
    ASSERT_EQ(p.z.theta().size(), 3u);
    int changed = 0;
    for (int k = 0; k < 3; ++k) changed += p.z.theta()[k] != z.theta()[k];
    EXPECT_EQ(changed, 1);
    EXPECT_EQ(p.z.groups(), z.groups());
    EXPECT_EQ(p.log_q_ratio, 0.0);
  }
  EXPECT_TRUE(propose_covariate(PartitionState::single_group(11), rng, 0.1).noop);
}

TEST(SamplerConfigType, Validation) {
  SamplerConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.sigma = 0.0;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = SamplerConfig{};
  cfg.tree_depth = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = SamplerConfig{};
  cfg.thinning = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(Chain, ZeroIterationsEchoesInit) {
  Rng rng = stream(51, {11});
  ExactTarget t(rng);
  SamplerConfig cfg;
  cfg.iterations = 0;
  const auto init = fixture::random_state(11, rng, 4);
  std::vector<ChainRecord> records;
  const auto s = run_chain(t.x, cfg, t.engine, t.prior, init, {[&](const ChainRecord& r) { records.push_back(r); }, {}});
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].z, init);
  EXPECT_EQ(records[0].iteration, 0);
  EXPECT_EQ(s.final_state, init);
}

TEST(Chain, RecordsThinningCheckpointsAndMonotoneCounters) {
  Rng rng = stream(51, {12});
  ExactTarget t(rng);
  SamplerConfig cfg;
  cfg.iterations = 100;
  cfg.thinning = 10;
  cfg.checkpoint_every = 25;
  std::vector<ChainRecord> records;
  std::vector<long> checkpoints;
  ChainHooks hooks{[&](const ChainRecord& r) { records.push_back(r); },
                   [&](long it, const PartitionState&) { checkpoints.push_back(it); }};
  const auto s = run_chain(t.x, cfg, t.engine, t.prior, PartitionState::single_group(11), hooks);
  ASSERT_EQ(records.size(), 11u);
  EXPECT_EQ(s.records, 11);
  EXPECT_EQ(checkpoints, (std::vector<long>{25, 50, 75, 100}));
  for (std::size_t i = 1; i < records.size(); ++i) {
    EXPECT_EQ(records[i].iteration, static_cast<long>(10 * i));
    for (int k = 0; k < kKernelCount; ++k) {
      EXPECT_GE(records[i].counters.proposed[k], records[i - 1].counters.proposed[k]);
      EXPECT_GE(records[i].counters.accepted[k], records[i - 1].counters.accepted[k]);
    }
    EXPECT_EQ(records[i].accepted[3], -1);
  }
  EXPECT_EQ(s.counters.proposed[0], 100);
  EXPECT_EQ(records.back().z, s.final_state);
}

TEST(Chain, TreeDepthOneMatchesSequential) {
  Rng rng = stream(51, {13});
  ExactTarget t(rng);
  SamplerConfig cfg;
  cfg.iterations = 200;
  cfg.seed = 77;
  std::vector<ChainRecord> a;
  std::vector<ChainRecord> b;
  run_chain(t.x, cfg, t.engine, t.prior, PartitionState::single_group(11), {[&](const ChainRecord& r) { a.push_back(r); }, {}});
  run_chain_tree(t.x, cfg, t.engine, t.prior, PartitionState::single_group(11),
                 {[&](const ChainRecord& r) { b.push_back(r); }, {}});
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].z, b[i].z);
    EXPECT_EQ(a[i].accepted, b[i].accepted);
    EXPECT_EQ(a[i].log_post, b[i].log_post);
  }
}

TEST(Chain, TreeIsDeterministic) {
  Rng rng = stream(51, {14});
  ExactTarget t(rng);
  SamplerConfig cfg;
  cfg.iterations = 60;
  cfg.tree_depth = 3;
  const auto s1 = run_chain_tree(t.x, cfg, t.engine, t.prior, PartitionState::single_group(11));
  const auto s2 = run_chain_tree(t.x, cfg, t.engine, t.prior, PartitionState::single_group(11));
  EXPECT_EQ(s1.final_state, s2.final_state);
  EXPECT_EQ(s1.counters.accepted, s2.counters.accepted);
}

TEST(Chain, PriorOnlyReproducesGroupCountDistribution) {
  const auto geom = fixture::geometry(4, 4, "1x2");
  const LikelihoodEngine engine(geom, EngineConfig{EngineKind::PseudoLikelihood});
  const PartitionPrior prior({0.5, 10.0, 3});
  BinaryImage x(4, 4, Boundary::Torus);
  SamplerConfig cfg;
  cfg.iterations = 60000;
  cfg.prior_only = true;
  cfg.sigma = 5.0;
  std::vector<int> rs;
  run_chain(x, cfg, engine, prior, PartitionState::single_group(3),
            {[&](const ChainRecord& r) { if (r.iteration > 0) rs.push_back(r.z.r()); }, {}});
  // Batch-means standard error per r.
  const int batches = 50;
  const std::size_t len = rs.size() / batches;
  for (int r = 1; r <= 3; ++r) {
    std::vector<double> means(batches, 0.0);
    for (int b = 0; b < batches; ++b) {
      for (std::size_t i = 0; i < len; ++i) means[b] += rs[b * len + i] == r;
      means[b] /= len;
    }
    const double mean = std::accumulate(means.begin(), means.end(), 0.0) / batches;
    double var = 0.0;
    for (double m : means) var += (m - mean) * (m - mean);
    const double se = std::sqrt(var / (batches - 1) / batches);
    EXPECT_NEAR(mean, prior.prob_r(r), 3.0 * se + 1e-3) << "r=" << r;
  }
}
