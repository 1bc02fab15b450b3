#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bmrf/likelihood.hpp"
#include "bmrf/model.hpp"
#include "bmrf/prior.hpp"
#include "bmrf/rng.hpp"

namespace bmrf {

struct SamplerConfig {
  double sigma = 0.3;
  double covariate_step = 0.1;
  double covariate_prior_sd = 10.0;
  long iterations = 1000;
  long thinning = 1;
  std::uint64_t seed = 1;
  int tree_depth = 1;
  long checkpoint_every = 0;  // iterations; 0 disables
  // Drop the likelihood from every acceptance ratio (samples the prior).
  bool prior_only = false;

  void validate() const;
};

// Fixed order inside one iteration.
enum class Kernel { Value = 0, Move = 1, SplitMerge = 2, Covariate = 3 };
inline constexpr int kKernelCount = 4;

std::string to_string(Kernel k);

struct Proposal {
  enum class Direction { None, Split, Merge };

  PartitionState z;
  double log_q_ratio = 0.0;  // log q(z* -> z) - log q(z -> z*)
  double log_jacobian = 0.0;
  bool noop = false;  // nothing valid to propose; counts as a rejection
  Direction direction = Direction::None;
};

// Random-walk on one group value, keeping the sum at zero.
Proposal propose_value_walk(const PartitionState& z, Rng& rng, double sigma);
Proposal value_walk_with(const PartitionState& z, int group, double eps);

// Move one class between groups; groups are paired with probability
// proportional to exp(-(phi_i - phi_j)^2), the donor keeping at least one class.
Proposal propose_move(const PartitionState& z, Rng& rng);
Proposal move_with(const PartitionState& z, int from, int to, int cls);
// Row-major r x r selection probabilities of (from, to); empty when no pair
// is valid.
std::vector<double> move_pair_probs(const PartitionState& z);

// Split a class out into a new singleton group, or merge a singleton group
// into another group.
Proposal propose_split_merge(const PartitionState& z, Rng& rng, double sigma);
Proposal split_with(const PartitionState& z, int group, int cls, double eps, double sigma);
Proposal merge_with(const PartitionState& z, int from, int to, double sigma);
std::vector<double> merge_pair_probs(const PartitionState& z);
double split_probability(const PartitionState& z);

Proposal propose_covariate(const PartitionState& z, Rng& rng, double step);

// Everything an acceptance ratio needs besides the two states.
struct Target {
  const LikelihoodEngine* engine = nullptr;
  const BinaryImage* x = nullptr;
  const PartitionPrior* prior = nullptr;
  double theta_sd = 10.0;
  bool prior_only = false;

  double log_prior(const PartitionState& z) const;
};

// log of the MH acceptance ratio for moving from z to p.z; -inf for no-ops.
double log_acceptance(const PartitionState& z, const Proposal& p, const Target& target, Rng& engine_rng);

struct StepResult {
  bool accepted = false;
  double log_alpha = 0.0;
};

// Accept or reject p in place of z using a uniform drawn from rng.
StepResult mh_step(PartitionState& z, const Proposal& p, const Target& target, Rng& rng, Rng& engine_rng);

struct KernelCounters {
  std::array<long, kKernelCount> proposed{};
  std::array<long, kKernelCount> accepted{};

  double rate(Kernel k) const {
    const auto i = static_cast<std::size_t>(k);
    return proposed[i] ? static_cast<double>(accepted[i]) / static_cast<double>(proposed[i]) : 0.0;
  }
};

struct ChainRecord {
  long iteration = 0;
  PartitionState z;
  // This iteration's outcome per kernel: 1 accepted, 0 rejected, -1 not run.
  std::array<int, kKernelCount> accepted{-1, -1, -1, -1};
  KernelCounters counters;
  // log prior + the engine's log-likelihood surrogate.
  double log_post = 0.0;
};

struct ChainHooks {
  std::function<void(const ChainRecord&)> on_record;
  std::function<void(long iteration, const PartitionState&)> on_checkpoint;
};

struct ChainSummary {
  PartitionState final_state;
  KernelCounters counters;
  long records = 0;
  long likelihood_evaluations = 0;
};

// Kernels applied each iteration for this engine (covariate kernel only
// with covariates and a non-empty theta).
std::vector<Kernel> kernel_cycle(const LikelihoodEngine& engine, const PartitionState& init);

// Sequential chain. Kernel step t draws from counter streams keyed by
// (seed, t, 1), so run_chain_tree with depth 1 reproduces it exactly.
ChainSummary run_chain(const BinaryImage& x, const SamplerConfig& cfg, const LikelihoodEngine& engine,
                       const PartitionPrior& prior, const PartitionState& init, const ChainHooks& hooks = {});

// Parallel proposal tree: from the current state, proposals are generated
// for every node of a depth-d binary tree of accept/reject outcomes, all new
// candidate evaluations run concurrently, then the realised path is walked.
ChainSummary run_chain_tree(const BinaryImage& x, const SamplerConfig& cfg, const LikelihoodEngine& engine,
                            const PartitionPrior& prior, const PartitionState& init, const ChainHooks& hooks = {});

}  // namespace bmrf
