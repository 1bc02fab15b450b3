#include "bmrf/sampler.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>

#include "bmrf/error.hpp"

namespace bmrf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_normal_density(double v, double sd) {
  return -0.5 * v * v / (sd * sd) - std::log(sd * std::sqrt(2.0 * std::numbers::pi));
}

// Normalised probabilities proportional to exp(-(phi_i - phi_j)^2) over the
// ordered pairs accepted by `valid`.
template <class Valid>
std::vector<double> pair_probs(const PartitionState& z, Valid valid) {
  const int r = z.r();
  const auto& v = z.values();
  std::vector<double> logw(static_cast<std::size_t>(r) * r, kNegInf);
  double mx = kNegInf;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      if (i != j && valid(i, j)) {
        const double d = v[i] - v[j];
        logw[i * r + j] = -d * d;
        mx = std::max(mx, -d * d);
      }
  if (mx == kNegInf) return {};
  std::vector<double> p(logw.size());
  double total = 0.0;
  for (std::size_t q = 0; q < p.size(); ++q) total += (p[q] = std::exp(logw[q] - mx));
  for (double& x : p) x /= total;
  return p;
}

std::pair<int, int> draw_pair(const std::vector<double>& probs, int r, Rng& rng) {
  double u = uniform01(rng);
  int last = -1;
  for (std::size_t q = 0; q < probs.size(); ++q) {
    if (probs[q] <= 0.0) continue;
    last = static_cast<int>(q);
    if (u < probs[q]) break;
    u -= probs[q];
  }
  return {last / r, last % r};
}

int group_with(const PartitionState& z, int cls) { return z.group_of(cls); }

int splittable_groups(const PartitionState& z) {
  int s2 = 0;
  for (const auto& g : z.groups()) s2 += g.size() >= 2;
  return s2;
}

bool has_singleton(const PartitionState& z) {
  for (const auto& g : z.groups())
    if (g.size() == 1) return true;
  return false;
}

double merge_direction_probability(const PartitionState& z) { return 1.0 - split_probability(z); }

Proposal noop_of(const PartitionState& z) {
  Proposal p;
  p.z = z;
  p.noop = true;
  return p;
}

}  // namespace

void SamplerConfig::validate() const {
  if (!(sigma > 0.0)) throw ValidationError("sampler.sigma must be positive");
  if (!(covariate_step > 0.0)) throw ValidationError("sampler.covariate_step must be positive");
  if (!(covariate_prior_sd > 0.0)) throw ValidationError("sampler.covariate_prior_sd must be positive");
  if (iterations < 0) throw ValidationError("sampler.iterations must be non-negative");
  if (thinning < 1) throw ValidationError("sampler.thinning must be at least 1");
  if (tree_depth < 1 || tree_depth > 12) throw ValidationError("sampler.tree_depth must lie in [1, 12]");
  if (checkpoint_every < 0) throw ValidationError("sampler.checkpoint_every must be non-negative");
}

std::string to_string(Kernel k) {
  switch (k) {
    case Kernel::Value: return "value";
    case Kernel::Move: return "move";
    case Kernel::SplitMerge: return "split_merge";
    case Kernel::Covariate: return "covariate";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Value walk

Proposal value_walk_with(const PartitionState& z, int group, double eps) {
  Proposal p;
  const int r = z.r();
  if (r == 1) {
    p.z = z;
    return p;
  }
  std::vector<double> v = z.values();
  const double shift = eps / r;
  for (int k = 0; k < r; ++k) v[k] -= shift;
  v[group] += eps;
  p.z = PartitionState(z.class_count(), z.groups(), std::move(v), z.theta());
  return p;
}

Proposal propose_value_walk(const PartitionState& z, Rng& rng, double sigma) {
  const int group = static_cast<int>(uniform_index(rng, z.r()));
  const double eps = normal(rng, sigma);
  return value_walk_with(z, group, eps);
}

// ---------------------------------------------------------------------------
// Move

std::vector<double> move_pair_probs(const PartitionState& z) {
  return pair_probs(z, [&](int i, int) { return z.groups()[i].size() >= 2; });
}

Proposal move_with(const PartitionState& z, int from, int to, int cls) {
  const auto probs = move_pair_probs(z);
  const int r = z.r();
  if (probs.empty() || probs[from * r + to] <= 0.0) throw ValidationError("invalid move pair");
  const auto& src = z.groups()[from];
  if (!std::binary_search(src.begin(), src.end(), cls)) throw ValidationError("class is not in the source group");

  auto groups = z.groups();
  std::erase(groups[from], cls);
  groups[to].push_back(cls);
  const int stays = groups[from].front();
  Proposal p;
  p.z = PartitionState(z.class_count(), std::move(groups), z.values(), z.theta());

  const int to_star = group_with(p.z, cls);
  const int from_star = group_with(p.z, stays);
  const auto rev = move_pair_probs(p.z);
  const double log_fwd = std::log(probs[from * r + to]) - std::log(static_cast<double>(src.size()));
  const double log_rev = std::log(rev[to_star * r + from_star]) -
                         std::log(static_cast<double>(p.z.groups()[to_star].size()));
  p.log_q_ratio = log_rev - log_fwd;
  return p;
}

Proposal propose_move(const PartitionState& z, Rng& rng) {
  const auto probs = move_pair_probs(z);
  if (probs.empty()) return noop_of(z);
  const auto [from, to] = draw_pair(probs, z.r(), rng);
  const auto& src = z.groups()[from];
  const int cls = src[uniform_index(rng, src.size())];
  return move_with(z, from, to, cls);
}

// ---------------------------------------------------------------------------
// Split / merge

double split_probability(const PartitionState& z) {
  if (z.r() == z.class_count()) return 0.0;
  if (!has_singleton(z)) return 1.0;
  return 0.5;
}

std::vector<double> merge_pair_probs(const PartitionState& z) {
  return pair_probs(z, [&](int i, int) { return z.groups()[i].size() == 1; });
}

Proposal split_with(const PartitionState& z, int group, int cls, double eps, double sigma) {
  const auto& donor = z.groups()[group];
  if (donor.size() < 2) throw ValidationError("cannot split a singleton group");
  if (!std::binary_search(donor.begin(), donor.end(), cls)) throw ValidationError("class is not in the split group");
  const int r = z.r();
  const double s = z.values()[group] + eps;

  auto groups = z.groups();
  auto values = z.values();
  std::erase(groups[group], cls);
  const int stays = groups[group].front();
  for (double& v : values) v -= s / (r + 1);
  groups.push_back({cls});
  values.push_back(s * r / (r + 1));

  Proposal p;
  p.direction = Proposal::Direction::Split;
  p.z = PartitionState(z.class_count(), std::move(groups), std::move(values), z.theta());

  const double log_fwd = std::log(split_probability(z)) - std::log(static_cast<double>(splittable_groups(z))) -
                         std::log(static_cast<double>(donor.size())) + log_normal_density(eps, sigma);
  const auto rev = merge_pair_probs(p.z);
  const int new_star = group_with(p.z, cls);
  const int donor_star = group_with(p.z, stays);
  const double log_rev = std::log(merge_direction_probability(p.z)) + std::log(rev[new_star * (r + 1) + donor_star]);
  p.log_q_ratio = log_rev - log_fwd;
  p.log_jacobian = std::log(static_cast<double>(r) / (r + 1));
  return p;
}

Proposal merge_with(const PartitionState& z, int from, int to, double sigma) {
  const int r = z.r();
  const auto probs = merge_pair_probs(z);
  if (probs.empty() || probs[from * r + to] <= 0.0) throw ValidationError("invalid merge pair");
  const double phi_i = z.values()[from];
  const double eps = phi_i - z.values()[to];
  const int cls = z.groups()[from].front();

  auto groups = z.groups();
  auto values = z.values();
  for (double& v : values) v += phi_i / (r - 1);
  groups[to].push_back(cls);
  groups.erase(groups.begin() + from);
  values.erase(values.begin() + from);

  Proposal p;
  p.direction = Proposal::Direction::Merge;
  p.z = PartitionState(z.class_count(), std::move(groups), std::move(values), z.theta());

  const double log_fwd = std::log(merge_direction_probability(z)) + std::log(probs[from * r + to]);
  const double log_rev = std::log(split_probability(p.z)) - std::log(static_cast<double>(splittable_groups(p.z))) -
                         std::log(static_cast<double>(p.z.groups()[group_with(p.z, cls)].size())) +
                         log_normal_density(eps, sigma);
  p.log_q_ratio = log_rev - log_fwd;
  p.log_jacobian = std::log(static_cast<double>(r) / (r - 1));
  return p;
}

Proposal propose_split_merge(const PartitionState& z, Rng& rng, double sigma) {
  const double ps = split_probability(z);
  const bool split = ps >= 1.0 || (ps > 0.0 && uniform01(rng) < ps);
  if (split) {
    std::vector<int> candidates;
    for (int g = 0; g < z.r(); ++g)
      if (z.groups()[g].size() >= 2) candidates.push_back(g);
    const int group = candidates[uniform_index(rng, candidates.size())];
    const auto& members = z.groups()[group];
    const int cls = members[uniform_index(rng, members.size())];
    const double eps = normal(rng, sigma);
    return split_with(z, group, cls, eps, sigma);
  }
  const auto probs = merge_pair_probs(z);
  const auto [from, to] = draw_pair(probs, z.r(), rng);
  return merge_with(z, from, to, sigma);
}

// ---------------------------------------------------------------------------
// Covariates

Proposal propose_covariate(const PartitionState& z, Rng& rng, double step) {
  if (z.theta().empty()) return noop_of(z);
  auto theta = z.theta();
  const auto k = uniform_index(rng, theta.size());
  theta[k] += normal(rng, step);
  Proposal p;
  p.z = z;
  p.z.set_theta(std::move(theta));
  return p;
}

// ---------------------------------------------------------------------------
// Acceptance

double Target::log_prior(const PartitionState& z) const { return bmrf::log_prior(z, *prior, theta_sd); }

double log_acceptance(const PartitionState& z, const Proposal& p, const Target& target, Rng& engine_rng) {
  if (p.noop) return kNegInf;
  if (p.z == z) return 0.0;
  const double llr = target.prior_only ? 0.0 : target.engine->log_lik_ratio(*target.x, p.z, z, engine_rng);
  const double lpr = target.log_prior(p.z) - target.log_prior(z);
  return llr + lpr + p.log_q_ratio + p.log_jacobian;
}

StepResult mh_step(PartitionState& z, const Proposal& p, const Target& target, Rng& rng, Rng& engine_rng) {
  StepResult res;
  res.log_alpha = log_acceptance(z, p, target, engine_rng);
  const double u = uniform01(rng);
  res.accepted = !p.noop && std::log(u) < res.log_alpha;
  if (res.accepted) z = p.z;
  return res;
}

// ---------------------------------------------------------------------------
// Chains

std::vector<Kernel> kernel_cycle(const LikelihoodEngine& engine, const PartitionState& init) {
  std::vector<Kernel> cycle{Kernel::Value, Kernel::Move, Kernel::SplitMerge};
  if (engine.covariates() && !init.theta().empty()) cycle.push_back(Kernel::Covariate);
  return cycle;
}

namespace {

Proposal propose(Kernel k, const PartitionState& z, Rng& rng, const SamplerConfig& cfg) {
  switch (k) {
    case Kernel::Value: return propose_value_walk(z, rng, cfg.sigma);
    case Kernel::Move: return propose_move(z, rng);
    case Kernel::SplitMerge: return propose_split_merge(z, rng, cfg.sigma);
    case Kernel::Covariate: return propose_covariate(z, rng, cfg.covariate_step);
  }
  return noop_of(z);
}

constexpr std::uint64_t kRootNode = 1;

// Bookkeeping shared by the sequential and tree drivers.
class ChainDriver {
 public:
  ChainDriver(const BinaryImage& x, const SamplerConfig& cfg, const LikelihoodEngine& engine,
              const PartitionPrior& prior, const PartitionState& init, const ChainHooks& hooks)
      : cfg_(cfg), engine_(engine), hooks_(hooks), cycle_(kernel_cycle(engine, init)) {
    cfg_.validate();
    engine.geometry().check_image(x);
    if (init.class_count() != engine.geometry().class_count())
      throw ValidationError("initial state does not match the catalog");
    if (engine.covariates() && !init.theta().empty() &&
        init.theta().size() != static_cast<std::size_t>(engine.covariates()->K))
      throw ValidationError("initial theta does not match the covariates");
    target_.engine = &engine;
    target_.x = &x;
    target_.prior = &prior;
    target_.theta_sd = cfg.covariate_prior_sd;
    target_.prior_only = cfg.prior_only;
    summary_.final_state = init;
    emit(0);
  }

  const Target& target() const { return target_; }
  const SamplerConfig& config() const { return cfg_; }
  long total_steps() const { return cfg_.iterations * static_cast<long>(cycle_.size()); }
  Kernel kernel_at(long t) const { return cycle_[static_cast<std::size_t>(t) % cycle_.size()]; }
  PartitionState& state() { return summary_.final_state; }

  // Record the outcome of kernel step t, already applied to state().
  void finish_step(long t, bool accepted, bool evaluated) {
    const auto k = static_cast<std::size_t>(kernel_at(t));
    ++summary_.counters.proposed[k];
    if (accepted) ++summary_.counters.accepted[k];
    if (evaluated && !cfg_.prior_only) ++summary_.likelihood_evaluations;
    flags_[k] = accepted ? 1 : 0;
    if ((t + 1) % static_cast<long>(cycle_.size()) == 0) {
      const long iter = (t + 1) / static_cast<long>(cycle_.size());
      if (iter % cfg_.thinning == 0) emit(iter);
      if (cfg_.checkpoint_every > 0 && iter % cfg_.checkpoint_every == 0 && hooks_.on_checkpoint)
        hooks_.on_checkpoint(iter, summary_.final_state);
      flags_ = {-1, -1, -1, -1};
    }
  }

  ChainSummary summary() const { return summary_; }

 private:
  void emit(long iter) {
    ++summary_.records;
    if (!hooks_.on_record) return;
    ChainRecord rec;
    rec.iteration = iter;
    rec.z = summary_.final_state;
    rec.accepted = flags_;
    rec.counters = summary_.counters;
    rec.log_post = target_.log_prior(rec.z);
    if (!cfg_.prior_only) rec.log_post += engine_.log_lik_surrogate(*target_.x, rec.z);
    hooks_.on_record(rec);
  }

  SamplerConfig cfg_;
  const LikelihoodEngine& engine_;
  const ChainHooks& hooks_;
  std::vector<Kernel> cycle_;
  Target target_;
  ChainSummary summary_;
  std::array<int, kKernelCount> flags_{-1, -1, -1, -1};
};

}  // namespace

ChainSummary run_chain(const BinaryImage& x, const SamplerConfig& cfg, const LikelihoodEngine& engine,
                       const PartitionPrior& prior, const PartitionState& init, const ChainHooks& hooks) {
  ChainDriver drv(x, cfg, engine, prior, init, hooks);
  for (long t = 0; t < drv.total_steps(); ++t) {
    Rng rng = stream(cfg.seed, {static_cast<std::uint64_t>(t), kRootNode});
    Rng engine_rng = stream(cfg.seed, {static_cast<std::uint64_t>(t), kRootNode, 1});
    const Proposal p = propose(drv.kernel_at(t), drv.state(), rng, cfg);
    const bool evaluated = !p.noop && !(p.z == drv.state());
    const StepResult res = mh_step(drv.state(), p, drv.target(), rng, engine_rng);
    drv.finish_step(t, res.accepted, evaluated);
  }
  return drv.summary();
}

ChainSummary run_chain_tree(const BinaryImage& x, const SamplerConfig& cfg, const LikelihoodEngine& engine,
                            const PartitionPrior& prior, const PartitionState& init, const ChainHooks& hooks) {
  ChainDriver drv(x, cfg, engine, prior, init, hooks);
  const long total = drv.total_steps();
  for (long t0 = 0; t0 < total; t0 += cfg.tree_depth) {
    const int levels = static_cast<int>(std::min<long>(cfg.tree_depth, total - t0));
    const std::size_t nodes = std::size_t{1} << levels;  // heap ids 1 .. nodes-1

    // Node p sits at level floor(log2 p); child 2p follows a rejection, 2p+1
    // an acceptance.
    std::vector<PartitionState> state(nodes);
    std::vector<Proposal> prop(nodes);
    std::vector<double> uniform(nodes, 0.0);
    std::vector<double> log_alpha(nodes, kNegInf);
    std::vector<char> failed(nodes, 0);
    state[1] = drv.state();
    for (std::size_t p = 1; p < nodes; ++p) {
      const long t = t0 + std::bit_width(p) - 1;
      Rng rng = stream(cfg.seed, {static_cast<std::uint64_t>(t), p});
      prop[p] = propose(drv.kernel_at(t), state[p], rng, cfg);
      uniform[p] = uniform01(rng);
      if (2 * p < nodes) {
        state[2 * p] = state[p];
        state[2 * p + 1] = prop[p].noop ? state[p] : prop[p].z;
      }
    }

    auto evaluate = [&](std::size_t p) {
      const long t = t0 + std::bit_width(p) - 1;
      Rng engine_rng = stream(cfg.seed, {static_cast<std::uint64_t>(t), p, 1});
      log_alpha[p] = log_acceptance(state[p], prop[p], drv.target(), engine_rng);
    };
    const auto count = static_cast<std::int64_t>(nodes);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t p = 1; p < count; ++p) {
      try {
        evaluate(static_cast<std::size_t>(p));
      } catch (...) {
        failed[p] = 1;
      }
    }
    // A failed concurrent evaluation is redone sequentially; if it fails
    // again the error surfaces.
    for (std::size_t p = 1; p < nodes; ++p)
      if (failed[p]) evaluate(p);

    std::size_t p = 1;
    for (int level = 0; level < levels; ++level) {
      const bool accepted = !prop[p].noop && std::log(uniform[p]) < log_alpha[p];
      if (accepted) drv.state() = prop[p].z;
      drv.finish_step(t0 + level, accepted, !prop[p].noop && !(prop[p].z == state[p]));
      p = 2 * p + (accepted ? 1 : 0);
    }
  }
  return drv.summary();
}

}  // namespace bmrf
