#pragma once

#include <memory>
#include <string>

#include "bmrf/kernels.hpp"
#include "bmrf/model.hpp"
#include "bmrf/rng.hpp"

namespace bmrf {

enum class EngineKind { ExactBruteForce, ExactTransfer, Exchange, PseudoLikelihood };

std::string to_string(EngineKind k);
EngineKind parse_engine(const std::string& s);

// Where the exchange auxiliary chain starts.
enum class ExchangeStart { Data, Random };

std::string to_string(ExchangeStart s);
ExchangeStart parse_exchange_start(const std::string& s);

inline constexpr int kMaxBruteForceSites = kernels::kMaxEnumerationSites;
// Rows of the column transfer matrix; the dense 2^n x 2^n matrix limits this.
inline constexpr int kMaxTransferRows = 10;

// log sum_x exp(U(x)). With p(x) written as Z exp{U(x)}, this is -log Z.
struct LogZ {
  double value = 0.0;
};

LogZ log_z_brute(const PartitionState& z, const Geometry& geom, const CovariateField* cov = nullptr,
                 Exec exec = Exec::Serial);
LogZ log_z_transfer(const PartitionState& z, const Geometry& geom, Exec exec = Exec::Serial);
// Exact value from a precomputed density of states (no covariates).
LogZ log_z_table(const kernels::StateTable& table, const EnergyModel& em);

// Colour-ordered single-site Gibbs for the given number of sweeps, starting
// from `init` or, when null, from independent fair coin flips.
BinaryImage gibbs_sample(const PartitionState& z, const Geometry& geom, const CovariateField* cov, int sweeps,
                         Rng& rng, const BinaryImage* init = nullptr, Exec exec = Exec::Serial);

// Exact draw from p(x | z) using a density-of-states table.
BinaryImage exact_sample(const kernels::StateTable& table, const EnergyModel& em, Rng& rng);

double log_pseudo_likelihood(const BinaryImage& x, const EnergyModel& em);
double log_pseudo_likelihood(const BinaryImage& x, const PartitionState& z, const Geometry& geom,
                             const CovariateField* cov = nullptr);

struct EngineConfig {
  EngineKind kind = EngineKind::ExactBruteForce;
  int exchange_sweeps = 50;
  ExchangeStart exchange_start = ExchangeStart::Data;
  Exec exec = Exec::Serial;
};

class LikelihoodEngine {
 public:
  LikelihoodEngine(std::shared_ptr<const Geometry> geom, EngineConfig cfg,
                   std::shared_ptr<const CovariateField> cov = nullptr);

  const EngineConfig& config() const { return cfg_; }
  const Geometry& geometry() const { return *geom_; }
  const CovariateField* covariates() const { return cov_.get(); }
  bool exact() const { return cfg_.kind == EngineKind::ExactBruteForce || cfg_.kind == EngineKind::ExactTransfer; }
  const kernels::StateTable* state_table() const { return table_ ? table_.get() : nullptr; }

  // Exact engines only.
  double log_z(const PartitionState& z) const;
  // Exact engines: log p(x|z). Pseudo-likelihood: log PL. Exchange: U(x|z),
  // which is only meaningful up to the unknown normalising constant.
  double log_lik_surrogate(const BinaryImage& x, const PartitionState& z) const;

  // log p(x|z_new) - log p(x|z_old), or the engine's surrogate for it. The
  // exchange engine consumes `rng` for its auxiliary draw.
  double log_lik_ratio(const BinaryImage& x, const PartitionState& z_new, const PartitionState& z_old, Rng& rng) const;

  // Draw from p(x|z): exact when a state table exists, otherwise Gibbs with
  // the exchange sweep budget from a random start.
  BinaryImage sample(const PartitionState& z, Rng& rng) const;

 private:
  std::shared_ptr<const Geometry> geom_;
  EngineConfig cfg_;
  std::shared_ptr<const CovariateField> cov_;
  std::shared_ptr<const kernels::StateTable> table_;
};

double log_lik_ratio(const LikelihoodEngine& engine, const BinaryImage& x, const PartitionState& z_new,
                     const PartitionState& z_old, Rng& rng);

}  // namespace bmrf
