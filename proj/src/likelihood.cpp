#include "bmrf/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bmrf/error.hpp"

namespace bmrf {

std::string to_string(EngineKind k) {
  switch (k) {
    case EngineKind::ExactBruteForce: return "brute";
    case EngineKind::ExactTransfer: return "transfer";
    case EngineKind::Exchange: return "exchange";
    case EngineKind::PseudoLikelihood: return "pseudo";
  }
  return "?";
}

EngineKind parse_engine(const std::string& s) {
  if (s == "brute") return EngineKind::ExactBruteForce;
  if (s == "transfer") return EngineKind::ExactTransfer;
  if (s == "exchange") return EngineKind::Exchange;
  if (s == "pseudo") return EngineKind::PseudoLikelihood;
  throw ValidationError("unknown likelihood engine '" + s + "' (expected brute, transfer, exchange or pseudo)");
}

std::string to_string(ExchangeStart s) { return s == ExchangeStart::Data ? "data" : "random"; }

ExchangeStart parse_exchange_start(const std::string& s) {
  if (s == "data") return ExchangeStart::Data;
  if (s == "random") return ExchangeStart::Random;
  throw ValidationError("unknown exchange start '" + s + "' (expected data or random)");
}

LogZ log_z_brute(const PartitionState& z, const Geometry& geom, const CovariateField* cov, Exec exec) {
  return {kernels::log_sum_exp_states(EnergyModel(geom, z, cov), exec)};
}

namespace {

// Stored matrix times exp(scale).
struct ScaledMatrix {
  std::vector<double> a;
  double scale = 0.0;
};

void normalise(ScaledMatrix& m) {
  const double mx = *std::max_element(m.a.begin(), m.a.end());
  if (!(mx > 0.0) || !std::isfinite(mx)) throw Error("transfer matrix lost all mass");
  for (double& v : m.a) v /= mx;
  m.scale += std::log(mx);
}

ScaledMatrix product(const ScaledMatrix& x, const ScaledMatrix& y, int dim, Exec exec) {
  ScaledMatrix r;
  kernels::matmul(x.a, y.a, r.a, dim, exec);
  r.scale = x.scale + y.scale;
  normalise(r);
  return r;
}

}  // namespace

LogZ log_z_transfer(const PartitionState& z, const Geometry& geom, Exec exec) {
  const auto& spec = geom.spec();
  if (spec.boundary != Boundary::Torus) throw ValidationError("transfer matrix needs a torus");
  if (geom.tpl().width() > 2) throw CapError("transfer matrix needs a template at most 2 columns wide");
  if (spec.n > kMaxTransferRows)
    throw CapError("transfer matrix supports at most " + std::to_string(kMaxTransferRows) + " rows");
  const EnergyModel em(geom, z);
  const int n = spec.n;
  const int dim = 1 << n;
  const auto& shape = geom.tpl().shape().nodes();

  // w(a, b): potentials of the n cliques anchored in a column whose own
  // column reads a and whose next column reads b.
  ScaledMatrix t;
  t.a.resize(static_cast<std::size_t>(dim) * dim);
  double wmax = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b) {
      double w = 0.0;
      for (int row = 0; row < n; ++row) {
        std::uint32_t mask = 0;
        for (std::size_t q = 0; q < shape.size(); ++q) {
          const int r = (row + shape[q].i) % n;
          const int col = shape[q].j == 0 ? a : b;
          if ((col >> r) & 1) mask |= 1u << q;
        }
        w += em.clique_potential(0, mask);
      }
      t.a[static_cast<std::size_t>(a) * dim + b] = w;
      wmax = std::max(wmax, w);
    }
  for (double& v : t.a) v = std::exp(v - wmax);
  t.scale = wmax;

  ScaledMatrix result;
  bool have = false;
  for (int e = spec.m; e > 0; e >>= 1) {
    if (e & 1) {
      result = have ? product(result, t, dim, exec) : t;
      have = true;
    }
    if (e > 1) t = product(t, t, dim, exec);
  }
  double trace = 0.0;
  for (int a = 0; a < dim; ++a) trace += result.a[static_cast<std::size_t>(a) * dim + a];
  return {result.scale + std::log(trace)};
}

LogZ log_z_table(const kernels::StateTable& table, const EnergyModel& em) {
  if (em.has_field()) throw ValidationError("state tables do not cover covariates");
  double mx = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(table.histograms.size());
  for (std::size_t h = 0; h < terms.size(); ++h) {
    terms[h] = table.log_counts[h] + em.energy_from_slots(table.histograms[h]);
    mx = std::max(mx, terms[h]);
  }
  double s = 0.0;
  for (double v : terms) s += std::exp(v - mx);
  return {mx + std::log(s)};
}

BinaryImage gibbs_sample(const PartitionState& z, const Geometry& geom, const CovariateField* cov, int sweeps,
                         Rng& rng, const BinaryImage* init, Exec exec) {
  if (sweeps < 1) throw ValidationError("gibbs_sample needs at least one sweep");
  const EnergyModel em(geom, z, cov);
  const auto& spec = geom.spec();
  BinaryImage x;
  if (init) {
    geom.check_image(*init);
    x = *init;
  } else {
    x = BinaryImage(spec.n, spec.m, spec.boundary);
    for (int s : geom.active_sites()) x.data[s] = static_cast<std::uint8_t>(rng() >> 63);
  }
  const std::uint64_t seed = rng();
  for (int s = 0; s < sweeps; ++s) kernels::gibbs_sweep(em, x, seed, static_cast<std::uint64_t>(s), exec);
  return x;
}

BinaryImage exact_sample(const kernels::StateTable& table, const EnergyModel& em, Rng& rng) {
  const auto& geom = em.geometry();
  std::vector<double> w(table.histograms.size());
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t h = 0; h < w.size(); ++h) {
    w[h] = table.log_counts[h] + em.energy_from_slots(table.histograms[h]);
    mx = std::max(mx, w[h]);
  }
  double total = 0.0;
  for (double& v : w) total += (v = std::exp(v - mx));
  double u = uniform01(rng) * total;
  std::size_t h = 0;
  for (; h + 1 < w.size(); ++h) {
    if (u < w[h]) break;
    u -= w[h];
  }
  const std::size_t count = table.begin[h + 1] - table.begin[h];
  const std::uint32_t state = table.states[table.begin[h] + uniform_index(rng, count)];
  const auto& spec = geom.spec();
  BinaryImage x(spec.n, spec.m, spec.boundary);
  const auto& sites = geom.active_sites();
  for (std::size_t b = 0; b < sites.size(); ++b) x.data[sites[b]] = (state >> b) & 1u;
  return x;
}

double log_pseudo_likelihood(const BinaryImage& x, const EnergyModel& em) {
  em.geometry().check_image(x);
  double pl = 0.0;
  for (int s : em.geometry().active_sites()) {
    const double lo = em.log_odds(x, s);
    // log p(x_s | rest) = x_s * lo - log(1 + e^lo)
    const double softplus = lo > 0 ? lo + std::log1p(std::exp(-lo)) : std::log1p(std::exp(lo));
    pl += (x.data[s] ? lo : 0.0) - softplus;
  }
  return pl;
}

double log_pseudo_likelihood(const BinaryImage& x, const PartitionState& z, const Geometry& geom,
                             const CovariateField* cov) {
  return log_pseudo_likelihood(x, EnergyModel(geom, z, cov));
}

LikelihoodEngine::LikelihoodEngine(std::shared_ptr<const Geometry> geom, EngineConfig cfg,
                                   std::shared_ptr<const CovariateField> cov)
    : geom_(std::move(geom)), cfg_(cfg), cov_(std::move(cov)) {
  if (cov_) geom_->check_covariates(*cov_);
  const int free_sites = static_cast<int>(geom_->active_sites().size());
  switch (cfg_.kind) {
    case EngineKind::ExactBruteForce:
      if (free_sites > kMaxBruteForceSites)
        throw CapError("brute-force engine needs at most " + std::to_string(kMaxBruteForceSites) + " sites");
      if (!cov_ && free_sites <= kernels::kMaxStateTableSites)
        table_ = std::make_shared<const kernels::StateTable>(kernels::build_state_table(*geom_, cfg_.exec));
      break;
    case EngineKind::ExactTransfer:
      if (cov_) throw ValidationError("transfer-matrix engine does not support covariates");
      if (geom_->spec().boundary != Boundary::Torus) throw ValidationError("transfer matrix needs a torus");
      if (geom_->tpl().width() > 2) throw CapError("transfer matrix needs a template at most 2 columns wide");
      if (geom_->spec().n > kMaxTransferRows)
        throw CapError("transfer matrix supports at most " + std::to_string(kMaxTransferRows) + " rows");
      break;
    case EngineKind::Exchange:
      if (cfg_.exchange_sweeps < 1) throw ValidationError("likelihood.exchange_sweeps must be at least 1");
      break;
    case EngineKind::PseudoLikelihood:
      break;
  }
}

double LikelihoodEngine::log_z(const PartitionState& z) const {
  switch (cfg_.kind) {
    case EngineKind::ExactBruteForce:
      if (table_) return log_z_table(*table_, EnergyModel(*geom_, z)).value;
      return log_z_brute(z, *geom_, cov_.get(), cfg_.exec).value;
    case EngineKind::ExactTransfer:
      return log_z_transfer(z, *geom_, cfg_.exec).value;
    default:
      throw ValidationError("engine '" + to_string(cfg_.kind) + "' has no exact normalising constant");
  }
}

double LikelihoodEngine::log_lik_surrogate(const BinaryImage& x, const PartitionState& z) const {
  const EnergyModel em(*geom_, z, cov_.get());
  switch (cfg_.kind) {
    case EngineKind::PseudoLikelihood: return log_pseudo_likelihood(x, em);
    case EngineKind::Exchange: return em.energy(x);
    default: return em.energy(x) - log_z(z);
  }
}

double LikelihoodEngine::log_lik_ratio(const BinaryImage& x, const PartitionState& z_new, const PartitionState& z_old,
                                       Rng& rng) const {
  if (z_new == z_old) return 0.0;
  const EnergyModel em_new(*geom_, z_new, cov_.get());
  const EnergyModel em_old(*geom_, z_old, cov_.get());
  switch (cfg_.kind) {
    case EngineKind::ExactBruteForce:
    case EngineKind::ExactTransfer:
      return (em_new.energy(x) - log_z(z_new)) - (em_old.energy(x) - log_z(z_old));
    case EngineKind::PseudoLikelihood:
      return log_pseudo_likelihood(x, em_new) - log_pseudo_likelihood(x, em_old);
    case EngineKind::Exchange: {
      const BinaryImage* start = cfg_.exchange_start == ExchangeStart::Data ? &x : nullptr;
      const BinaryImage w = gibbs_sample(z_new, *geom_, cov_.get(), cfg_.exchange_sweeps, rng, start, cfg_.exec);
      return em_new.energy(x) - em_old.energy(x) + em_old.energy(w) - em_new.energy(w);
    }
  }
  return 0.0;
}

BinaryImage LikelihoodEngine::sample(const PartitionState& z, Rng& rng) const {
  if (table_) return exact_sample(*table_, EnergyModel(*geom_, z), rng);
  return gibbs_sample(z, *geom_, cov_.get(), cfg_.exchange_sweeps, rng, nullptr, cfg_.exec);
}

double log_lik_ratio(const LikelihoodEngine& engine, const BinaryImage& x, const PartitionState& z_new,
                     const PartitionState& z_old, Rng& rng) {
  return engine.log_lik_ratio(x, z_new, z_old, rng);
}

}  // namespace bmrf
