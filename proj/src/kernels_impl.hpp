#pragma once

// Pieces shared by the serial and OpenMP kernel drivers.

#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

#include <boost/functional/hash.hpp>

#include "bmrf/kernels.hpp"
#include "bmrf/rng.hpp"

namespace bmrf::kernels::detail {

// Streaming log-sum-exp accumulator.
struct Lse {
  double mx = -std::numeric_limits<double>::infinity();
  double s = 0.0;

  void add(double u) {
    if (u > mx) {
      s = s * std::exp(mx - u) + 1.0;
      mx = u;
    } else {
      s += std::exp(u - mx);
    }
  }
  void merge(const Lse& o) {
    if (o.s == 0.0) return;
    if (o.mx > mx) {
      s = s * std::exp(mx - o.mx) + o.s;
      mx = o.mx;
    } else {
      s += o.s * std::exp(o.mx - mx);
    }
  }
  double value() const { return mx + std::log(s); }
};

// Gray-code walks are split on the high bits; each chunk restarts from a
// full energy evaluation, which also bounds round-off drift.
inline constexpr int kChunkBits = 14;

struct Split {
  int low = 0;
  std::uint64_t chunks = 1;
};

inline Split split_for(int free_sites) {
  Split sp;
  sp.low = free_sites < kChunkBits ? free_sites : kChunkBits;
  sp.chunks = std::uint64_t{1} << (free_sites - sp.low);
  return sp;
}

void check_enumerable(const Geometry& geom, int cap);

BinaryImage chunk_start(const Geometry& geom, int low, std::uint64_t chunk);

Lse lse_chunk(const EnergyModel& em, int low, std::uint64_t chunk);

struct HistHash {
  std::size_t operator()(const std::vector<int>& v) const { return boost::hash_range(v.begin(), v.end()); }
};

struct TableChunk {
  std::vector<std::vector<int>> histograms;
  std::vector<std::uint32_t> local_id;  // per state of the chunk, Gray order
  std::vector<std::uint32_t> state;     // state bits, Gray order
};

TableChunk table_chunk(const Geometry& geom, int low, std::uint64_t chunk);

StateTable merge_table_chunks(std::vector<TableChunk>& parts, int free_sites);

inline void gibbs_update(const EnergyModel& em, BinaryImage& x, std::uint64_t seed, std::uint64_t sweep, int site) {
  const double lo = em.log_odds(x, site);
  const double p1 = 1.0 / (1.0 + std::exp(-lo));
  const double u = uniform01(hash_counters(seed, {sweep, static_cast<std::uint64_t>(site)}));
  x.data[site] = u < p1 ? 1 : 0;
}

void gibbs_sweep_omp(const EnergyModel& em, BinaryImage& x, std::uint64_t seed, std::uint64_t sweep);
double log_sum_exp_states_omp(const EnergyModel& em);
StateTable build_state_table_omp(const Geometry& geom);
void matmul_omp(const std::vector<double>& a, const std::vector<double>& b, std::vector<double>& c, int dim);

}  // namespace bmrf::kernels::detail
