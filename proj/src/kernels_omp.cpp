#include <omp.h>

#include "kernels_impl.hpp"

namespace bmrf::kernels::detail {

double log_sum_exp_states_omp(const EnergyModel& em) {
  const auto sp = split_for(static_cast<int>(em.geometry().active_sites().size()));
  std::vector<Lse> parts(sp.chunks);
  const auto chunks = static_cast<std::int64_t>(sp.chunks);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t c = 0; c < chunks; ++c) parts[c] = lse_chunk(em, sp.low, static_cast<std::uint64_t>(c));
  Lse total;
  for (const auto& p : parts) total.merge(p);
  return total.value();
}

StateTable build_state_table_omp(const Geometry& geom) {
  const int free_sites = static_cast<int>(geom.active_sites().size());
  const auto sp = split_for(free_sites);
  std::vector<TableChunk> parts(sp.chunks);
  const auto chunks = static_cast<std::int64_t>(sp.chunks);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t c = 0; c < chunks; ++c) parts[c] = table_chunk(geom, sp.low, static_cast<std::uint64_t>(c));
  return merge_table_chunks(parts, free_sites);
}

void gibbs_sweep_omp(const EnergyModel& em, BinaryImage& x, std::uint64_t seed, std::uint64_t sweep) {
  const auto classes = colour_classes(em.geometry());
  for (const auto& cls : classes) {
    const auto count = static_cast<std::int64_t>(cls.size());
#pragma omp parallel for schedule(static) if (count > 256)
    for (std::int64_t q = 0; q < count; ++q) gibbs_update(em, x, seed, sweep, cls[q]);
  }
}

void matmul_omp(const std::vector<double>& a, const std::vector<double>& b, std::vector<double>& c, int dim) {
  c.assign(static_cast<std::size_t>(dim) * dim, 0.0);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < dim; ++i)
    for (int k = 0; k < dim; ++k) {
      const double aik = a[static_cast<std::size_t>(i) * dim + k];
      if (aik == 0.0) continue;
      const double* brow = &b[static_cast<std::size_t>(k) * dim];
      double* crow = &c[static_cast<std::size_t>(i) * dim];
      for (int j = 0; j < dim; ++j) crow[j] += aik * brow[j];
    }
}

}  // namespace bmrf::kernels::detail
