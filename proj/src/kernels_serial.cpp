#include <algorithm>
#include <bit>
#include <string>

#include "bmrf/error.hpp"
#include "kernels_impl.hpp"

namespace bmrf::kernels {
namespace detail {

void check_enumerable(const Geometry& geom, int cap) {
  const int free_sites = static_cast<int>(geom.active_sites().size());
  if (free_sites > cap)
    throw CapError("exact enumeration needs at most " + std::to_string(cap) + " free sites, lattice has " +
                   std::to_string(free_sites));
}

BinaryImage chunk_start(const Geometry& geom, int low, std::uint64_t chunk) {
  const auto& spec = geom.spec();
  BinaryImage x(spec.n, spec.m, spec.boundary);
  const auto& sites = geom.active_sites();
  for (std::size_t b = low; b < sites.size(); ++b) x.data[sites[b]] = (chunk >> (b - low)) & 1u;
  return x;
}

Lse lse_chunk(const EnergyModel& em, int low, std::uint64_t chunk) {
  const auto& sites = em.geometry().active_sites();
  BinaryImage x = chunk_start(em.geometry(), low, chunk);
  Lse acc;
  double u = em.energy(x);
  acc.add(u);
  const std::uint64_t steps = std::uint64_t{1} << low;
  for (std::uint64_t k = 1; k < steps; ++k) {
    const int site = sites[std::countr_zero(k)];
    u += em.delta_flip(x, site);
    x.data[site] ^= 1u;
    acc.add(u);
  }
  return acc;
}

TableChunk table_chunk(const Geometry& geom, int low, std::uint64_t chunk) {
  const auto& sites = geom.active_sites();
  BinaryImage x = chunk_start(geom, low, chunk);
  std::vector<std::uint32_t> masks(geom.clique_count());
  std::vector<int> hist(geom.slot_count(), 0);
  for (int c = 0; c < geom.clique_count(); ++c) {
    masks[c] = geom.clique_mask(x, c);
    ++hist[geom.slot_table(geom.clique_table(c))[masks[c]]];
  }

  std::uint32_t state = static_cast<std::uint32_t>(chunk << low);
  TableChunk out;
  std::unordered_map<std::vector<int>, std::uint32_t, HistHash> ids;
  auto record = [&] {
    auto [it, fresh] = ids.try_emplace(hist, static_cast<std::uint32_t>(out.histograms.size()));
    if (fresh) out.histograms.push_back(hist);
    out.local_id.push_back(it->second);
    out.state.push_back(state);
  };
  const std::uint64_t steps = std::uint64_t{1} << low;
  out.local_id.reserve(steps);
  out.state.reserve(steps);
  record();
  for (std::uint64_t k = 1; k < steps; ++k) {
    const int b = std::countr_zero(k);
    const int site = sites[b];
    for (const auto& ref : geom.site_refs(site)) {
      auto tab = geom.slot_table(geom.clique_table(ref.clique));
      --hist[tab[masks[ref.clique]]];
      masks[ref.clique] ^= 1u << ref.bit;
      ++hist[tab[masks[ref.clique]]];
    }
    x.data[site] ^= 1u;
    state ^= 1u << b;
    record();
  }
  return out;
}

StateTable merge_table_chunks(std::vector<TableChunk>& parts, int free_sites) {
  StateTable t;
  t.free_sites = free_sites;
  std::unordered_map<std::vector<int>, std::uint32_t, HistHash> ids;
  std::vector<std::uint32_t> global_of_state(std::size_t{1} << free_sites);
  std::vector<std::uint64_t> counts;
  for (auto& part : parts) {
    std::vector<std::uint32_t> remap(part.histograms.size());
    for (std::size_t h = 0; h < part.histograms.size(); ++h) {
      auto [it, fresh] = ids.try_emplace(part.histograms[h], static_cast<std::uint32_t>(t.histograms.size()));
      if (fresh) {
        t.histograms.push_back(std::move(part.histograms[h]));
        counts.push_back(0);
      }
      remap[h] = it->second;
    }
    for (std::size_t s = 0; s < part.state.size(); ++s) {
      const std::uint32_t g = remap[part.local_id[s]];
      global_of_state[part.state[s]] = g;
      ++counts[g];
    }
    part = TableChunk{};
  }
  t.begin.assign(t.histograms.size() + 1, 0);
  for (std::size_t h = 0; h < counts.size(); ++h) t.begin[h + 1] = t.begin[h] + static_cast<std::uint32_t>(counts[h]);
  t.states.resize(global_of_state.size());
  std::vector<std::uint32_t> fill(t.begin.begin(), t.begin.end() - 1);
  for (std::uint32_t s = 0; s < global_of_state.size(); ++s) t.states[fill[global_of_state[s]]++] = s;
  t.log_counts.resize(counts.size());
  for (std::size_t h = 0; h < counts.size(); ++h) t.log_counts[h] = std::log(static_cast<double>(counts[h]));
  return t;
}

}  // namespace detail

double log_sum_exp_states(const EnergyModel& em, Exec exec) {
  detail::check_enumerable(em.geometry(), kMaxEnumerationSites);
  if (exec == Exec::Parallel) return detail::log_sum_exp_states_omp(em);
  const auto sp = detail::split_for(static_cast<int>(em.geometry().active_sites().size()));
  detail::Lse total;
  for (std::uint64_t c = 0; c < sp.chunks; ++c) total.merge(detail::lse_chunk(em, sp.low, c));
  return total.value();
}

StateTable build_state_table(const Geometry& geom, Exec exec) {
  detail::check_enumerable(geom, kMaxStateTableSites);
  if (exec == Exec::Parallel) return detail::build_state_table_omp(geom);
  const int free_sites = static_cast<int>(geom.active_sites().size());
  const auto sp = detail::split_for(free_sites);
  std::vector<detail::TableChunk> parts(sp.chunks);
  for (std::uint64_t c = 0; c < sp.chunks; ++c) parts[c] = detail::table_chunk(geom, sp.low, c);
  return detail::merge_table_chunks(parts, free_sites);
}

std::vector<std::vector<int>> colour_classes(const Geometry& geom) {
  const auto& spec = geom.spec();
  const int k = geom.tpl().height();
  const int l = geom.tpl().width();
  std::vector<std::vector<int>> classes;
  const bool tiles = spec.boundary == Boundary::Free || (spec.n % k == 0 && spec.m % l == 0);
  if (!tiles) {
    for (int s : geom.active_sites()) classes.push_back({s});
    return classes;
  }
  classes.resize(static_cast<std::size_t>(k) * l);
  for (int s : geom.active_sites()) {
    const int i = s / spec.m;
    const int j = s % spec.m;
    classes[(i % k) * l + (j % l)].push_back(s);
  }
  std::erase_if(classes, [](const auto& c) { return c.empty(); });
  return classes;
}

void gibbs_sweep(const EnergyModel& em, BinaryImage& x, std::uint64_t seed, std::uint64_t sweep, Exec exec) {
  em.geometry().check_image(x);
  if (exec == Exec::Parallel) return detail::gibbs_sweep_omp(em, x, seed, sweep);
  for (const auto& cls : colour_classes(em.geometry()))
    for (int s : cls) detail::gibbs_update(em, x, seed, sweep, s);
}

void matmul(const std::vector<double>& a, const std::vector<double>& b, std::vector<double>& c, int dim, Exec exec) {
  if (exec == Exec::Parallel) return detail::matmul_omp(a, b, c, dim);
  c.assign(static_cast<std::size_t>(dim) * dim, 0.0);
  for (int i = 0; i < dim; ++i)
    for (int k = 0; k < dim; ++k) {
      const double aik = a[static_cast<std::size_t>(i) * dim + k];
      if (aik == 0.0) continue;
      const double* brow = &b[static_cast<std::size_t>(k) * dim];
      double* crow = &c[static_cast<std::size_t>(i) * dim];
      for (int j = 0; j < dim; ++j) crow[j] += aik * brow[j];
    }
}

}  // namespace bmrf::kernels
