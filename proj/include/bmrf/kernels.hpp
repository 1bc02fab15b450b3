#pragma once

#include <cstdint>
#include <vector>

#include "bmrf/model.hpp"

namespace bmrf {

// Every data-parallel kernel has a serial reference and an OpenMP version.
// Both visit work in the same order and combine partial results in the same
// order, so they return bit-identical values.
enum class Exec { Serial, Parallel };

namespace kernels {

// Largest number of free sites the enumeration kernels accept.
inline constexpr int kMaxEnumerationSites = 26;
// Largest number of free sites for which a state table (one entry per state)
// is kept.
inline constexpr int kMaxStateTableSites = 22;

// log sum_x exp(U(x)) over every configuration of the active sites.
double log_sum_exp_states(const EnergyModel& em, Exec exec);

// Exact density of states: every configuration of the active sites grouped
// by its slot histogram. Without covariates U(x) depends on x only through
// that histogram, so one table serves every parameter value.
struct StateTable {
  int free_sites = 0;
  std::vector<std::vector<int>> histograms;  // one per distinct histogram
  std::vector<double> log_counts;            // log of the number of states
  // States grouped by histogram (CSR); bit b of a state is active site b.
  std::vector<std::uint32_t> begin;
  std::vector<std::uint32_t> states;
};

StateTable build_state_table(const Geometry& geom, Exec exec);

// One colour-ordered Gibbs sweep. The uniform for (sweep, site) comes from a
// hash of (seed, sweep, site), so the result does not depend on thread count.
void gibbs_sweep(const EnergyModel& em, BinaryImage& x, std::uint64_t seed, std::uint64_t sweep, Exec exec);

// Sites grouped into colour classes such that no two sites of a class share
// a clique. Falls back to one class per site when the torus size is not a
// multiple of the template's bounding box.
std::vector<std::vector<int>> colour_classes(const Geometry& geom);

// c = a * b for dense row-major dim x dim matrices.
void matmul(const std::vector<double>& a, const std::vector<double>& b, std::vector<double>& c, int dim, Exec exec);

}  // namespace kernels
}  // namespace bmrf
