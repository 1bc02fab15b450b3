// Serial reference against OpenMP for each data-parallel kernel. The Exec
// argument is 0 for serial and 1 for parallel.

#include <memory>
#include <vector>

#include <benchmark/benchmark.h>

#include "bmrf/configsets.hpp"
#include "bmrf/kernels.hpp"
#include "bmrf/param.hpp"

using namespace bmrf;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) ? Exec::Parallel : Exec::Serial; }

std::shared_ptr<const Geometry> torus(int n, int m, const char* tpl) {
  auto cat = std::make_shared<const ConfigCatalog>(build_catalog(parse_template(tpl)));
  return std::make_shared<const Geometry>(LatticeSpec(n, m, Boundary::Torus), cat);
}

void BM_LogSumExpStates(benchmark::State& state) {
  const auto geom = torus(4, 5, "2x2");
  const EnergyModel em(*geom, ising_phi(0.4, geom->catalog()));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::log_sum_exp_states(em, exec_of(state)));
}

void BM_BuildStateTable(benchmark::State& state) {
  const auto geom = torus(4, 4, "2x2");
  for (auto _ : state) benchmark::DoNotOptimize(kernels::build_state_table(*geom, exec_of(state)));
}

void BM_GibbsSweep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(1));
  const auto geom = torus(n, n, "2x2");
  const EnergyModel em(*geom, ising_phi(0.4, geom->catalog()));
  BinaryImage x(n, n, Boundary::Torus);
  std::uint64_t sweep = 0;
  for (auto _ : state) kernels::gibbs_sweep(em, x, 7, sweep++, exec_of(state));
  state.SetItemsProcessed(state.iterations() * n * n);
}

void BM_Matmul(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(1));
  std::vector<double> a(static_cast<std::size_t>(dim) * dim, 0.5);
  std::vector<double> b(a.size(), 0.25);
  std::vector<double> c;
  for (auto _ : state) {
    kernels::matmul(a, b, c, dim, exec_of(state));
    benchmark::DoNotOptimize(c.data());
  }
}

}  // namespace

BENCHMARK(BM_LogSumExpStates)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BuildStateTable)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GibbsSweep)->ArgsProduct({{0, 1}, {48, 128}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Matmul)->ArgsProduct({{0, 1}, {256, 1024}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
