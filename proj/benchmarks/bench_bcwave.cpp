#include "bcwave/basis.hpp"
#include "bcwave/boundary_ops.hpp"
#include "bcwave/control.hpp"
#include "bcwave/forward.hpp"
#include "bcwave/medium.hpp"
#include "bcwave/parallel.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace bcwave;

namespace {

BasisParams bench_basis() {
  BasisParams p;
  p.T = 0.3;
  p.t_first = 0.1;
  p.t_last = 0.2;
  p.half_width = 0.2;
  p.quad_dt = 0.00125;
  p.quad_dx = 0.00625;
  return p;
}

ReceiverLattice bench_lattice(const BasisSpec& basis) {
  ReceiverLattice lat;
  lat.T = basis.params().T;
  lat.half_width = 0.4;
  lat.dt_r = basis.params().quad_dt;
  lat.dx_r = basis.params().quad_dx;
  return lat;
}

// Traces, K and [b] for the lens, built once and shared by the assembly and cap benchmarks.
struct Fixture {
  BasisSpec basis{bench_basis()};
  GramMatrix gram{basis};
  ReceiverLattice lat = bench_lattice(basis);
  SimGrid grid = covering_grid(lat.half_width, -0.1, 2.0 * lat.T, 1.0, 0.00625, lat.dt_r);
  SpeedField field = SpeedField::sample(SpeedModel::lens(), grid.space);
  TraceSet traces = record_ndmap(field, basis, grid, lat);
  ConnectingMatrix K = assemble_K(traces, basis, gram);
  Matrix sym = symmetric_part(K);
  Matrix bvec = b_vector(basis);

  static const Fixture& get() {
    static const Fixture f = [] {
      set_thread_limit(1);
      return Fixture{};
    }();
    return f;
  }
};

void BM_SimulateOneSource(benchmark::State& state) {
  set_thread_limit(1);
  const double dx = 0.025 / static_cast<double>(state.range(0));
  const BasisSpec basis(bench_basis());
  const SimGrid grid = covering_grid(0.4, -0.1, 0.6, 1.0, dx, 0.00125);
  const SpeedField field = SpeedField::sample(SpeedModel::lens(), grid.space);
  const BoundarySource source = basis_source(basis, basis.index(2, basis.n_locations() / 2));
  for (auto _ : state) benchmark::DoNotOptimize(final_state(field, source, grid, 0.3));
  state.counters["nodes"] = static_cast<double>(grid.space.size());
  state.counters["steps"] = static_cast<double>(grid.n_steps());
}
BENCHMARK(BM_SimulateOneSource)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_GramMatrix(benchmark::State& state) {
  const BasisSpec basis(bench_basis());
  for (auto _ : state) benchmark::DoNotOptimize(GramMatrix(basis));
}
BENCHMARK(BM_GramMatrix)->Unit(benchmark::kMillisecond);

void BM_Eikonal(benchmark::State& state) {
  const GridGeometry g = GridGeometry::half_space(1.0, 1.0, 1.0 / static_cast<double>(state.range(0)));
  const SpeedField field = SpeedField::sample(SpeedModel::lens(), g);
  for (auto _ : state) benchmark::DoNotOptimize(eikonal_distance(field, BoundarySegment{-1.0, 1.0}));
}
BENCHMARK(BM_Eikonal)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_AssembleK(benchmark::State& state) {
  const Fixture& f = Fixture::get();
  for (auto _ : state) benchmark::DoNotOptimize(assemble_K(f.traces, f.basis, f.gram));
  state.counters["N"] = static_cast<double>(f.basis.size());
}
BENCHMARK(BM_AssembleK)->Unit(benchmark::kMillisecond);

void BM_CapSolverSetup(benchmark::State& state) {
  const Fixture& f = Fixture::get();
  const double alpha = default_alpha(f.K);
  for (auto _ : state) benchmark::DoNotOptimize(CapSolver(f.sym, f.bvec, f.basis, 0.1, alpha));
}
BENCHMARK(BM_CapSolverSetup)->Unit(benchmark::kMillisecond);

void BM_CapSolve(benchmark::State& state) {
  const Fixture& f = Fixture::get();
  const CapSolver solver(f.sym, f.bvec, f.basis, 0.1, default_alpha(f.K));
  std::vector<double> xs;
  for (long r = -f.lat.r_max(); r <= f.lat.r_max(); ++r) xs.push_back(f.lat.dx_r * static_cast<double>(r));
  const auto table = BoundaryDistanceTable::euclidean({0.0}, xs);
  for (auto _ : state) benchmark::DoNotOptimize(solver.solve(0.0, 0.05, table));
}
BENCHMARK(BM_CapSolve)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
