// Serial reference kernels against their OpenMP counterparts. The argument
// of the parallel variants is the worker count.

#include <benchmark/benchmark.h>

#include "alm/dp_solver.hpp"
#include "alm/liability.hpp"
#include "alm/simulator.hpp"

namespace {

using namespace alm;

struct Problem {
  EconomicParams econ;
  CashflowSchedule schedule;
  GridSpec grid;
  SolverOptions solver;
  SimulationOptions simulation;

  Problem() {
    econ.horizon = 5.0;
    schedule = build_schedule(default_buckets(), Spreading::kUniformMonthly, econ);
    grid.a_step = 1000.0;
    grid.d_step = 2000.0;
    solver.controls = uniform_controls(11);
    solver.n_inner = 500;
    simulation.n_paths = 20000;
  }
};

const Problem& problem() {
  static const Problem p;
  return p;
}

void BM_SolveSerial(benchmark::State& state) {
  const Problem& p = problem();
  for (auto _ : state) {
    SolveResult r = solve_serial(GbmParams{}, p.schedule, p.econ, p.grid, ObjectiveG::g3(), p.solver);
    benchmark::DoNotOptimize(r.values.front().data());
  }
}
BENCHMARK(BM_SolveSerial)->Unit(benchmark::kMillisecond);

void BM_SolveParallel(benchmark::State& state) {
  const Problem& p = problem();
  SolverOptions options = p.solver;
  options.workers = static_cast<int>(state.range(0));
  for (auto _ : state) {
    SolveResult r = solve(GbmParams{}, p.schedule, p.econ, p.grid, ObjectiveG::g3(), options);
    benchmark::DoNotOptimize(r.values.front().data());
  }
}
BENCHMARK(BM_SolveParallel)->Arg(1)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_SimulateSerial(benchmark::State& state) {
  const Problem& p = problem();
  for (auto _ : state) {
    PTSampleSet s = simulate_serial(GbmParams{}, p.schedule, p.econ, ConstantMix{0.5}, p.simulation);
    benchmark::DoNotOptimize(s.samples.data());
  }
}
BENCHMARK(BM_SimulateSerial)->Unit(benchmark::kMillisecond);

void BM_SimulateParallel(benchmark::State& state) {
  const Problem& p = problem();
  SimulationOptions options = p.simulation;
  options.workers = static_cast<int>(state.range(0));
  for (auto _ : state) {
    PTSampleSet s = simulate(GbmParams{}, p.schedule, p.econ, ConstantMix{0.5}, options);
    benchmark::DoNotOptimize(s.samples.data());
  }
}
BENCHMARK(BM_SimulateParallel)->Arg(1)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
