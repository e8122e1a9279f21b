#include <benchmark/benchmark.h>

#include <vector>

#include <omp.h>

#include "deadzone/harness.hpp"

using namespace deadzone;

namespace {

std::vector<double> phases(std::size_t n) {
  InitSpec init;
  init.seed = 7;
  return initial_phases(init, n);
}

template <CouplingKernel Kernel>
void BM_CouplingSums(benchmark::State& state) {
  const auto theta = phases(static_cast<std::size_t>(state.range(0)));
  std::vector<double> out(theta.size());
  for (auto _ : state) {
    coupling_sums(theta, out, Kernel);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetComplexityN(state.range(0));
}

BENCHMARK(BM_CouplingSums<CouplingKernel::MeanField>)->RangeMultiplier(10)->Range(20, 2000);
BENCHMARK(BM_CouplingSums<CouplingKernel::Pairwise>)->RangeMultiplier(10)->Range(20, 2000);
BENCHMARK(BM_CouplingSums<CouplingKernel::PairwiseParallel>)->RangeMultiplier(10)->Range(20, 2000);

void BM_PoincareRun(benchmark::State& state) {
  RunConfig cfg;
  cfg.model.gate.frame = GateFrame::mean_phase();
  cfg.model.gate.width = 1.0;
  cfg.integration.t_end = 6000.0;
  cfg.integration.sample_dt = 10.0;
  cfg.run.poincare.transient_cut = 5000.0;
  cfg.run.kind = RunKind::Poincare;
  for (auto _ : state) benchmark::DoNotOptimize(run_point(cfg));
}
BENCHMARK(BM_PoincareRun)->Unit(benchmark::kMillisecond);

void BM_Sweep(benchmark::State& state) {
  RunConfig spec;
  spec.model.gate.frame = GateFrame::mean_phase();
  spec.integration.t_end = 2000.0;
  spec.integration.sample_dt = 10.0;
  spec.run.poincare.transient_cut = 1000.0;
  spec.run.kind = RunKind::SweepPoincare;
  spec.run.axes = {SweepAxis{SweepParam::W, {0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0}}};
  SweepOptions opts;
  opts.parallel = state.range(0) > 0;
  opts.jobs = opts.parallel ? omp_get_max_threads() : 1;
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(spec, opts));
}
BENCHMARK(BM_Sweep)->Arg(0)->Arg(1)->ArgNames({"parallel"})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
