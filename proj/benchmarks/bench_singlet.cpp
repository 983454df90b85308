#include <benchmark/benchmark.h>

#include "singlet/collective_spin.hpp"
#include "singlet/model.hpp"
#include "singlet/reduced_sweep.hpp"
#include "singlet/trajectory.hpp"

using namespace singlet;

static void BM_CollectiveOperators(benchmark::State& state) {
  const auto basis = build_basis(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    CollectiveOperators ops(*basis);
    benchmark::DoNotOptimize(ops.get(CollectiveOp::S2).nonzeros());
  }
}
BENCHMARK(BM_CollectiveOperators)->Arg(10)->Arg(40)->Arg(100);

static void BM_DickeDecomposition(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(dicke_decomposition(n).front().weight);
}
BENCHMARK(BM_DickeDecomposition)->Arg(40)->Arg(200)->Arg(1000);

static void BM_SpinorTrajectory(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto basis = build_basis(n);
  const SweepSchedule sched{ScheduleKind::exponential, 7.0, 0.08, 10.0};
  const auto model = build_spinor_model({1.0, 0.001, 0.0, n}, sched, basis);
  TrajectoryConfig cfg;
  cfg.dt = 2e-3;
  cfg.t_max = 10.0;
  cfg.sample_interval = 1.0;
  const TrajectoryEngine engine(model, cfg);
  const auto psi0 = model_state(model, all_in_zero(basis));
  std::size_t index = 0;
  for (auto _ : state) benchmark::DoNotOptimize(engine.run(psi0, index++).final_state.size());
  state.SetItemsProcessed(state.iterations() * 5000);
}
BENCHMARK(BM_SpinorTrajectory)->Arg(10)->Arg(40)->Unit(benchmark::kMillisecond);

static void BM_TavisCummingsTrajectory(benchmark::State& state) {
  const int n = 10;
  EffectiveDickeParams d;
  d.lambda_minus = 6.0;
  d.kappa = 1.0;
  d.atoms = n;
  const auto basis = build_basis(n);
  const auto model = build_dicke_model(d, basis, CavitySpace(CavitySpace::default_truncation(n)));
  TrajectoryConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_max = 1.0;
  cfg.sample_interval = 0.1;
  const TrajectoryEngine engine(model, cfg);
  const auto psi0 = model_state(model, all_in_zero(basis));
  std::size_t index = 0;
  for (auto _ : state) benchmark::DoNotOptimize(engine.run(psi0, index++).jumps.size());
}
BENCHMARK(BM_TavisCummingsTrajectory)->Unit(benchmark::kMillisecond);

static void BM_ReducedNoJump(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const SweepSchedule sched{ScheduleKind::exponential, 1.0, 0.05, 20.0};
  NoJumpConfig cfg;
  cfg.dt = 2e-3;
  cfg.t_max = 20.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(propagate_no_jump({1.0, 0.001, 0.0, n}, sched, cfg).survival_norm);
  }
}
BENCHMARK(BM_ReducedNoJump)->Arg(40)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
