#include <benchmark/benchmark.h>

#include <cmath>

#include "stathm/dirichlet.hpp"
#include "stathm/growth.hpp"
#include "stathm/sets.hpp"
#include "stathm/walk.hpp"

namespace {

using namespace stathm;

void BM_FlatFloorSolve(benchmark::State& state) {
  TruncatedDomain d;
  d.N = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(exact_point_measure(green_field(d), {0, 0}));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FlatFloorSolve)->RangeMultiplier(2)->Range(8, 128)->Unit(benchmark::kMillisecond)->Complexity();

void BM_EnvelopeSolve(benchmark::State& state) {
  TruncatedDomain d;
  d.N = state.range(0);
  d.obstacle = make_power_envelope(2.0, d.half_width(), {});
  for (auto _ : state) benchmark::DoNotOptimize(exact_point_measure(green_field(d), {1, 1}));
}
BENCHMARK(BM_EnvelopeSolve)->RangeMultiplier(2)->Range(8, 128)->Unit(benchmark::kMillisecond);

void BM_CounterexampleSolve(benchmark::State& state) {
  TruncatedDomain d;
  d.N = state.range(0);
  d.obstacle = SetFamily::counterexample().materialize(d.half_width());
  for (auto _ : state) benchmark::DoNotOptimize(exact_point_measure(green_field(d), {0, 1}));
}
BENCHMARK(BM_CounterexampleSolve)->RangeMultiplier(2)->Range(8, 128)->Unit(benchmark::kMillisecond);

void BM_McPointMeasure(benchmark::State& state) {
  const auto B = SiteSet::from_sites({{0, 1}, {1, 2}, {-2, 3}});
  McOptions o;
  o.chains = static_cast<std::uint64_t>(state.range(0));
  o.reflect_half_width = 128;
  for (auto _ : state) benchmark::DoNotOptimize(mc_point_measure(B, {0, 1}, 16, o).mean);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_McPointMeasure)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_McVisits(benchmark::State& state) {
  McOptions o;
  o.chains = 10000;
  for (auto _ : state) benchmark::DoNotOptimize(mc_visits_to_line({0, state.range(0)}, state.range(0), o).mean);
  state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_McVisits)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_SqrtProcess(benchmark::State& state) {
  GrowthOptions o;
  o.window = {state.range(0), LateralPolicy::kPeriodic};
  o.t_end = 5.0;
  std::uint64_t events = 0;
  for (auto _ : state) {
    o.stream = events;
    events += simulate_sqrt_process(o).log.size();
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(events));
}
BENCHMARK(BM_SqrtProcess)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_ClockSet(benchmark::State& state) {
  ClockSet c;
  for (std::int64_t i = 0; i < state.range(0); ++i) c.set({i, 1}, 1.0 + static_cast<double>(i % 7));
  double u = 0.0;
  std::int64_t i = 0;
  for (auto _ : state) {
    c.set({i % state.range(0), 1}, 2.0);
    u = std::fmod(u + 0.618033988749895 * c.total(), c.total());
    benchmark::DoNotOptimize(c.sample(u));
    ++i;
  }
}
BENCHMARK(BM_ClockSet)->Arg(1 << 10)->Arg(1 << 16);

}  // namespace

BENCHMARK_MAIN();
