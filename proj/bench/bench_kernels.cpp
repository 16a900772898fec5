#include <benchmark/benchmark.h>

#include "spotsgd/simulator.hpp"

using namespace spotsgd;

namespace {

SimConfig two_bid_config(std::int64_t trials) {
  BidPlan plan;
  plan.b1 = 0.6;
  plan.b2 = 0.4;
  plan.n1 = 2;
  plan.n = 4;
  plan.J = 1000;
  SimConfig c;
  c.plan = SimPlan::from_bids(plan);
  c.price = PriceModel::uniform(0.2, 1.0);
  c.runtime = RuntimeModel::exponential(1.0);
  c.trials = trials;
  c.seed = 1;
  return c;
}

SimConfig preemptible_config(std::int64_t trials) {
  SimConfig c;
  c.plan = SimPlan::preemptible(WorkerSchedule::geometric(2, 1.002, 1000), 0.3, 1.0);
  c.runtime = RuntimeModel::exponential(1.0);
  c.trials = trials;
  c.seed = 1;
  return c;
}

void BM_TwoBidsParallel(benchmark::State& state) {
  const SimConfig c = two_bid_config(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(simulate(c).cost.mean);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_TwoBidsSerial(benchmark::State& state) {
  const SimConfig c = two_bid_config(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(simulate_serial(c).cost.mean);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PreemptibleParallel(benchmark::State& state) {
  const SimConfig c = preemptible_config(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(simulate(c).cost.mean);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PreemptibleSerial(benchmark::State& state) {
  const SimConfig c = preemptible_config(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(simulate_serial(c).cost.mean);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_TwoBidsParallel)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_TwoBidsSerial)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_PreemptibleParallel)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_PreemptibleSerial)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
