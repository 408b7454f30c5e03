#include <benchmark/benchmark.h>

#include "splitbench/netsim.hpp"

using namespace splitbench;

namespace {

void BM_SimulateEpochPsl(benchmark::State& state) {
  const LayerProfile profile = vgg16_profile();
  const SplitCost cost = split_cost_from_profile(profile, 10, 32, {1e-9}, {1e-9});
  SimConfig cfg;
  cfg.arch = Arch::PSL;
  cfg.num_clients = static_cast<int>(state.range(0));
  cfg.batches_per_client = 8;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_epoch(cfg, cost).epoch_total());
  }
}
BENCHMARK(BM_SimulateEpochPsl)->Arg(5)->Arg(20)->Arg(100);

void BM_SimulateEpochFsl(benchmark::State& state) {
  const LayerProfile profile = vgg16_profile();
  const SplitCost cost = split_cost_from_profile(profile, 10, 32, {1e-9}, {1e-9});
  SimConfig cfg;
  cfg.arch = Arch::FSL;
  cfg.num_clients = static_cast<int>(state.range(0));
  cfg.batches_per_client = 8;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_epoch(cfg, cost).epoch_total());
  }
}
BENCHMARK(BM_SimulateEpochFsl)->Arg(5)->Arg(20)->Arg(100);

}  // namespace
