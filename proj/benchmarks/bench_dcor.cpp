#include <benchmark/benchmark.h>

#include "splitbench/rng.hpp"
#include "splitbench/tensor.hpp"

using namespace splitbench;

namespace {

void BM_DistanceCorrelation(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int k = 64;
  Rng rng(1);
  std::vector<double> xv(n * k), zv(n * k);
  for (double& v : xv) v = rng.uniform(-1, 1);
  for (double& v : zv) v = rng.uniform(-1, 1);
  Tensor x({n, k}, xv);
  Tensor z({n, k}, zv);
  for (auto _ : state) {
    benchmark::DoNotOptimize(distance_correlation(x, z).item());
  }
}
BENCHMARK(BM_DistanceCorrelation)->Arg(8)->Arg(16)->Arg(64);

void BM_DistanceCorrelationBackward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int k = 64;
  Rng rng(1);
  std::vector<double> xv(n * k), zv(n * k);
  for (double& v : xv) v = rng.uniform(-1, 1);
  for (double& v : zv) v = rng.uniform(-1, 1);
  Tensor x({n, k}, xv);
  for (auto _ : state) {
    Tensor z({n, k}, zv, true);
    Tensor loss = distance_correlation(x, z);
    loss.backward();
    benchmark::DoNotOptimize(z.grad().data());
  }
}
BENCHMARK(BM_DistanceCorrelationBackward)->Arg(8)->Arg(16);

}  // namespace
