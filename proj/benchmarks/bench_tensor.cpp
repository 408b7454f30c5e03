#include <benchmark/benchmark.h>

#include "splitbench/model_io.hpp"
#include "splitbench/rng.hpp"

using namespace splitbench;

namespace {

Tensor random_batch(int n, const Shape& sample, std::uint64_t seed) {
  Rng rng(seed);
  Shape shape{n};
  shape.insert(shape.end(), sample.begin(), sample.end());
  std::vector<double> v(numel(shape));
  for (double& x : v) x = rng.uniform(0.0, 1.0);
  return Tensor(shape, std::move(v));
}

void BM_ForwardDigitsCnn(benchmark::State& state) {
  SequentialModel m = builtin_model("digits_cnn");
  m.init_weights(1);
  Tensor x = random_batch(static_cast<int>(state.range(0)), m.input_shape, 2);
  for (auto _ : state) {
    Tensor y = m.forward(x);
    benchmark::DoNotOptimize(y.values().data());
  }
}
BENCHMARK(BM_ForwardDigitsCnn)->Arg(1)->Arg(16)->Arg(64);

void BM_BackwardDigitsCnn(benchmark::State& state) {
  SequentialModel m = builtin_model("digits_cnn");
  m.init_weights(1);
  const int n = static_cast<int>(state.range(0));
  Tensor x = random_batch(n, m.input_shape, 2);
  std::vector<int> labels(n, 3);
  for (auto _ : state) {
    Tensor loss = cross_entropy_softmax(m.forward(x), labels);
    loss.backward();
    zero_grads(m);
    benchmark::DoNotOptimize(loss.item());
  }
}
BENCHMARK(BM_BackwardDigitsCnn)->Arg(1)->Arg(16);

}  // namespace
