#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "splitbench/model.hpp"
#include "splitbench/model_io.hpp"
#include "splitbench/rng.hpp"

using namespace splitbench;

namespace {

Tensor random_batch(int n, const Shape& sample, std::uint64_t seed) {
  Rng rng(seed);
  Shape shape{n};
  shape.insert(shape.end(), sample.begin(), sample.end());
  std::vector<double> v(numel(shape));
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return Tensor(shape, std::move(v));
}

SequentialModel small_cnn() {
  SequentialModel m("small_cnn", {1, 8, 8},
                    {Layer::conv2d(1, 3, 3, 1, 1), Layer::relu(), Layer::maxpool2d(2),
                     Layer::flatten(), Layer::dense(48, 16), Layer::relu(),
                     Layer::dense(16, 4)});
  return m;
}

}  // namespace

TEST_CASE("cut: d=0 gives an empty client and the full server") {
  SequentialModel m = small_cnn();
  m.init_weights(1);
  PartitionedModel p = cut(m, 0);
  CHECK(p.client.empty());
  CHECK(p.server.num_layers() == m.num_layers());
  CHECK(p.server.input_shape == m.input_shape);
}

TEST_CASE("cut: out-of-range index is rejected") {
  SequentialModel m = small_cnn();
  CHECK_THROWS_AS(cut(m, -1), std::invalid_argument);
  CHECK_THROWS_AS(cut(m, m.num_layers() + 1), std::invalid_argument);
}

TEST_CASE("partition identity: forward composition is bit-identical at every cut") {
  SequentialModel m = small_cnn();
  m.init_weights(42);
  Tensor x = random_batch(3, m.input_shape, 7);
  const std::vector<double> want = m.forward(x).values();
  for (int d = 0; d <= m.num_layers(); ++d) {
    PartitionedModel p = cut(m, d);
    Tensor z = p.client.empty() ? x : p.client.forward(x);
    Tensor y = p.server.empty() ? z : p.server.forward(z);
    REQUIRE(y.values() == want);
  }
}

TEST_CASE("partition identity: split backward equals full backward bit-identically") {
  SequentialModel m = small_cnn();
  m.init_weights(42);
  Tensor x = random_batch(3, m.input_shape, 7);
  std::vector<int> labels = {0, 3, 1};

  // full-model gradients
  Tensor full_loss = cross_entropy_softmax(m.forward(x), labels);
  full_loss.backward();
  std::vector<std::vector<double>> want;
  for (const Tensor& p : m.parameters()) want.push_back(p.grad());
  zero_grads(m);

  for (int d = 0; d <= m.num_layers(); ++d) {
    PartitionedModel p = cut(m, d);
    Tensor z = p.client.empty() ? x.detach() : p.client.forward(x.detach());
    Tensor boundary = z.detach(true);
    Tensor loss = cross_entropy_softmax(p.server.forward(boundary), labels);
    loss.backward();
    if (z.requires_grad()) z.backward(boundary.grad());
    std::size_t k = 0;
    for (const Tensor& param : m.parameters()) {
      REQUIRE(param.grad() == want[k]);
      ++k;
    }
    zero_grads(m);
  }
}

TEST_CASE("fed_avg: averaging identical vectors is the identity") {
  SequentialModel m = small_cnn();
  m.init_weights(5);
  WeightVector w = flatten_weights(m);
  std::vector<WeightVector> ws = {w, w, w};
  CHECK(fed_avg(ws).values == w.values);
}

TEST_CASE("fed_avg: elementwise mean by hand") {
  WeightVector a, b;
  a.layout = b.layout = {{0, "weight", {2}, 0}};
  a.values = {1.0, 3.0};
  b.values = {3.0, 5.0};
  std::vector<WeightVector> ws = {a, b};
  const WeightVector avg = fed_avg(ws);
  CHECK(avg.values[0] == 2.0);
  CHECK(avg.values[1] == 4.0);
}

TEST_CASE("fed_avg: single-element list is the identity; empty list rejected") {
  WeightVector a;
  a.layout = {{0, "weight", {2}, 0}};
  a.values = {1.5, -2.5};
  std::vector<WeightVector> one = {a};
  CHECK(fed_avg(one).values == a.values);
  std::vector<WeightVector> none;
  CHECK_THROWS_AS(fed_avg(none), std::invalid_argument);
}

TEST_CASE("fed_avg: mismatched layouts are rejected") {
  WeightVector a, b;
  a.layout = {{0, "weight", {2}, 0}};
  a.values = {1, 2};
  b.layout = {{0, "weight", {3}, 0}};
  b.values = {1, 2, 3};
  std::vector<WeightVector> ws = {a, b};
  CHECK_THROWS_AS(fed_avg(ws), std::invalid_argument);
}

TEST_CASE("property: fed_avg is permutation invariant") {
  Rng rng(9);
  WeightVector a, b, c;
  a.layout = b.layout = c.layout = {{0, "weight", {4}, 0}};
  for (int i = 0; i < 4; ++i) {
    a.values.push_back(rng.uniform(-1, 1));
    b.values.push_back(rng.uniform(-1, 1));
    c.values.push_back(rng.uniform(-1, 1));
  }
  std::vector<WeightVector> abc = {a, b, c};
  std::vector<WeightVector> cab = {c, a, b};
  CHECK(fed_avg(abc).values == fed_avg(cab).values);
}

TEST_CASE("ser_avg: one pair degenerates to the identity") {
  SequentialModel m = small_cnn();
  m.init_weights(3);
  PartitionedModel p = cut(m, 3);
  WeightVector w = flatten_weights(p.server);
  std::vector<WeightVector> ws = {w};
  CHECK(ser_avg(ws).values == w.values);
}

TEST_CASE("weight vector round-trips through flatten and load") {
  SequentialModel m = small_cnn();
  m.init_weights(11);
  WeightVector w = flatten_weights(m);
  SequentialModel m2 = small_cnn();
  m2.init_weights(99);  // different values, same layout
  load_weights(m2, w);
  CHECK(flatten_weights(m2).values == w.values);
}

TEST_CASE("memory_demand: dense(2->1) without bias, batch 1") {
  SequentialModel m("tiny", {2}, {Layer::dense(2, 1, false)});
  const MemoryDemand d = memory_demand(m, 1);
  CHECK(d.weight_bytes == 16);
  CHECK(d.activation_bytes == 8);
}

TEST_CASE("memory_demand: empty model is (0, 0)") {
  SequentialModel m("empty", {4}, {});
  const MemoryDemand d = memory_demand(m, 8);
  CHECK(d.weight_bytes == 0);
  CHECK(d.activation_bytes == 0);
}

TEST_CASE("property: client memory is monotone in d, server memory anti-monotone") {
  SequentialModel m = small_cnn();
  m.init_weights(1);
  long long prev_client = -1;
  long long prev_server = 0;
  for (int d = 0; d <= m.num_layers(); ++d) {
    PartitionedModel p = cut(m, d);
    const long long c = memory_demand(p.client, 4).total();
    const long long s = memory_demand(p.server, 4).total();
    if (d > 0) {
      CHECK(c >= prev_client);
      CHECK(s <= prev_server);
    }
    prev_client = c;
    prev_server = s;
  }
}

TEST_CASE("model json round-trip preserves structure") {
  SequentialModel m = small_cnn();
  SequentialModel back = model_from_json(model_to_json(m));
  REQUIRE(back.num_layers() == m.num_layers());
  CHECK(back.input_shape == m.input_shape);
  for (int i = 0; i < m.num_layers(); ++i) {
    CHECK(back.layers[i].kind == m.layers[i].kind);
    CHECK(back.layers[i].parameter_count() == m.layers[i].parameter_count());
  }
}

TEST_CASE("checkpoint round-trips weights bit-exactly") {
  SequentialModel m = small_cnn();
  m.init_weights(123);
  WeightVector w = flatten_weights(m);
  const std::string path =
      (std::filesystem::temp_directory_path() / "splitbench_ckpt_test.bin").string();
  save_checkpoint(path, w);
  WeightVector back = load_checkpoint(path);
  CHECK(back.values == w.values);
  REQUIRE(back.layout.size() == w.layout.size());
  CHECK(back.layout_matches(w));
  std::remove(path.c_str());
}

TEST_CASE("builtin models compose against their declared input shapes") {
  for (const std::string& name : builtin_model_names()) {
    SequentialModel m = builtin_model(name);
    m.init_weights(1);
    Tensor x = random_batch(2, m.input_shape, 5);
    CHECK_NOTHROW(m.forward(x));
  }
  CHECK_THROWS_AS(builtin_model("nope"), std::invalid_argument);
}
