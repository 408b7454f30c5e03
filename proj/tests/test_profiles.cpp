#include <doctest.h>

#include "splitbench/model_io.hpp"
#include "splitbench/profiles.hpp"

using namespace splitbench;

TEST_CASE("vgg16 profile: layer bookkeeping matches the published dimensions") {
  const LayerProfile p = vgg16_profile();
  CHECK(p.input_shape == Shape{3, 32, 32});
  // 13 convs + 13 relus + 5 pools + avgpool + flatten + 3 fc + 2 fc relus
  CHECK(p.num_layers() == 38);
  CHECK(p.layers[p.index_of("conv1_1")].output_elements == 64 * 32 * 32);
  CHECK(p.layers[p.index_of("conv1_1")].params == 3 * 64 * 9 + 64);
  CHECK(p.layers[p.index_of("conv2_1")].output_elements == 128 * 16 * 16);
  // standard conv-stack parameter total
  CHECK(p.cumulative_params(31) == 14714688);
}

TEST_CASE("vgg16 profile: first conv output is twice the second block's conv output") {
  const LayerProfile p = vgg16_profile();
  const long long first = p.layers[p.index_of("conv1_1")].output_elements;
  const long long second = p.layers[p.index_of("conv2_1")].output_elements;
  CHECK(first == 2 * second);
}

TEST_CASE("vgg16 profile: full-model memory is at least 5x the split client for d in [4,30]") {
  const LayerProfile p = vgg16_profile();
  const long long full = p.full_memory(32).total();
  for (int d = 4; d <= 30; ++d) {
    const long long client = p.client_memory(d, 32).total();
    CHECK(full >= 5 * client);
  }
}

TEST_CASE("lenet and cnn1d profiles are well-formed") {
  const LayerProfile lenet = lenet_profile();
  CHECK(lenet.input_shape == Shape{1, 32, 32});
  CHECK(lenet.layers[lenet.index_of("conv1")].output_elements == 6 * 32 * 32);
  CHECK(lenet.layers[lenet.index_of("flatten")].output_elements == 16 * 6 * 6);

  const LayerProfile cnn = cnn1d_profile();
  CHECK(cnn.input_shape == Shape{1, 784});
  // the paper's two evaluated cuts land after the pooling stages
  CHECK(cnn.layers[2].name == "pool1");
  CHECK(cnn.layers[5].name == "pool2");
}

TEST_CASE("profile_model agrees with memory_demand on a concrete model") {
  SequentialModel m = builtin_model("digits_cnn");
  m.init_weights(1);
  const LayerProfile p = profile_model(m);
  REQUIRE(p.num_layers() == m.num_layers());
  for (int d = 0; d <= m.num_layers(); ++d) {
    PartitionedModel parts = cut(m, d);
    const MemoryDemand want = memory_demand(parts.client, 16);
    const MemoryDemand got = p.client_memory(d, 16);
    CHECK(got.weight_bytes == want.weight_bytes);
    CHECK(got.activation_bytes == want.activation_bytes);
  }
}

TEST_CASE("profile json round-trip") {
  const LayerProfile p = lenet_profile();
  const LayerProfile back = profile_from_json(profile_to_json(p));
  REQUIRE(back.num_layers() == p.num_layers());
  CHECK(back.input_shape == p.input_shape);
  for (int i = 0; i < p.num_layers(); ++i) {
    CHECK(back.layers[i].name == p.layers[i].name);
    CHECK(back.layers[i].output_elements == p.layers[i].output_elements);
    CHECK(back.layers[i].params == p.layers[i].params);
    CHECK(back.layers[i].forward_flops == p.layers[i].forward_flops);
    CHECK(back.layers[i].in_place == p.layers[i].in_place);
  }
}

TEST_CASE("boundary elements at cut 0 equal the input size") {
  const LayerProfile p = lenet_profile();
  CHECK(p.output_elements_at(0) == 32 * 32);
  CHECK_THROWS_AS(p.output_elements_at(-1), std::invalid_argument);
  CHECK_THROWS_AS(p.output_elements_at(p.num_layers() + 1), std::invalid_argument);
}
