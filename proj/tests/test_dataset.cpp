#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "splitbench/dataset.hpp"

using namespace splitbench;

TEST_CASE("digit renderer: deterministic, normalized, ten classes") {
  Dataset a = make_synthetic_digits(64, 7);
  Dataset b = make_synthetic_digits(64, 7);
  CHECK(a.inputs.values() == b.inputs.values());
  CHECK(a.labels == b.labels);
  CHECK(a.num_classes == 10);
  CHECK(a.sample_shape() == Shape{1, 8, 8});
  for (double v : a.inputs.values()) {
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 1.0);
  }
}

TEST_CASE("letter glyphs differ from digit glyphs under the same seed") {
  Dataset d = make_synthetic_digits(32, 5);
  Dataset l = make_synthetic_letters(32, 5);
  CHECK(d.inputs.values() != l.inputs.values());
  CHECK(d.labels == l.labels);  // same label stream, different glyph set
}

TEST_CASE("1-d synthetic task produces the declared classes and length") {
  Dataset d = make_synthetic_1d(100, 4, 3);
  CHECK(d.sample_shape() == Shape{32});
  int seen = 0;
  for (int l : d.labels) {
    REQUIRE(l >= 0);
    REQUIRE(l < 4);
    seen |= 1 << l;
  }
  CHECK(seen == 0xF);
}

TEST_CASE("two-part non-IID with zero mix keeps label halves disjoint") {
  Dataset train = make_synthetic_digits(400, 11);
  Dataset test = make_synthetic_digits(100, 12);
  DatasetSpec spec;
  spec.partition = PartitionScheme::TwoPartNonIid;
  spec.mix_fraction = 0.0;
  spec.seed = 1;
  PartitionedData p = partition_dataset(train, test, spec, 2);
  REQUIRE(p.train_shards.size() == 2);
  for (int l : p.train_shards[0].labels) CHECK(l < 5);
  for (int l : p.train_shards[1].labels) CHECK(l >= 5);
  for (int l : p.test_parts[0].labels) CHECK(l < 5);
  for (int l : p.test_parts[1].labels) CHECK(l >= 5);
}

TEST_CASE("two-part non-IID: 10% mix adds cross-partition labels and sizes add up") {
  Dataset train = make_synthetic_digits(1000, 21);
  Dataset test = make_synthetic_digits(200, 22);
  DatasetSpec spec;
  spec.partition = PartitionScheme::TwoPartNonIid;
  spec.mix_fraction = 0.10;
  spec.seed = 2;
  PartitionedData p = partition_dataset(train, test, spec, 2);

  // each part holds its base labels plus 10% of the full set
  const std::size_t total =
      p.train_shards[0].size() + p.train_shards[1].size();
  CHECK(total == train.size() + 2 * static_cast<std::size_t>(0.10 * train.size()));

  bool cross0 = false, cross1 = false;
  for (int l : p.train_shards[0].labels) cross0 = cross0 || l >= 5;
  for (int l : p.train_shards[1].labels) cross1 = cross1 || l < 5;
  CHECK(cross0);
  CHECK(cross1);
}

TEST_CASE("two-part non-IID requires an even class count") {
  Dataset train = make_synthetic_1d(100, 3, 1);
  Dataset test = make_synthetic_1d(20, 3, 2);
  DatasetSpec spec;
  spec.partition = PartitionScheme::TwoPartNonIid;
  CHECK_THROWS_AS(partition_dataset(train, test, spec, 2), std::invalid_argument);
}

TEST_CASE("iid partition: per-client label histogram within 3 sigma of uniform") {
  const int clients = 20;
  const int per_client = 200;
  Dataset train = make_synthetic_digits(clients * per_client, 31);
  Dataset test = make_synthetic_digits(400, 32);
  DatasetSpec spec;
  spec.partition = PartitionScheme::Iid;
  spec.seed = 1;
  PartitionedData p = partition_dataset(train, test, spec, clients);
  REQUIRE(p.train_shards.size() == clients);

  // multinomial check: each label count within mean +- 3 sqrt(np(1-p))
  for (const Dataset& shard : p.train_shards) {
    std::vector<int> hist(10, 0);
    for (int l : shard.labels) ++hist[l];
    const double n = static_cast<double>(shard.size());
    const double mean = n / 10.0;
    const double sigma = std::sqrt(n * 0.1 * 0.9);
    for (int k = 0; k < 10; ++k) {
      REQUIRE(std::abs(hist[k] - mean) <= 3.0 * sigma);
    }
  }
}

TEST_CASE("subset and slice keep inputs aligned with labels") {
  Dataset d = make_synthetic_digits(16, 41);
  Dataset s = d.subset({3, 7, 11});
  REQUIRE(s.size() == 3);
  CHECK(s.labels[0] == d.labels[3]);
  CHECK(s.labels[2] == d.labels[11]);
  const auto& dv = d.inputs.values();
  const auto& sv = s.inputs.values();
  for (int i = 0; i < 64; ++i) CHECK(sv[i] == dv[3 * 64 + i]);
}

TEST_CASE("idx loader round-trips a tiny fixture") {
  namespace fs = std::filesystem;
  const fs::path img_path = fs::temp_directory_path() / "sb_idx_images";
  const fs::path lab_path = fs::temp_directory_path() / "sb_idx_labels";
  {
    std::ofstream os(img_path, std::ios::binary);
    const unsigned char header[] = {0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2};
    os.write(reinterpret_cast<const char*>(header), sizeof(header));
    const unsigned char pixels[] = {0, 255, 128, 64, 255, 0, 32, 16};
    os.write(reinterpret_cast<const char*>(pixels), sizeof(pixels));
  }
  {
    std::ofstream os(lab_path, std::ios::binary);
    const unsigned char header[] = {0, 0, 8, 1, 0, 0, 0, 2};
    os.write(reinterpret_cast<const char*>(header), sizeof(header));
    const unsigned char labels[] = {1, 0};
    os.write(reinterpret_cast<const char*>(labels), sizeof(labels));
  }
  Dataset d = load_idx(img_path.string(), lab_path.string());
  REQUIRE(d.size() == 2);
  CHECK(d.sample_shape() == Shape{1, 2, 2});
  CHECK(d.labels == std::vector<int>{1, 0});
  CHECK(d.inputs.values()[1] == doctest::Approx(1.0));
  CHECK(d.inputs.values()[2] == doctest::Approx(128.0 / 255.0));
  std::remove(img_path.string().c_str());
  std::remove(lab_path.string().c_str());
}
