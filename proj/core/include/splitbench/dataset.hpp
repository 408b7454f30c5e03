#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splitbench/tensor.hpp"

namespace splitbench {

/// Labeled batch of samples; inputs carry the batch as the leading dim.
struct Dataset {
  Tensor inputs;
  std::vector<int> labels;
  int num_classes = 0;

  std::size_t size() const { return labels.size(); }
  Shape sample_shape() const;
  Dataset subset(const std::vector<int>& indices) const;
  /// Rows [begin, end) as a fresh leaf tensor plus their labels.
  Dataset slice(int begin, int end) const;
  static Dataset concat(const Dataset& a, const Dataset& b);
};

enum class DatasetKind { SyntheticDigits, Synthetic1d, File };
enum class PartitionScheme { Iid, TwoPartNonIid };

struct DatasetSpec {
  DatasetKind kind = DatasetKind::SyntheticDigits;
  int num_classes = 10;
  int samples_per_client = 128;
  PartitionScheme partition = PartitionScheme::Iid;
  double mix_fraction = 0.10;
  std::uint64_t seed = 1;
  std::string images_path;  // File kind: IDX images
  std::string labels_path;  // File kind: IDX labels
};

/// Deterministic 8x8 glyph rasterizer: digit glyphs 0-9, jittered by one
/// pixel and perturbed with Gaussian noise, normalized to [0,1].
Dataset make_synthetic_digits(int n, std::uint64_t seed);
/// Same renderer over letter glyphs A-J: a disjoint character-style
/// dataset with the same input statistics, for the attacker.
Dataset make_synthetic_letters(int n, std::uint64_t seed);

/// Length-32 signals; class c is a sinusoid of frequency c+1 with random
/// phase plus noise. Not linearly separable due to the phase.
Dataset make_synthetic_1d(int n, int num_classes, std::uint64_t seed);

/// IDX-format loader (the MNIST container format); pixels scaled to [0,1].
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

struct PartitionedData {
  std::vector<Dataset> train_shards;  // one per client
  std::vector<Dataset> test_shards;   // matching per-client test data
  std::vector<int> part_of_client;    // TwoPartNonIid: 0 or 1 per client
  std::vector<Dataset> test_parts;    // TwoPartNonIid: the two test halves
  Dataset union_test;
};

/// Splits train/test across clients. TwoPartNonIid puts labels [0,K/2) in
/// part 0 and [K/2,K) in part 1, augments each part with mix_fraction of
/// the full set sampled uniformly, splits the test set identically, and
/// deals parts to clients round-robin.
PartitionedData partition_dataset(const Dataset& train, const Dataset& test,
                                  const DatasetSpec& spec, int num_clients);

/// Materializes spec.kind with enough samples for num_clients, then
/// partitions. Convenience wrapper used by the experiment harness.
PartitionedData build_data(const DatasetSpec& spec, int num_clients);

}  // namespace splitbench
