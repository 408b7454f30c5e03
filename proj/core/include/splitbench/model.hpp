#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "splitbench/layers.hpp"
#include "splitbench/tensor.hpp"

namespace splitbench {

/// Ordered layer list validated against a declared per-sample input shape.
struct SequentialModel {
  std::string name;
  Shape input_shape;  // per sample
  std::vector<Layer> layers;

  SequentialModel() = default;
  SequentialModel(std::string name, Shape input_shape, std::vector<Layer> layers);

  void init_weights(std::uint64_t seed);
  Tensor forward(const Tensor& x) const;
  Shape output_shape() const;
  std::vector<Tensor> parameters() const;
  long long parameter_count() const;
  bool empty() const { return layers.empty(); }
  int num_layers() const { return static_cast<int>(layers.size()); }

  /// Deep copy: fresh weight tensors with the same values.
  SequentialModel clone() const;
};

/// Forward through a layer list; errors name the offending layer index.
Tensor forward(const std::vector<Layer>& layers, const Tensor& input);

/// Client part f (layers [0,d)) and server part g (layers [d,end)).
struct PartitionedModel {
  SequentialModel client;
  SequentialModel server;
  int cut_index = 0;
};

/// Splits at cut index d in [0, num_layers]. Layer tensors are shared with
/// the original model, so the composition invariant holds bit-exactly.
PartitionedModel cut(const SequentialModel& model, int d);

/// Flattened trainable parameters with a per-layer segment layout.
struct WeightVector {
  struct Segment {
    int layer_index;
    std::string tensor;  // "weight" or "bias"
    Shape shape;
    std::size_t offset;
  };
  std::vector<double> values;
  std::vector<Segment> layout;

  bool layout_matches(const WeightVector& other) const;
  std::size_t size() const { return values.size(); }
};

WeightVector flatten_weights(const SequentialModel& model);
void load_weights(SequentialModel& model, const WeightVector& weights);

/// Elementwise arithmetic mean of full weight vectors.
WeightVector fed_avg(std::span<const WeightVector> weights);
/// Same mean, applied to server-part weight vectors only; client weights
/// are never inputs here.
WeightVector ser_avg(std::span<const WeightVector> server_weights);

/// One plain SGD step: w -= lr * grad for every parameter with a gradient,
/// then clears the gradients.
void sgd_step(const SequentialModel& model, double lr);
void zero_grads(const SequentialModel& model);

struct MemoryDemand {
  long long weight_bytes = 0;
  long long activation_bytes = 0;
  long long total() const { return weight_bytes + activation_bytes; }
};

/// Memory model: 8 bytes per parameter plus 8 * batch * output elements of
/// every layer whose output is a distinct buffer. In-place activations and
/// views alias the previous output and are counted once (the input itself
/// is excluded).
MemoryDemand memory_demand(const SequentialModel& part, int batch);

}  // namespace splitbench
