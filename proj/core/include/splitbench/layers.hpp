#pragma once

#include <string>
#include <vector>

#include "splitbench/rng.hpp"
#include "splitbench/tensor.hpp"

namespace splitbench {

enum class LayerKind {
  Dense,
  Conv2d,
  Relu,
  MaxPool2d,
  Flatten,
  TransposedConv2d,
  Sigmoid,
  Upsample2d,
  Reshape,
};

std::string layer_kind_name(LayerKind kind);
LayerKind layer_kind_from_name(const std::string& name);

/// One sequential-network layer: a kind plus its hyperparameters and
/// (for parameterized kinds) weight tensors. Shapes below are per sample;
/// forward() operates on batched tensors with a leading batch dimension.
struct Layer {
  LayerKind kind;

  int in_features = 0, out_features = 0;             // Dense
  int in_channels = 0, out_channels = 0;             // Conv2d / TransposedConv2d
  int kernel = 0, stride = 1, padding = 0;           // Conv2d / TransposedConv2d / MaxPool2d
  int factor = 0;                                    // Upsample2d
  Shape target_shape;                                // Reshape
  bool has_bias = true;

  Tensor weight;
  Tensor bias;

  static Layer dense(int in, int out, bool bias = true);
  static Layer conv2d(int in_ch, int out_ch, int kernel, int stride = 1, int padding = 0,
                      bool bias = true);
  static Layer transposed_conv2d(int in_ch, int out_ch, int kernel, int stride = 1,
                                 int padding = 0, bool bias = true);
  static Layer relu();
  static Layer sigmoid();
  static Layer maxpool2d(int kernel, int stride = 0);  // stride 0 means kernel
  static Layer flatten();
  static Layer upsample2d(int factor);
  static Layer reshape(Shape target);

  /// Output shape for a given per-sample input shape, without executing.
  /// Total over all kinds; throws with a description if shapes do not fit.
  Shape output_shape(const Shape& in) const;

  Tensor forward(const Tensor& x) const;

  /// Allocates parameters, uniform in +-sqrt(1/fan_in).
  void init_weights(Rng& rng);

  bool parameterized() const;
  std::vector<Tensor> parameters() const;
  long long parameter_count() const;

  /// Multiply-accumulate based estimate for one sample.
  double forward_flops(const Shape& in) const;

  /// True when the layer writes its result into the input buffer (Relu) or
  /// is a view (Flatten/Reshape); used by the memory model.
  bool in_place() const;

  std::string describe() const;
};

}  // namespace splitbench
