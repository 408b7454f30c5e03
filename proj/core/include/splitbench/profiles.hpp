#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "splitbench/model.hpp"

namespace splitbench {

/// One profiled layer: static counts, no trained weights.
struct LayerProfileEntry {
  std::string name;
  long long output_elements = 0;  // per sample, at this layer's output
  long long params = 0;
  double forward_flops = 0.0;  // per sample
  bool in_place = false;       // output aliases the previous buffer
};

/// Per-layer size/cost profile of a sequential network. Cut index d means
/// the client runs layers [0, d); d ranges over [0, num_layers].
struct LayerProfile {
  std::string model_name;
  Shape input_shape;
  std::vector<LayerProfileEntry> layers;

  int num_layers() const { return static_cast<int>(layers.size()); }

  /// Elements crossing the split when cutting at d (the boundary tensor).
  long long output_elements_at(int d) const;
  long long boundary_bytes(int d, int batch) const;

  double cumulative_flops(int d) const;  // layers [0, d), per sample
  long long cumulative_params(int d) const;

  MemoryDemand client_memory(int d, int batch) const;
  MemoryDemand server_memory(int d, int batch) const;
  MemoryDemand full_memory(int batch) const;

  int index_of(const std::string& layer_name) const;  // -1 if absent
};

LayerProfile vgg16_profile();   // input (3,32,32), 10-class head
LayerProfile lenet_profile();   // input (1,32,32)
LayerProfile cnn1d_profile();   // input (1,784), two conv blocks

/// Profile computed from a concrete model by walking its shape functions.
LayerProfile profile_model(const SequentialModel& model);

nlohmann::json profile_to_json(const LayerProfile& profile);
LayerProfile profile_from_json(const nlohmann::json& j);

}  // namespace splitbench
