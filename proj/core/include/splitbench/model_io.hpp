#pragma once

#include <string>

#include <json.hpp>

#include "splitbench/model.hpp"

namespace splitbench {

/// Model description file: ordered layer specs with hyperparameters.
nlohmann::json model_to_json(const SequentialModel& model);
SequentialModel model_from_json(const nlohmann::json& j);

/// Weight checkpoint: JSON layout header followed by raw little-endian
/// 64-bit floats.
void save_checkpoint(const std::string& path, const WeightVector& weights);
WeightVector load_checkpoint(const std::string& path);

/// Built-in desk-scale architectures by name (digits_cnn, digits_mlp,
/// synth1d_mlp); throws on unknown names.
SequentialModel builtin_model(const std::string& name);
std::vector<std::string> builtin_model_names();

}  // namespace splitbench
