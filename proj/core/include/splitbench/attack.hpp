#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "splitbench/dataset.hpp"
#include "splitbench/model.hpp"

namespace splitbench {

struct AttackConfig {
  int autoencoder_epochs = 20;
  int classifier_epochs = 20;
  int batch_size = 16;
  double learning_rate = 0.1;  // the learner's rate, reused by the attacker
  std::uint64_t seed = 1;
};

struct AttackReport {
  Tensor reconstructions;
  int n_reconstructed = 0;
  int n_correct = 0;
  double tau = 0.0;
  double reconstruction_mse = 0.0;
  nlohmann::json to_json() const;
};

/// Attack resilience: 1 - n_correct / n_reconstructed.
double tau(int n_correct, int n_reconstructed);

/// Mirrored autoencoder for a client architecture: the encoder copies the
/// client layers (fresh weights); the decoder reverses the shape-changing
/// layers (dense flipped, conv as transposed conv, pool as nearest-neighbor
/// upsample, flatten as reshape) with relu between stages and a sigmoid
/// output. Cutting the result at the encoder length recovers the decoder.
/// Throws, naming the layer, when a layer has no mirror rule or its shape
/// arithmetic cannot be inverted exactly.
SequentialModel build_autoencoder(const SequentialModel& client_arch);

/// Boundary activations captured in transit, with the source batch they
/// came from and its true labels for scoring.
struct InterceptedBatch {
  Tensor intermediate;
  Tensor source;
  std::vector<int> labels;
};

/// The honest-but-curious reconstruction attack: train the mirrored
/// autoencoder on the attacker's own similar dataset, decode the captured
/// intermediate data, then score the reconstructions with a fresh
/// classifier (the victim's full architecture) trained on true source data.
/// Only the victim's architecture is consulted, never its weight values.
AttackReport run_attack(const SequentialModel& victim_client_arch,
                        const SequentialModel& victim_full_arch,
                        const std::vector<InterceptedBatch>& captured, const Dataset& source,
                        const Dataset& attacker_data, const AttackConfig& config);

/// Dumps a batch of [n,1,h,w] reconstructions as a binary PGM contact sheet.
void write_pgm_grid(const std::string& path, const Tensor& images, int columns = 8);

}  // namespace splitbench
