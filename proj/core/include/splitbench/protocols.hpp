#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "splitbench/dataset.hpp"
#include "splitbench/model.hpp"
#include "splitbench/netsim.hpp"
#include "splitbench/privacy.hpp"
#include "splitbench/trace.hpp"

namespace splitbench {

enum class AvgMode { None, SerAvg, FedAvg };
std::string avg_mode_name(AvgMode mode);
AvgMode avg_mode_from_name(const std::string& name);

struct TrainConfig {
  Arch arch = Arch::FSL;
  int num_clients = 1;
  int cut_index = 0;
  int epochs = 1;
  int batch_size = 16;
  double learning_rate = 0.1;
  int avg_every = 1;  // epochs between averaging barriers
  std::uint64_t seed = 1;
  AvgMode avg_mode = AvgMode::SerAvg;  // FSL averaging arm; FL always averages fully
  bool psl_per_batch_updates = false;
  PrivacyConfig privacy;
  bool record_trajectory = false;  // snapshot full weights after every epoch
};

struct ClientData {
  Dataset train;
  Dataset eval;
};

struct EpochMetrics {
  int epoch;
  int pair_id;
  double train_acc;
  double eval_acc;
  double loss;
};

/// One client(-server) pair: its split model (sharing storage with the
/// composed full model), batch stream, and epoch counter.
struct PairState {
  SequentialModel full;
  PartitionedModel parts;
  Rng batch_rng{0};
  int epoch = 0;
};

struct TrainResult {
  std::vector<WeightVector> client_weights;  // per pair; FL/FRC: full model here
  std::vector<WeightVector> server_weights;  // per pair; empty for FL/FRC
  std::vector<EpochMetrics> metrics;
  MessageTrace trace;
  // trajectory[epoch][pair] = full-model weights, when record_trajectory set
  std::vector<std::vector<WeightVector>> trajectory;
  double mean_train_acc = 0.0;
  double mean_eval_acc = 0.0;
};

/// Trains `model` (an architecture template; weights are re-initialized
/// from config.seed so every client starts identically) under the given
/// architecture. data.size() must equal num_clients. Throws on divergence
/// (non-finite loss) with a diagnostic naming arch, pair, and epoch.
TrainResult train(const SequentialModel& model, const TrainConfig& config,
                  const std::vector<ClientData>& data);

/// Classification accuracy of a model over a dataset.
double accuracy(const SequentialModel& model, const Dataset& data);

/// Fraction of eval accuracy rows from the final epoch, averaged per pair.
double final_epoch_eval_accuracy(const TrainResult& result);

}  // namespace splitbench
