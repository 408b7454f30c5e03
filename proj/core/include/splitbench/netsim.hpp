#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <string>
#include <vector>

#include "splitbench/model.hpp"
#include "splitbench/profiles.hpp"

namespace splitbench {

enum class Arch { FL, SL, PSL, FSL, FRC };
std::string arch_name(Arch arch);
Arch arch_from_name(const std::string& name);

/// Point-to-point link with fixed bandwidth (bytes/second) and latency.
struct LinkModel {
  double bandwidth = 1e6;  // bytes per second, > 0
  double latency = 0.0;    // seconds, >= 0
};

/// latency + bytes / bandwidth.
double transmission_delay(long long bytes, const LinkModel& link);

/// Linear flop-cost model for one entity.
struct ComputeModel {
  double seconds_per_flop = 1e-9;
};

enum class Phase { Forward, Backward };

double model_forward_flops(const SequentialModel& part, int batch);
/// seconds_per_flop x estimated flops; backward counts 2x the forward flops.
double compute_delay(const SequentialModel& part, int batch, Phase phase,
                     const ComputeModel& model);

/// Per-epoch timing totals. client_fb/server_fb include the boundary
/// transmission each side waits on (gradients for the client, activations
/// for the server); weight-update time is counted separately; sync holds
/// all averaging-barrier work (weight transfers and parameter-server
/// compute). Per-entity values are means over entities of that role.
struct TimingBreakdown {
  double client_fb = 0.0;
  double server_fb = 0.0;
  double client_update = 0.0;
  double server_update = 0.0;
  double sync = 0.0;
  double epoch_span = 0.0;       // virtual wall time of the epoch
  long long interm_bytes = 0;    // bytes per boundary transfer (one batch)
  double epoch_total() const { return client_fb + server_fb + client_update + server_update; }
};

/// Deterministic event queue. Events pop in (time, entity, seq) order, so
/// simultaneous arrivals resolve by entity id and then insertion order.
struct SimEvent {
  double time;
  int entity;
  std::uint64_t seq;
  std::function<void()> action;
};

class VirtualClock {
 public:
  void schedule(double time, int entity, std::function<void()> action);
  void run();
  double now() const { return now_; }

 private:
  struct Later {
    bool operator()(const SimEvent& a, const SimEvent& b) const {
      if (a.time != b.time) return a.time > b.time;
      if (a.entity != b.entity) return a.entity > b.entity;
      return a.seq > b.seq;
    }
  };
  std::priority_queue<SimEvent, std::vector<SimEvent>, Later> queue_;
  double now_ = 0.0;
  std::uint64_t seq_ = 0;
};

/// Per-batch costs of one client/server pair at a given cut.
struct SplitCost {
  double client_fwd_s = 0.0, client_bwd_s = 0.0;
  double server_fwd_s = 0.0, server_bwd_s = 0.0;
  double client_update_s = 0.0, server_update_s = 0.0;
  long long interm_bytes = 0;  // boundary tensor, one batch (gradient is the same size)
  long long client_weight_bytes = 0, server_weight_bytes = 0;
};

SplitCost split_cost_from_profile(const LayerProfile& profile, int cut_index, int batch,
                                  const ComputeModel& client_rate,
                                  const ComputeModel& server_rate);
SplitCost split_cost_from_model(const SequentialModel& model, int cut_index, int batch,
                                const ComputeModel& client_rate,
                                const ComputeModel& server_rate);

struct SimConfig {
  Arch arch = Arch::FSL;
  int num_clients = 1;
  int batches_per_client = 1;
  int avg_every = 1;  // epochs between averaging barriers
  LinkModel split_link;
  LinkModel ps_link;
  ComputeModel ps_rate{0.0};  // averaging cost at the parameter server
  bool psl_per_batch_updates = false;
};

/// One virtual-clock epoch; `with_barrier` adds the averaging barrier at
/// the end (FL/FSL/FRC only; SL hands weights over inside the epoch).
TimingBreakdown simulate_epoch(const SimConfig& config, const SplitCost& cost,
                               bool with_barrier = true);

/// Runs `epochs` epochs with barriers every avg_every epochs.
std::vector<TimingBreakdown> simulate_epochs(const SimConfig& config, const SplitCost& cost,
                                             int epochs);

}  // namespace splitbench
