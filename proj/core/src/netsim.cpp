#include "splitbench/netsim.hpp"

#include <algorithm>
#include <stdexcept>

namespace splitbench {

std::string arch_name(Arch arch) {
  switch (arch) {
    case Arch::FL: return "fl";
    case Arch::SL: return "sl";
    case Arch::PSL: return "psl";
    case Arch::FSL: return "fsl";
    case Arch::FRC: return "frc";
  }
  return "unknown";
}

Arch arch_from_name(const std::string& name) {
  if (name == "fl") return Arch::FL;
  if (name == "sl") return Arch::SL;
  if (name == "psl") return Arch::PSL;
  if (name == "fsl") return Arch::FSL;
  if (name == "frc") return Arch::FRC;
  throw std::invalid_argument("unknown architecture: " + name);
}

double transmission_delay(long long bytes, const LinkModel& link) {
  if (bytes < 0) throw std::invalid_argument("transmission_delay: negative byte count");
  if (link.bandwidth <= 0.0) throw std::invalid_argument("transmission_delay: bandwidth must be positive");
  if (link.latency < 0.0) throw std::invalid_argument("transmission_delay: negative latency");
  return link.latency + static_cast<double>(bytes) / link.bandwidth;
}

double model_forward_flops(const SequentialModel& part, int batch) {
  double acc = 0.0;
  Shape s = part.input_shape;
  for (const auto& l : part.layers) {
    acc += l.forward_flops(s);
    s = l.output_shape(s);
  }
  return acc * batch;
}

double compute_delay(const SequentialModel& part, int batch, Phase phase,
                     const ComputeModel& model) {
  const double fwd = model_forward_flops(part, batch);
  return model.seconds_per_flop * (phase == Phase::Forward ? fwd : 2.0 * fwd);
}

void VirtualClock::schedule(double time, int entity, std::function<void()> action) {
  if (time < now_) throw std::logic_error("VirtualClock: event scheduled in the past");
  queue_.push(SimEvent{time, entity, seq_++, std::move(action)});
}

void VirtualClock::run() {
  while (!queue_.empty()) {
    SimEvent ev = queue_.top();
    queue_.pop();
    if (ev.time < now_) throw std::logic_error("VirtualClock: time went backwards");
    now_ = ev.time;
    ev.action();
  }
}

SplitCost split_cost_from_profile(const LayerProfile& profile, int cut_index, int batch,
                                  const ComputeModel& client_rate,
                                  const ComputeModel& server_rate) {
  const int L = profile.num_layers();
  if (cut_index < 0 || cut_index > L) {
    throw std::invalid_argument("split_cost: cut " + std::to_string(cut_index) +
                                " out of range for profile '" + profile.model_name + "'");
  }
  SplitCost c;
  const double client_flops = profile.cumulative_flops(cut_index) * batch;
  const double server_flops =
      (profile.cumulative_flops(L) - profile.cumulative_flops(cut_index)) * batch;
  c.client_fwd_s = client_rate.seconds_per_flop * client_flops;
  c.client_bwd_s = 2.0 * c.client_fwd_s;
  c.server_fwd_s = server_rate.seconds_per_flop * server_flops;
  c.server_bwd_s = 2.0 * c.server_fwd_s;
  const long long client_params = profile.cumulative_params(cut_index);
  const long long server_params = profile.cumulative_params(L) - client_params;
  // one fused multiply-add per parameter for a plain SGD step
  c.client_update_s = client_rate.seconds_per_flop * static_cast<double>(client_params);
  c.server_update_s = server_rate.seconds_per_flop * static_cast<double>(server_params);
  c.interm_bytes = profile.boundary_bytes(cut_index, batch);
  c.client_weight_bytes = 8 * client_params;
  c.server_weight_bytes = 8 * server_params;
  return c;
}

SplitCost split_cost_from_model(const SequentialModel& model, int cut_index, int batch,
                                const ComputeModel& client_rate,
                                const ComputeModel& server_rate) {
  return split_cost_from_profile(profile_model(model), cut_index, batch, client_rate,
                                 server_rate);
}

namespace {

struct EntityClock {
  double free_at = 0.0;
  double fb = 0.0;
  double update = 0.0;
  double sync = 0.0;
};

/// One-epoch discrete-event run over the virtual clock. Receivers account
/// wire time: the server pays for incoming activations, the client pays
/// for incoming gradients, sync receivers pay for weight transfers.
class EpochSim {
 public:
  EpochSim(const SimConfig& cfg, const SplitCost& cost, bool with_barrier)
      : cfg_(cfg), cost_(cost), with_barrier_(with_barrier) {
    if (cfg.num_clients < 1) throw std::invalid_argument("simulate_epoch: num_clients >= 1");
    if (cfg.batches_per_client < 1) {
      throw std::invalid_argument("simulate_epoch: batches_per_client >= 1");
    }
    clients_.resize(cfg.num_clients);
    const bool shared_server = cfg.arch == Arch::SL || cfg.arch == Arch::PSL;
    if (cfg.arch == Arch::FL || cfg.arch == Arch::FRC) {
      servers_.clear();
    } else {
      servers_.resize(shared_server ? 1 : cfg.num_clients);
    }
    tx_interm_ = transmission_delay(cost.interm_bytes, cfg.split_link);
    round_done_.assign(cfg.batches_per_client, 0);
    round_gate_.assign(cfg.batches_per_client + 1, 0.0);
  }

  TimingBreakdown run() {
    switch (cfg_.arch) {
      case Arch::FL:
      case Arch::FRC:
        run_local();
        break;
      case Arch::FSL:
      case Arch::PSL:
        for (int i = 0; i < cfg_.num_clients; ++i) start_client(i, 0.0);
        clock_.run();
        break;
      case Arch::SL:
        start_client(0, 0.0);
        clock_.run();
        break;
    }
    if (with_barrier_) barrier();
    return collect();
  }

 private:
  int server_of(int client) const {
    return (cfg_.arch == Arch::FSL) ? client : 0;
  }
  int client_entity(int i) const { return i; }
  int server_entity(int j) const { return cfg_.num_clients + j; }

  void start_client(int i, double t) {
    clock_.schedule(t, client_entity(i), [this, i] { client_forward(i, 0); });
  }

  void client_forward(int i, int b) {
    EntityClock& c = clients_[i];
    const double start = std::max(c.free_at, clock_.now());
    c.fb += cost_.client_fwd_s;
    c.free_at = start + cost_.client_fwd_s;
    const int s = server_of(i);
    clock_.schedule(c.free_at, server_entity(s), [this, i, b] { server_process(i, b); });
  }

  void server_process(int i, int b) {
    EntityClock& s = servers_[server_of(i)];
    // a summed-update round cannot begin before the previous round's update
    double start = std::max({s.free_at, clock_.now(), round_gate_[b]});
    const double busy = tx_interm_ + cost_.server_fwd_s + cost_.server_bwd_s;
    s.fb += busy;
    s.free_at = start + busy;
    const double grad_sent = s.free_at;

    const bool summed_round_update = cfg_.arch == Arch::PSL && !cfg_.psl_per_batch_updates;
    if (summed_round_update) {
      if (++round_done_[b] == cfg_.num_clients) {
        s.update += cost_.server_update_s;
        s.free_at += cost_.server_update_s;
        if (b + 1 < cfg_.batches_per_client) round_gate_[b + 1] = s.free_at;
      }
    } else {
      s.update += cost_.server_update_s;
      s.free_at += cost_.server_update_s;
    }
    clock_.schedule(grad_sent, client_entity(i), [this, i, b] { client_backward(i, b); });
  }

  void client_backward(int i, int b) {
    EntityClock& c = clients_[i];
    const double start = std::max(c.free_at, clock_.now());
    const double busy = tx_interm_ + cost_.client_bwd_s;
    c.fb += busy;
    c.free_at = start + busy;
    c.update += cost_.client_update_s;
    c.free_at += cost_.client_update_s;

    if (b + 1 < cfg_.batches_per_client) {
      clock_.schedule(c.free_at, client_entity(i), [this, i, b] { client_forward(i, b + 1); });
    } else if (cfg_.arch == Arch::SL && i + 1 < cfg_.num_clients) {
      // weight handoff to the next client; the receiver pays the wire time
      EntityClock& next = clients_[i + 1];
      const double tx = transmission_delay(cost_.client_weight_bytes, cfg_.split_link);
      next.sync += tx;
      next.free_at = c.free_at + tx;
      clock_.schedule(next.free_at, client_entity(i + 1),
                      [this, i] { client_forward(i + 1, 0); });
    }
  }

  // FL and FRC train the complete model locally; timelines are independent,
  // so they are laid out directly without the event queue.
  void run_local() {
    const double full_fwd = cost_.client_fwd_s + cost_.server_fwd_s;
    const double full_bwd = cost_.client_bwd_s + cost_.server_bwd_s;
    const double full_update = cost_.client_update_s + cost_.server_update_s;
    const int passes = cfg_.arch == Arch::FRC ? 2 : 1;
    for (auto& c : clients_) {
      for (int b = 0; b < cfg_.batches_per_client; ++b) {
        c.fb += passes * (full_fwd + full_bwd);
        c.update += full_update;
        c.free_at += passes * (full_fwd + full_bwd) + full_update;
      }
    }
  }

  void barrier() {
    long long bytes = 0;
    long long avg_params = 0;
    std::vector<EntityClock>* contributors = nullptr;
    switch (cfg_.arch) {
      case Arch::FL:
        bytes = cost_.client_weight_bytes + cost_.server_weight_bytes;
        avg_params = (cost_.client_weight_bytes + cost_.server_weight_bytes) / 8;
        contributors = &clients_;
        break;
      case Arch::FRC:
        bytes = cost_.server_weight_bytes;  // global shard only
        avg_params = cost_.server_weight_bytes / 8;
        contributors = &clients_;
        break;
      case Arch::FSL:
        bytes = cost_.server_weight_bytes;
        avg_params = cost_.server_weight_bytes / 8;
        contributors = &servers_;
        break;
      case Arch::SL:
      case Arch::PSL:
        return;  // single server partition, nothing to average
    }
    const double tx = transmission_delay(bytes, cfg_.ps_link);
    // uploads: the parameter server receives sequentially
    for (auto& e : *contributors) {
      const double start = std::max(ps_.free_at, e.free_at);
      ps_.sync += tx;
      ps_.free_at = start + tx;
    }
    const double avg_cost =
        cfg_.ps_rate.seconds_per_flop * static_cast<double>(avg_params) * contributors->size();
    ps_.sync += avg_cost;
    ps_.free_at += avg_cost;
    // broadcast: every contributor receives the averaged weights
    for (auto& e : *contributors) {
      e.sync += tx;
      e.free_at = ps_.free_at + tx;
    }
  }

  TimingBreakdown collect() const {
    TimingBreakdown t;
    for (const auto& c : clients_) {
      t.client_fb += c.fb;
      t.client_update += c.update;
      t.sync += c.sync;
    }
    t.client_fb /= clients_.size();
    t.client_update /= clients_.size();
    for (const auto& s : servers_) {
      t.server_fb += s.fb;
      t.server_update += s.update;
      t.sync += s.sync;
    }
    if (!servers_.empty()) {
      t.server_fb /= servers_.size();
      t.server_update /= servers_.size();
    }
    t.sync += ps_.sync;
    double span = ps_.free_at;
    for (const auto& c : clients_) span = std::max(span, c.free_at);
    for (const auto& s : servers_) span = std::max(span, s.free_at);
    t.epoch_span = span;
    const bool split = cfg_.arch == Arch::SL || cfg_.arch == Arch::PSL || cfg_.arch == Arch::FSL;
    t.interm_bytes = split ? cost_.interm_bytes : 0;
    return t;
  }

  const SimConfig& cfg_;
  const SplitCost& cost_;
  bool with_barrier_;
  VirtualClock clock_;
  std::vector<EntityClock> clients_;
  std::vector<EntityClock> servers_;
  EntityClock ps_;
  double tx_interm_ = 0.0;
  std::vector<int> round_done_;
  std::vector<double> round_gate_;
};

}  // namespace

TimingBreakdown simulate_epoch(const SimConfig& config, const SplitCost& cost,
                               bool with_barrier) {
  return EpochSim(config, cost, with_barrier).run();
}

std::vector<TimingBreakdown> simulate_epochs(const SimConfig& config, const SplitCost& cost,
                                             int epochs) {
  std::vector<TimingBreakdown> out;
  out.reserve(epochs);
  for (int e = 0; e < epochs; ++e) {
    const bool barrier = config.avg_every > 0 && (e + 1) % config.avg_every == 0;
    out.push_back(simulate_epoch(config, cost, barrier));
  }
  return out;
}

}  // namespace splitbench
