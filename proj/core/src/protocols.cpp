#include "splitbench/protocols.hpp"

#include <cmath>
#include <stdexcept>

namespace splitbench {

std::string avg_mode_name(AvgMode mode) {
  switch (mode) {
    case AvgMode::None: return "none";
    case AvgMode::SerAvg: return "ser_avg";
    case AvgMode::FedAvg: return "fed_avg";
  }
  return "unknown";
}

AvgMode avg_mode_from_name(const std::string& name) {
  if (name == "none") return AvgMode::None;
  if (name == "ser_avg") return AvgMode::SerAvg;
  if (name == "fed_avg") return AvgMode::FedAvg;
  throw std::invalid_argument("unknown averaging mode: " + name);
}

double accuracy(const SequentialModel& model, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  Tensor logits = model.forward(data.inputs.detach());
  const auto& v = logits.values();
  const int classes = logits.shape()[1];
  int hits = 0;
  for (int n = 0; n < static_cast<int>(data.size()); ++n) {
    const double* row = v.data() + static_cast<std::size_t>(n) * classes;
    int best = 0;
    for (int k = 1; k < classes; ++k) {
      if (row[k] > row[best]) best = k;
    }
    if (best == data.labels[n]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

double final_epoch_eval_accuracy(const TrainResult& result) {
  int last = -1;
  for (const auto& m : result.metrics) last = std::max(last, m.epoch);
  double acc = 0.0;
  int n = 0;
  for (const auto& m : result.metrics) {
    if (m.epoch == last) {
      acc += m.eval_acc;
      ++n;
    }
  }
  return n ? acc / n : 0.0;
}

namespace {

struct Batch {
  Tensor x;
  std::vector<int> y;
};

std::vector<Batch> make_batches(const Dataset& shard, int batch_size, Rng& rng) {
  if (shard.size() == 0) throw std::invalid_argument("train: empty client shard");
  std::vector<int> idx = rng.permutation(static_cast<int>(shard.size()));
  const int n = static_cast<int>(idx.size());
  const int nb = n >= batch_size ? n / batch_size : 1;
  std::vector<Batch> out;
  out.reserve(nb);
  for (int b = 0; b < nb; ++b) {
    const int lo = b * std::min(batch_size, n);
    const int hi = std::min(n, lo + std::min(batch_size, n));
    std::vector<int> sel(idx.begin() + lo, idx.begin() + hi);
    Dataset d = shard.subset(sel);
    out.push_back({d.inputs, d.labels});
  }
  return out;
}

Batch single_sample(const Batch& b, int s) {
  const Shape& shape = b.x.shape();
  const std::size_t stride = numel(shape) / shape[0];
  const auto& v = b.x.values();
  Shape one = shape;
  one[0] = 1;
  std::vector<double> vals(v.begin() + s * stride, v.begin() + (s + 1) * stride);
  return {Tensor(one, std::move(vals)), {b.y[s]}};
}

void check_finite(double loss, Arch arch, int pair, int epoch) {
  if (!std::isfinite(loss)) {
    throw std::runtime_error("training diverged: arch=" + arch_name(arch) + " pair=" +
                             std::to_string(pair) + " epoch=" + std::to_string(epoch) +
                             " loss=" + std::to_string(loss));
  }
}

long long tensor_bytes(const Tensor& t) { return 8ll * static_cast<long long>(t.size()); }
long long weights_bytes(const SequentialModel& m) { return 8ll * m.parameter_count(); }

std::string client_name(int i) { return "client/" + std::to_string(i); }
std::string server_name(int i) { return "server/" + std::to_string(i); }
const char* kParamServer = "param_server";

/// Gradient vector in flatten_weights layout; missing grads read as zero.
std::vector<double> flatten_grads(const SequentialModel& m) {
  std::vector<double> out;
  for (const auto& l : m.layers) {
    for (const auto& p : l.parameters()) {
      if (p.has_grad()) {
        const auto& g = p.grad();
        out.insert(out.end(), g.begin(), g.end());
      } else {
        out.insert(out.end(), p.size(), 0.0);
      }
    }
  }
  return out;
}

void apply_grad_vector(const SequentialModel& m, const std::vector<double>& grad, double lr) {
  std::size_t off = 0;
  for (const auto& l : m.layers) {
    for (auto p : l.parameters()) {
      auto& v = p.values();
      for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * grad[off + i];
      off += v.size();
    }
  }
  if (off != grad.size()) throw std::logic_error("apply_grad_vector: layout drift");
}

double accuracy_split(const SequentialModel& client, const SequentialModel& server,
                      const Dataset& data) {
  if (data.size() == 0) return 0.0;
  Tensor z = data.inputs.detach();
  if (!client.empty()) z = client.forward(z).detach();
  Tensor logits = server.forward(z);
  const auto& v = logits.values();
  const int classes = logits.shape()[1];
  int hits = 0;
  for (int n = 0; n < static_cast<int>(data.size()); ++n) {
    const double* row = v.data() + static_cast<std::size_t>(n) * classes;
    int best = 0;
    for (int k = 1; k < classes; ++k) {
      if (row[k] > row[best]) best = k;
    }
    if (best == data.labels[n]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

/// Forward/backward across the split with explicit boundary messages.
/// Updates the client when update_client is set; the server is stepped here
/// only when update_server is set (PSL accumulates and steps per round).
double split_step(SequentialModel& client, SequentialModel& server, const Batch& batch,
                  double lr, bool update_client, bool update_server, MessageTrace* trace,
                  const std::string& cname, const std::string& sname) {
  Tensor x = batch.x.detach();
  Tensor z = client.empty() ? x : client.forward(x);
  Tensor boundary = z.detach(true);
  if (trace) trace->record(cname, sname, MessageKind::Intermediate, tensor_bytes(z));

  Tensor logits = server.forward(boundary);
  Tensor loss = cross_entropy_softmax(logits, batch.y);
  const double value = loss.item();
  loss.backward();

  if (trace) trace->record(sname, cname, MessageKind::BoundaryGradient, tensor_bytes(z));
  if (z.requires_grad()) z.backward(boundary.grad());

  if (update_client) sgd_step(client, lr);
  if (update_server) sgd_step(server, lr);
  return value;
}

/// DP-SGD step: per-sample clipped gradients for the client part, plus the
/// same treatment for the server part under full-model scope. The wire
/// traffic is identical to the oblivious step: one activation batch out,
/// one gradient batch back.
double dp_split_step(SequentialModel& client, SequentialModel& server, const Batch& batch,
                     double lr, const PrivacyConfig& privacy, bool full_scope, Rng& noise_rng,
                     MessageTrace* trace, const std::string& cname, const std::string& sname) {
  const int n = static_cast<int>(batch.y.size());
  std::vector<std::vector<double>> client_grads(n), server_grads(n);
  double loss_sum = 0.0;
  long long boundary_bytes = 0;

  for (int s = 0; s < n; ++s) {
    Batch one = single_sample(batch, s);
    Tensor x = one.x;
    Tensor z = client.empty() ? x : client.forward(x);
    boundary_bytes += tensor_bytes(z);
    Tensor boundary = z.detach(true);
    Tensor logits = server.forward(boundary);
    Tensor loss = cross_entropy_softmax(logits, one.y);
    loss_sum += loss.item();
    loss.backward();
    if (z.requires_grad()) z.backward(boundary.grad());
    client_grads[s] = flatten_grads(client);
    server_grads[s] = flatten_grads(server);
    zero_grads(client);
    zero_grads(server);
  }
  if (trace) {
    trace->record(cname, sname, MessageKind::Intermediate, boundary_bytes);
    trace->record(sname, cname, MessageKind::BoundaryGradient, boundary_bytes);
  }

  DpConfig dp{privacy.noise_multiplier, privacy.max_grad_norm,
              full_scope ? DpScope::FullModel : DpScope::ClientOnly};
  if (!client_grads.front().empty()) {
    apply_grad_vector(client, dp_clip_and_noise(client_grads, dp, noise_rng), lr);
  }
  if (full_scope) {
    apply_grad_vector(server, dp_clip_and_noise(server_grads, dp, noise_rng), lr);
  } else {
    std::vector<double> mean(server_grads.front().size(), 0.0);
    for (const auto& g : server_grads) {
      for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += g[i];
    }
    for (double& v : mean) v /= n;
    apply_grad_vector(server, mean, lr);
  }
  return loss_sum / n;
}

struct Trainer {
  const TrainConfig& cfg;
  const std::vector<ClientData>& data;
  TrainResult result;
  std::vector<PairState> pairs;
  std::vector<Rng> noise_rngs;

  Trainer(const SequentialModel& model, const TrainConfig& config,
          const std::vector<ClientData>& client_data)
      : cfg(config), data(client_data) {
    if (cfg.num_clients < 1) throw std::invalid_argument("train: num_clients must be >= 1");
    if (static_cast<int>(data.size()) != cfg.num_clients) {
      throw std::invalid_argument("train: data shards (" + std::to_string(data.size()) +
                                  ") != num_clients (" + std::to_string(cfg.num_clients) + ")");
    }
    if (cfg.learning_rate <= 0.0) throw std::invalid_argument("train: learning rate must be > 0");
    if (cfg.avg_every < 1) throw std::invalid_argument("train: avg_every must be >= 1");
    if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");

    SequentialModel init = model.clone();
    init.init_weights(cfg.seed);
    pairs.reserve(cfg.num_clients);
    for (int i = 0; i < cfg.num_clients; ++i) {
      PairState p;
      p.full = init.clone();
      p.parts = cut(p.full, cfg.cut_index);
      p.batch_rng = Rng(derive_seed(cfg.seed, 1000 + i));
      pairs.push_back(std::move(p));
      noise_rngs.emplace_back(derive_seed(cfg.seed, 2000 + i));
    }
  }

  bool barrier_epoch(int e) const { return (e + 1) % cfg.avg_every == 0; }

  void record_metrics(int e, int i, double loss) {
    const PairState& p = pairs[i];
    result.metrics.push_back({e, i, accuracy(p.full, data[i].train),
                              accuracy(p.full, data[i].eval), loss});
  }

  void record_trajectory(int e) {
    if (!cfg.record_trajectory) return;
    if (static_cast<int>(result.trajectory.size()) <= e) result.trajectory.resize(e + 1);
    for (auto& p : pairs) result.trajectory[e].push_back(flatten_weights(p.full));
  }

  void finish() {
    // SL trains one traveling pair; the others never hold meaningful state
    const int n_out = cfg.arch == Arch::SL ? 1 : cfg.num_clients;
    for (int i = 0; i < n_out; ++i) {
      PairState& p = pairs[i];
      if (cfg.arch == Arch::FL || cfg.arch == Arch::FRC) {
        result.client_weights.push_back(flatten_weights(p.full));
      } else {
        result.client_weights.push_back(flatten_weights(p.parts.client));
        result.server_weights.push_back(flatten_weights(p.parts.server));
      }
    }
    int last = -1;
    for (const auto& m : result.metrics) last = std::max(last, m.epoch);
    int n = 0;
    for (const auto& m : result.metrics) {
      if (m.epoch == last) {
        result.mean_train_acc += m.train_acc;
        result.mean_eval_acc += m.eval_acc;
        ++n;
      }
    }
    if (n) {
      result.mean_train_acc /= n;
      result.mean_eval_acc /= n;
    }
  }

  // ---- FL ----
  void run_fl() {
    for (int e = 0; e < cfg.epochs; ++e) {
      std::vector<double> losses(cfg.num_clients, 0.0);
      for (int i = 0; i < cfg.num_clients; ++i) {
        PairState& p = pairs[i];
        double loss_sum = 0.0;
        int steps = 0;
        for (const Batch& b : make_batches(data[i].train, cfg.batch_size, p.batch_rng)) {
          Tensor logits = p.full.forward(b.x.detach());
          Tensor loss = cross_entropy_softmax(logits, b.y);
          loss_sum += loss.item();
          ++steps;
          check_finite(loss.item(), cfg.arch, i, e);
          loss.backward();
          sgd_step(p.full, cfg.learning_rate);
        }
        losses[i] = loss_sum / steps;
      }
      if (barrier_epoch(e)) average_full();
      // metrics see the post-barrier model
      for (int i = 0; i < cfg.num_clients; ++i) record_metrics(e, i, losses[i]);
      record_trajectory(e);
    }
  }

  void average_full() {
    std::vector<WeightVector> wvs;
    for (int i = 0; i < cfg.num_clients; ++i) {
      wvs.push_back(flatten_weights(pairs[i].full));
      result.trace.record(client_name(i), kParamServer, MessageKind::FullWeights,
                          weights_bytes(pairs[i].full));
    }
    WeightVector avg = fed_avg(wvs);
    for (int i = 0; i < cfg.num_clients; ++i) {
      load_weights(pairs[i].full, avg);
      result.trace.record(kParamServer, client_name(i), MessageKind::FullWeights,
                          weights_bytes(pairs[i].full));
    }
  }

  // ---- SL ----
  // One physical client part travels from client to client; the server
  // part persists. Each client trains cfg.epochs epochs before handoff.
  void run_sl() {
    PairState& p = pairs[0];  // weights live here; other pairs are unused
    for (int k = 0; k < cfg.num_clients; ++k) {
      if (k > 0) {
        result.trace.record(client_name(k - 1), client_name(k), MessageKind::ClientWeights,
                            weights_bytes(p.parts.client));
      }
      Rng rng(derive_seed(cfg.seed, 1000 + k));
      for (int e = 0; e < cfg.epochs; ++e) {
        double loss_sum = 0.0;
        int steps = 0;
        for (const Batch& b : make_batches(data[k].train, cfg.batch_size, rng)) {
          const double loss = step_with_privacy(p, k, e, b, true, true, client_name(k),
                                                server_name(0));
          loss_sum += loss;
          ++steps;
          check_finite(loss, cfg.arch, k, e);
        }
        result.metrics.push_back({e, k, accuracy(p.full, data[k].train),
                                  accuracy(p.full, data[k].eval), loss_sum / steps});
        if (k == cfg.num_clients - 1) record_trajectory(e);
      }
    }
  }

  // ---- PSL ----
  void run_psl() {
    // single shared server partition
    SequentialModel& server = pairs[0].parts.server;
    for (int e = 0; e < cfg.epochs; ++e) {
      std::vector<std::vector<Batch>> batches;
      int rounds = 1 << 30;
      for (int i = 0; i < cfg.num_clients; ++i) {
        batches.push_back(make_batches(data[i].train, cfg.batch_size, pairs[i].batch_rng));
        rounds = std::min(rounds, static_cast<int>(batches.back().size()));
      }
      std::vector<double> loss_sums(cfg.num_clients, 0.0);
      for (int r = 0; r < rounds; ++r) {
        for (int i = 0; i < cfg.num_clients; ++i) {
          const double loss =
              step_with_privacy(pairs[i], i, e, batches[i][r], true,
                                cfg.psl_per_batch_updates, client_name(i), server_name(0),
                                &server);
          loss_sums[i] += loss;
          check_finite(loss, cfg.arch, i, e);
        }
        // summed round update per the PSL rule: W -= lr * sum_i grad_i
        if (!cfg.psl_per_batch_updates) sgd_step(server, cfg.learning_rate);
      }
      // mirror the shared server weights into every pair so composed
      // evaluation and snapshots see the trained partition
      const WeightVector sv = flatten_weights(server);
      for (int i = 1; i < cfg.num_clients; ++i) load_weights(pairs[i].parts.server, sv);
      for (int i = 0; i < cfg.num_clients; ++i) record_metrics(e, i, loss_sums[i] / rounds);
      record_trajectory(e);
    }
  }

  // ---- FSL ----
  void run_fsl() {
    for (int e = 0; e < cfg.epochs; ++e) {
      const bool dc_round =
          cfg.privacy.mode == PrivacyMode::CpaDc &&
          select_round(e, {cfg.privacy.dc_frequency, cfg.privacy.loss_multiplier}) ==
              RoundKind::Dc;
      std::vector<double> losses(cfg.num_clients, 0.0);
      for (int i = 0; i < cfg.num_clients; ++i) {
        PairState& p = pairs[i];
        double loss_sum = 0.0;
        int steps = 0;
        for (const Batch& b : make_batches(data[i].train, cfg.batch_size, p.batch_rng)) {
          double loss;
          if (dc_round) {
            loss = dc_round_step(p.parts.client, b.x, cfg.privacy.loss_multiplier,
                                 cfg.learning_rate);
          } else {
            loss = step_with_privacy(p, i, e, b, true, true, client_name(i), server_name(i));
          }
          loss_sum += loss;
          ++steps;
          check_finite(loss, cfg.arch, i, e);
        }
        losses[i] = loss_sum / steps;
      }
      if (barrier_epoch(e)) average_fsl();
      for (int i = 0; i < cfg.num_clients; ++i) record_metrics(e, i, losses[i]);
      record_trajectory(e);
    }
  }

  void average_fsl() {
    if (cfg.avg_mode == AvgMode::None) return;
    if (cfg.avg_mode == AvgMode::FedAvg) {
      average_full();
      return;
    }
    std::vector<WeightVector> wvs;
    for (int i = 0; i < cfg.num_clients; ++i) {
      wvs.push_back(flatten_weights(pairs[i].parts.server));
      result.trace.record(server_name(i), kParamServer, MessageKind::ServerWeights,
                          weights_bytes(pairs[i].parts.server));
    }
    WeightVector avg = ser_avg(wvs);
    for (int i = 0; i < cfg.num_clients; ++i) {
      load_weights(pairs[i].parts.server, avg);
      result.trace.record(kParamServer, server_name(i), MessageKind::ServerWeights,
                          weights_bytes(pairs[i].parts.server));
    }
  }

  // ---- FRC ----
  // Pass A trains the local shard (layers [0,d)) with gradients computed
  // over the full model; pass B retrains and updates the global shard.
  void run_frc() {
    for (int e = 0; e < cfg.epochs; ++e) {
      std::vector<double> losses(cfg.num_clients, 0.0);
      for (int i = 0; i < cfg.num_clients; ++i) {
        PairState& p = pairs[i];
        double loss_sum = 0.0;
        int steps = 0;
        for (const Batch& b : make_batches(data[i].train, cfg.batch_size, p.batch_rng)) {
          // pass A: local shard
          {
            Tensor loss = cross_entropy_softmax(p.full.forward(b.x.detach()), b.y);
            check_finite(loss.item(), cfg.arch, i, e);
            loss.backward();
            sgd_step(p.parts.client, cfg.learning_rate);
            zero_grads(p.parts.server);
          }
          // pass B: global shard
          {
            Tensor loss = cross_entropy_softmax(p.full.forward(b.x.detach()), b.y);
            loss_sum += loss.item();
            ++steps;
            check_finite(loss.item(), cfg.arch, i, e);
            loss.backward();
            sgd_step(p.parts.server, cfg.learning_rate);
            zero_grads(p.parts.client);
          }
        }
        losses[i] = loss_sum / steps;
      }
      if (barrier_epoch(e)) average_global_shards();
      for (int i = 0; i < cfg.num_clients; ++i) record_metrics(e, i, losses[i]);
      record_trajectory(e);
    }
  }

  void average_global_shards() {
    std::vector<WeightVector> wvs;
    for (int i = 0; i < cfg.num_clients; ++i) {
      wvs.push_back(flatten_weights(pairs[i].parts.server));
      result.trace.record(client_name(i), kParamServer, MessageKind::GlobalShardWeights,
                          weights_bytes(pairs[i].parts.server));
    }
    WeightVector avg = fed_avg(wvs);
    for (int i = 0; i < cfg.num_clients; ++i) {
      load_weights(pairs[i].parts.server, avg);
      result.trace.record(kParamServer, client_name(i), MessageKind::GlobalShardWeights,
                          weights_bytes(pairs[i].parts.server));
    }
  }

  /// Regular-round step under the configured privacy mode. `server_override`
  /// lets PSL route every pair through the shared server partition.
  double step_with_privacy(PairState& p, int i, int epoch, const Batch& b, bool update_client,
                           bool update_server, const std::string& cname,
                           const std::string& sname, SequentialModel* server_override = nullptr) {
    (void)epoch;
    SequentialModel& server = server_override ? *server_override : p.parts.server;
    switch (cfg.privacy.mode) {
      case PrivacyMode::None:
      case PrivacyMode::CpaDc:  // regular rounds of the alternating schedule
        return split_step(p.parts.client, server, b, cfg.learning_rate, update_client,
                          update_server, &result.trace, cname, sname);
      case PrivacyMode::NoPeek: {
        result.trace.record(cname, sname, MessageKind::Intermediate, tensor_bytes(b.x));
        result.trace.record(sname, cname, MessageKind::LossShare, 8);
        result.trace.record(sname, cname, MessageKind::BoundaryGradient, tensor_bytes(b.x));
        return nopeek_step(p.parts.client, server, b.x, b.y, cfg.privacy.loss_multiplier,
                           cfg.learning_rate);
      }
      case PrivacyMode::CpaDp:
        return dp_split_step(p.parts.client, server, b, cfg.learning_rate, cfg.privacy,
                             false, noise_rngs[i], &result.trace, cname, sname);
      case PrivacyMode::DpFull:
        return dp_split_step(p.parts.client, server, b, cfg.learning_rate, cfg.privacy,
                             true, noise_rngs[i], &result.trace, cname, sname);
    }
    throw std::logic_error("step_with_privacy: unhandled mode");
  }
};

}  // namespace

TrainResult train(const SequentialModel& model, const TrainConfig& config,
                  const std::vector<ClientData>& data) {
  Trainer t(model, config, data);
  switch (config.arch) {
    case Arch::FL: t.run_fl(); break;
    case Arch::SL: t.run_sl(); break;
    case Arch::PSL: t.run_psl(); break;
    case Arch::FSL: t.run_fsl(); break;
    case Arch::FRC: t.run_frc(); break;
  }
  t.finish();
  return t.result;
}

}  // namespace splitbench
