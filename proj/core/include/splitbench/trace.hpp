#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace splitbench {

/// Typed payload categories; privacy contracts are asserted over these.
enum class MessageKind {
  Intermediate,       // boundary activations f(x), client -> server
  BoundaryGradient,   // d(loss)/d(f(x)), server -> client
  ServerWeights,      // server-part weights, to/from the parameter server
  ClientWeights,      // client-part weights (SL handoff only)
  FullWeights,        // complete model weights (FL / FedAVG arm)
  GlobalShardWeights, // shared shard weights (FRC)
  LossShare,          // loss value crossing the split (NoPeek)
};

std::string message_kind_name(MessageKind kind);

struct TraceEvent {
  double time;
  std::string src;
  std::string dst;
  MessageKind kind;
  long long bytes;
};

/// Append-only log of every payload an orchestrator moves between entities.
/// Time is a logical, monotonically increasing event index.
class MessageTrace {
 public:
  void record(const std::string& src, const std::string& dst, MessageKind kind, long long bytes);

  const std::vector<TraceEvent>& events() const { return events_; }

  bool contains(MessageKind kind) const;
  /// Any event of `kind` whose destination starts with `dst_prefix`.
  bool contains_to(MessageKind kind, const std::string& dst_prefix) const;
  long long total_bytes(MessageKind kind) const;

  void write_jsonl(std::ostream& os) const;

 private:
  std::vector<TraceEvent> events_;
  double clock_ = 0.0;
};

}  // namespace splitbench
