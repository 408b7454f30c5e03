#include "splitbench/trace.hpp"

#include <ostream>

#include <json.hpp>

namespace splitbench {

std::string message_kind_name(MessageKind kind) {
  switch (kind) {
    case MessageKind::Intermediate: return "intermediate";
    case MessageKind::BoundaryGradient: return "boundary_gradient";
    case MessageKind::ServerWeights: return "server_weights";
    case MessageKind::ClientWeights: return "client_weights";
    case MessageKind::FullWeights: return "full_weights";
    case MessageKind::GlobalShardWeights: return "global_shard_weights";
    case MessageKind::LossShare: return "loss_share";
  }
  return "unknown";
}

void MessageTrace::record(const std::string& src, const std::string& dst, MessageKind kind,
                          long long bytes) {
  clock_ += 1.0;
  events_.push_back({clock_, src, dst, kind, bytes});
}

bool MessageTrace::contains(MessageKind kind) const {
  for (const auto& e : events_) {
    if (e.kind == kind) return true;
  }
  return false;
}

bool MessageTrace::contains_to(MessageKind kind, const std::string& dst_prefix) const {
  for (const auto& e : events_) {
    if (e.kind == kind && e.dst.rfind(dst_prefix, 0) == 0) return true;
  }
  return false;
}

long long MessageTrace::total_bytes(MessageKind kind) const {
  long long acc = 0;
  for (const auto& e : events_) {
    if (e.kind == kind) acc += e.bytes;
  }
  return acc;
}

void MessageTrace::write_jsonl(std::ostream& os) const {
  for (const auto& e : events_) {
    nlohmann::json j = {{"time", e.time},
                        {"src", e.src},
                        {"dst", e.dst},
                        {"kind", message_kind_name(e.kind)},
                        {"bytes", e.bytes}};
    os << j.dump() << "\n";
  }
}

}  // namespace splitbench
