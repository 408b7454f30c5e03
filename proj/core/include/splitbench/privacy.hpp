#pragma once

#include <vector>

#include "splitbench/model.hpp"
#include "splitbench/rng.hpp"
#include "splitbench/tensor.hpp"

namespace splitbench {

enum class PrivacyMode { None, NoPeek, CpaDc, CpaDp, DpFull };
std::string privacy_mode_name(PrivacyMode mode);
PrivacyMode privacy_mode_from_name(const std::string& name);

/// Alternating schedule: one regular round followed by F decorrelation
/// rounds, repeating with period F+1. F = 0 disables decorrelation rounds.
struct CpaDcSchedule {
  int dc_frequency = 0;       // F
  double loss_multiplier = 0; // m
};

enum class RoundKind { Regular, Dc };
RoundKind select_round(int epoch, const CpaDcSchedule& schedule);

enum class DpScope { ClientOnly, FullModel };

struct DpConfig {
  double noise_multiplier = 0.0;
  double max_gradient_norm = 1.0;  // clipping bound C, > 0
  DpScope scope = DpScope::ClientOnly;
};

struct PrivacyConfig {
  PrivacyMode mode = PrivacyMode::None;
  int dc_frequency = 0;
  double loss_multiplier = 0.0;
  double noise_multiplier = 0.0;
  double max_grad_norm = 1.0;
};

/// One decorrelation step: trains the client alone to reduce
/// dCor(x, f(x)), scaled by m. Server weights are untouched and nothing
/// crosses the split. Returns the m-scaled loss value.
double dc_round_step(SequentialModel& client, const Tensor& batch_x, double m, double lr);

/// One NoPeek step: single backward over CE(g(f(x)), y) + m * dCor(x, f(x));
/// both partitions update. Returns the combined loss value.
double nopeek_step(SequentialModel& client, SequentialModel& server, const Tensor& batch_x,
                   const std::vector<int>& labels, double m, double lr);

/// Clips each per-sample gradient to norm <= C, averages, and adds
/// per-coordinate Gaussian noise with std nm*C/batch. Input is one gradient
/// vector per sample.
std::vector<double> dp_clip_and_noise(const std::vector<std::vector<double>>& per_sample_grads,
                                      const DpConfig& config, Rng& rng);

}  // namespace splitbench
