#include "splitbench/privacy.hpp"

#include <cmath>
#include <stdexcept>

namespace splitbench {

std::string privacy_mode_name(PrivacyMode mode) {
  switch (mode) {
    case PrivacyMode::None: return "none";
    case PrivacyMode::NoPeek: return "nopeek";
    case PrivacyMode::CpaDc: return "cpa_dc";
    case PrivacyMode::CpaDp: return "cpa_dp";
    case PrivacyMode::DpFull: return "dp_full";
  }
  return "unknown";
}

PrivacyMode privacy_mode_from_name(const std::string& name) {
  if (name == "none") return PrivacyMode::None;
  if (name == "nopeek") return PrivacyMode::NoPeek;
  if (name == "cpa_dc") return PrivacyMode::CpaDc;
  if (name == "cpa_dp") return PrivacyMode::CpaDp;
  if (name == "dp_full") return PrivacyMode::DpFull;
  throw std::invalid_argument("unknown privacy mode: " + name);
}

RoundKind select_round(int epoch, const CpaDcSchedule& schedule) {
  if (schedule.dc_frequency < 0) {
    throw std::invalid_argument("select_round: dc_frequency must be >= 0");
  }
  if (schedule.dc_frequency == 0) return RoundKind::Regular;
  return epoch % (schedule.dc_frequency + 1) == 0 ? RoundKind::Regular : RoundKind::Dc;
}

double dc_round_step(SequentialModel& client, const Tensor& batch_x, double m, double lr) {
  if (m == 0.0) return 0.0;  // zero multiplier: no-op by contract
  Tensor x = batch_x.detach();
  Tensor z = client.forward(x);
  const Shape& zs = z.shape();
  Shape flat{static_cast<int>(numel(zs) / zs[0])};
  Tensor loss = mul_scalar(distance_correlation(reshape_per_sample(x, Shape{static_cast<int>(
                                                    numel(x.shape()) / x.shape()[0])}),
                                                reshape_per_sample(z, flat)),
                           m);
  const double value = loss.item();
  if (loss.requires_grad()) {
    loss.backward();
    sgd_step(client, lr);
  }
  return value;
}

double nopeek_step(SequentialModel& client, SequentialModel& server, const Tensor& batch_x,
                   const std::vector<int>& labels, double m, double lr) {
  Tensor x = batch_x.detach();
  Tensor z = client.forward(x);
  Tensor logits = server.forward(z);
  Tensor loss = cross_entropy_softmax(logits, labels);
  if (m != 0.0) {
    Tensor x_flat = reshape_per_sample(x, Shape{static_cast<int>(numel(x.shape()) / x.shape()[0])});
    Tensor z_flat = reshape_per_sample(z, Shape{static_cast<int>(numel(z.shape()) / z.shape()[0])});
    loss = add(loss, mul_scalar(distance_correlation(x_flat, z_flat), m));
  }
  const double value = loss.item();
  loss.backward();
  sgd_step(client, lr);
  sgd_step(server, lr);
  return value;
}

std::vector<double> dp_clip_and_noise(const std::vector<std::vector<double>>& per_sample_grads,
                                      const DpConfig& config, Rng& rng) {
  if (config.max_gradient_norm <= 0.0) {
    throw std::invalid_argument("dp_clip_and_noise: max_gradient_norm must be positive");
  }
  if (per_sample_grads.empty()) {
    throw std::invalid_argument("dp_clip_and_noise: no per-sample gradients");
  }
  const std::size_t dim = per_sample_grads.front().size();
  const double batch = static_cast<double>(per_sample_grads.size());
  const double c = config.max_gradient_norm;

  std::vector<double> out(dim, 0.0);
  for (const auto& g : per_sample_grads) {
    if (g.size() != dim) {
      throw std::invalid_argument("dp_clip_and_noise: ragged per-sample gradients");
    }
    double norm2 = 0.0;
    for (double v : g) norm2 += v * v;
    const double norm = std::sqrt(norm2);
    const double scale = norm > c ? c / norm : 1.0;
    for (std::size_t i = 0; i < dim; ++i) out[i] += g[i] * scale;
  }
  for (double& v : out) v /= batch;

  if (config.noise_multiplier > 0.0) {
    const double std_dev = config.noise_multiplier * c / batch;
    for (double& v : out) v += rng.normal(0.0, std_dev);
  }
  return out;
}

}  // namespace splitbench
