#include "splitbench/planner.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace splitbench {

double ProfileEstimates::transmission_at(int d) const {
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    if (cuts[i] == d) return transmission_s[i];
  }
  throw std::invalid_argument("ProfileEstimates: no estimate for cut " + std::to_string(d));
}

double ProfileEstimates::compute_at(int d) const {
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    if (cuts[i] == d) return compute_s[i];
  }
  throw std::invalid_argument("ProfileEstimates: no estimate for cut " + std::to_string(d));
}

LinearFit fit_linear(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("fit_linear: need at least 2 points");
  }
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  LinearFit fit;
  if (denom == 0.0) {
    // degenerate design (constant feature): flat fit through the mean
    fit.slope = 0.0;
    fit.intercept = sy / n;
  } else {
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
  }
  return fit;
}

double measured_transmission(const LayerProfile& profile, const LinkModel& link, int batch,
                             int d) {
  return transmission_delay(profile.boundary_bytes(d, batch), link);
}

double measured_compute(const LayerProfile& profile, const ComputeModel& compute, int batch,
                        int d) {
  return compute.seconds_per_flop * profile.cumulative_flops(d) * batch;
}

ProfileEstimates fit_delay_models(const LayerProfile& profile, const LinkModel& link,
                                  const ComputeModel& compute, int batch,
                                  const std::vector<int>& cuts) {
  if (cuts.size() < 2) {
    throw std::invalid_argument("fit_delay_models: need at least 2 profiling points, got " +
                                std::to_string(cuts.size()));
  }
  std::vector<double> bytes_over_b, tx, flops, comp;
  for (int d : cuts) {
    bytes_over_b.push_back(static_cast<double>(profile.boundary_bytes(d, batch)) /
                           link.bandwidth);
    tx.push_back(measured_transmission(profile, link, batch, d));
    flops.push_back(profile.cumulative_flops(d) * batch);
    comp.push_back(measured_compute(profile, compute, batch, d));
  }
  const LinearFit tx_fit = fit_linear(bytes_over_b, tx);
  const LinearFit comp_fit = fit_linear(flops, comp);

  ProfileEstimates est;
  for (int d = 0; d <= profile.num_layers(); ++d) {
    est.cuts.push_back(d);
    est.transmission_s.push_back(
        tx_fit.at(static_cast<double>(profile.boundary_bytes(d, batch)) / link.bandwidth));
    est.compute_s.push_back(comp_fit.at(profile.cumulative_flops(d) * batch));
  }
  return est;
}

int select_cut(const ProfileEstimates& estimates, const PlannerWeights& weights) {
  if (estimates.cuts.empty()) throw std::invalid_argument("select_cut: no estimates");
  int best = estimates.cuts.front();
  double best_score = weights.alpha * estimates.transmission_s.front() +
                      weights.beta * estimates.compute_s.front();
  for (std::size_t i = 1; i < estimates.cuts.size(); ++i) {
    const double score =
        weights.alpha * estimates.transmission_s[i] + weights.beta * estimates.compute_s[i];
    // strict improvement only: ties resolve toward the smaller cut
    if (score < best_score || (score == best_score && estimates.cuts[i] < best)) {
      best = estimates.cuts[i];
      best_score = score;
    }
  }
  return best;
}

std::vector<FrontierEntry> enumerate_frontier(const ProfileEstimates& measured,
                                              const PlannerWeights& weights) {
  std::vector<int> missing;
  for (int d : measured.cuts) {
    if (!measured.accuracy.count(d) || !measured.resilience.count(d)) missing.push_back(d);
  }
  if (!missing.empty()) {
    std::ostringstream os;
    os << "enumerate_frontier: missing accuracy/resilience for cuts";
    for (int d : missing) os << " " << d;
    throw std::invalid_argument(os.str());
  }

  std::vector<FrontierEntry> out;
  for (std::size_t i = 0; i < measured.cuts.size(); ++i) {
    const int d = measured.cuts[i];
    FrontierEntry e;
    e.cut = d;
    e.transmission_s = measured.transmission_s[i];
    e.compute_s = measured.compute_s[i];
    e.accuracy = measured.accuracy.at(d);
    e.resilience = measured.resilience.at(d);
    e.score = -weights.alpha * e.transmission_s - weights.beta * e.compute_s +
              weights.gamma * e.accuracy + weights.kappa * e.resilience;
    out.push_back(e);
  }
  std::stable_sort(out.begin(), out.end(), [](const FrontierEntry& a, const FrontierEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.cut < b.cut;
  });
  return out;
}

nlohmann::json planner_report_json(const std::vector<FrontierEntry>& ranking,
                                   const PlannerWeights& weights) {
  nlohmann::json j;
  j["weights"] = {{"alpha", weights.alpha},
                  {"beta", weights.beta},
                  {"gamma", weights.gamma},
                  {"kappa", weights.kappa}};
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : ranking) {
    rows.push_back({{"cut", e.cut},
                    {"score", e.score},
                    {"transmission_s", e.transmission_s},
                    {"compute_s", e.compute_s},
                    {"accuracy", e.accuracy},
                    {"resilience", e.resilience}});
  }
  j["ranking"] = rows;
  return j;
}

}  // namespace splitbench
