#pragma once

#include <map>
#include <optional>
#include <vector>

#include <json.hpp>

#include "splitbench/netsim.hpp"
#include "splitbench/profiles.hpp"

namespace splitbench {

/// Objective weights: alpha/beta scale the delay terms, gamma/kappa scale
/// accuracy and attack resilience in the full problem. Accuracy and
/// resilience are dimensionless, the delays are seconds; gamma and kappa
/// carry the unit conversion.
struct PlannerWeights {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 0.0;
  double kappa = 0.0;
};

/// Delay predictions per cut, from fitted regression models, plus optional
/// measured accuracy/resilience tables for the full problem.
struct ProfileEstimates {
  std::vector<int> cuts;
  std::vector<double> transmission_s;  // I(d | b)
  std::vector<double> compute_s;       // C(d)
  std::map<int, double> accuracy;      // A(W, d), measured
  std::map<int, double> resilience;    // R(W, d), measured

  double transmission_at(int d) const;
  double compute_at(int d) const;
};

/// Ordinary least squares y = a + b x.
struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double at(double x) const { return intercept + slope * x; }
};
LinearFit fit_linear(const std::vector<double>& x, const std::vector<double>& y);

/// Fits I(d|b) linearly in boundary bytes / bandwidth and C(d) linearly in
/// cumulative client flops, from profiling points measured on `cuts`
/// (simulated with the given link and compute models). Needs >= 2 points.
ProfileEstimates fit_delay_models(const LayerProfile& profile, const LinkModel& link,
                                  const ComputeModel& compute, int batch,
                                  const std::vector<int>& cuts);

/// Measured per-cut delays the regressions are fitted against (and that
/// held-out cuts are validated with): one boundary transfer plus the client
/// forward compute for one batch.
double measured_transmission(const LayerProfile& profile, const LinkModel& link, int batch,
                             int d);
double measured_compute(const LayerProfile& profile, const ComputeModel& compute, int batch,
                        int d);

/// argmin over d of alpha*I(d|b) + beta*C(d); ties break toward smaller d.
int select_cut(const ProfileEstimates& estimates, const PlannerWeights& weights);

struct FrontierEntry {
  int cut;
  double score;  // -alpha I - beta C + gamma A + kappa R
  double transmission_s;
  double compute_s;
  double accuracy;
  double resilience;
};

/// Brute-force ranking of cuts by the full objective; requires measured
/// accuracy and resilience for every cut and throws listing any gaps.
std::vector<FrontierEntry> enumerate_frontier(const ProfileEstimates& measured,
                                              const PlannerWeights& weights);

nlohmann::json planner_report_json(const std::vector<FrontierEntry>& ranking,
                                   const PlannerWeights& weights);

}  // namespace splitbench
