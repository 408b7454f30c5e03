#pragma once

#include <string>
#include <vector>

namespace splitbench {

/// One plotted series; ci_low/ci_high, when non-empty, draw a confidence
/// band around the line.
struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> ci_low;
  std::vector<double> ci_high;
};

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = 640;
  int height = 420;
};

/// Deterministic SVG line chart; numbers are emitted with fixed precision
/// so identical inputs produce byte-identical files.
std::string render_line_chart(const std::vector<PlotSeries>& series, const PlotOptions& options);

/// Grouped bar chart: one group per x tick, one bar per series, with
/// optional error bars from ci_low/ci_high.
std::string render_bar_chart(const std::vector<PlotSeries>& series,
                             const std::vector<std::string>& group_labels,
                             const PlotOptions& options);

void write_file(const std::string& path, const std::string& content);

/// mean +- 1.96 * stderr over per-seed values; returns (mean, lo, hi).
struct ConfidenceInterval {
  double mean;
  double lo;
  double hi;
};
ConfidenceInterval confidence95(const std::vector<double>& values);

}  // namespace splitbench
