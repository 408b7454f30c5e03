#include "splitbench/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace splitbench {

namespace {

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

struct Extent {
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
};

Extent data_extent(const std::vector<PlotSeries>& series) {
  Extent e;
  bool first = true;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double lo = i < s.ci_low.size() ? s.ci_low[i] : s.y[i];
      const double hi = i < s.ci_high.size() ? s.ci_high[i] : s.y[i];
      if (first) {
        e = {s.x[i], s.x[i], lo, hi};
        first = false;
      } else {
        e.xmin = std::min(e.xmin, s.x[i]);
        e.xmax = std::max(e.xmax, s.x[i]);
        e.ymin = std::min(e.ymin, lo);
        e.ymax = std::max(e.ymax, hi);
      }
    }
  }
  if (e.xmax == e.xmin) e.xmax = e.xmin + 1;
  if (e.ymax == e.ymin) e.ymax = e.ymin + 1;
  return e;
}

struct Frame {
  int left = 60, right = 20, top = 36, bottom = 46;
  int width, height;
  Extent ext;
  double sx(double x) const {
    return left + (x - ext.xmin) / (ext.xmax - ext.xmin) * (width - left - right);
  }
  double sy(double y) const {
    return height - bottom - (y - ext.ymin) / (ext.ymax - ext.ymin) * (height - top - bottom);
  }
};

void chart_header(std::ostringstream& os, const PlotOptions& opt) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\""
     << opt.height << "\" viewBox=\"0 0 " << opt.width << " " << opt.height << "\">\n";
  os << "<rect width=\"" << opt.width << "\" height=\"" << opt.height << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << opt.width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
     << "font-family=\"sans-serif\" font-size=\"14\">" << opt.title << "</text>\n";
}

void axes(std::ostringstream& os, const Frame& f, const PlotOptions& opt) {
  os << "<line x1=\"" << f.left << "\" y1=\"" << f.height - f.bottom << "\" x2=\""
     << f.width - f.right << "\" y2=\"" << f.height - f.bottom
     << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  os << "<line x1=\"" << f.left << "\" y1=\"" << f.top << "\" x2=\"" << f.left << "\" y2=\""
     << f.height - f.bottom << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = f.ext.xmin + (f.ext.xmax - f.ext.xmin) * t / 4.0;
    const double yv = f.ext.ymin + (f.ext.ymax - f.ext.ymin) * t / 4.0;
    os << "<text x=\"" << num(f.sx(xv)) << "\" y=\"" << f.height - f.bottom + 16
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << num(xv)
       << "</text>\n";
    os << "<text x=\"" << f.left - 6 << "\" y=\"" << num(f.sy(yv) + 3)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << num(yv)
       << "</text>\n";
  }
  os << "<text x=\"" << (f.left + f.width - f.right) / 2 << "\" y=\"" << f.height - 8
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << opt.x_label
     << "</text>\n";
  os << "<text x=\"14\" y=\"" << (f.top + f.height - f.bottom) / 2
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
     << "transform=\"rotate(-90 14 " << (f.top + f.height - f.bottom) / 2 << ")\">"
     << opt.y_label << "</text>\n";
}

void legend(std::ostringstream& os, const std::vector<PlotSeries>& series, const Frame& f) {
  int y = f.top + 6;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % 8];
    os << "<rect x=\"" << f.width - f.right - 110 << "\" y=\"" << y - 8
       << "\" width=\"10\" height=\"10\" fill=\"" << color << "\"/>\n";
    os << "<text x=\"" << f.width - f.right - 96 << "\" y=\"" << y
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << series[i].label << "</text>\n";
    y += 16;
  }
}

}  // namespace

std::string render_line_chart(const std::vector<PlotSeries>& series, const PlotOptions& opt) {
  if (series.empty()) throw std::invalid_argument("render_line_chart: no series");
  std::ostringstream os;
  chart_header(os, opt);
  Frame f;
  f.width = opt.width;
  f.height = opt.height;
  f.ext = data_extent(series);
  axes(os, f, opt);

  for (std::size_t si = 0; si < series.size(); ++si) {
    const PlotSeries& s = series[si];
    const char* color = kPalette[si % 8];
    if (!s.ci_low.empty() && s.ci_low.size() == s.x.size() && s.ci_high.size() == s.x.size()) {
      os << "<polygon points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        os << num(f.sx(s.x[i])) << "," << num(f.sy(s.ci_high[i])) << " ";
      }
      for (std::size_t i = s.x.size(); i-- > 0;) {
        os << num(f.sx(s.x[i])) << "," << num(f.sy(s.ci_low[i])) << " ";
      }
      os << "\" fill=\"" << color << "\" opacity=\"0.15\"/>\n";
    }
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      os << num(f.sx(s.x[i])) << "," << num(f.sy(s.y[i])) << " ";
    }
    os << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      os << "<circle cx=\"" << num(f.sx(s.x[i])) << "\" cy=\"" << num(f.sy(s.y[i]))
         << "\" r=\"2.2\" fill=\"" << color << "\"/>\n";
    }
  }
  legend(os, series, f);
  os << "</svg>\n";
  return os.str();
}

std::string render_bar_chart(const std::vector<PlotSeries>& series,
                             const std::vector<std::string>& group_labels,
                             const PlotOptions& opt) {
  if (series.empty()) throw std::invalid_argument("render_bar_chart: no series");
  const std::size_t groups = group_labels.size();
  for (const auto& s : series) {
    if (s.y.size() != groups) {
      throw std::invalid_argument("render_bar_chart: series '" + s.label +
                                  "' does not match group count");
    }
  }
  std::ostringstream os;
  chart_header(os, opt);
  Frame f;
  f.width = opt.width;
  f.height = opt.height;
  f.ext = data_extent(series);
  f.ext.xmin = 0;
  f.ext.xmax = 1;
  f.ext.ymin = std::min(0.0, f.ext.ymin);
  axes(os, f, opt);

  const double plot_w = f.width - f.left - f.right;
  const double group_w = plot_w / groups;
  const double bar_w = group_w * 0.8 / series.size();
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t si = 0; si < series.size(); ++si) {
      const double x = f.left + g * group_w + group_w * 0.1 + si * bar_w;
      const double y0 = f.sy(0.0);
      const double y1 = f.sy(series[si].y[g]);
      os << "<rect x=\"" << num(x) << "\" y=\"" << num(std::min(y0, y1)) << "\" width=\""
         << num(bar_w * 0.9) << "\" height=\"" << num(std::abs(y0 - y1)) << "\" fill=\""
         << kPalette[si % 8] << "\"/>\n";
      if (g < series[si].ci_low.size() && g < series[si].ci_high.size()) {
        const double cx = x + bar_w * 0.45;
        os << "<line x1=\"" << num(cx) << "\" y1=\"" << num(f.sy(series[si].ci_low[g]))
           << "\" x2=\"" << num(cx) << "\" y2=\"" << num(f.sy(series[si].ci_high[g]))
           << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
      }
    }
    os << "<text x=\"" << num(f.left + g * group_w + group_w / 2) << "\" y=\""
       << f.height - f.bottom + 16
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
       << group_labels[g] << "</text>\n";
  }
  legend(os, series, f);
  os << "</svg>\n";
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_file: cannot open " + path);
  os.write(content.data(), static_cast<std::streamsize>(content.size()));
}

ConfidenceInterval confidence95(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("confidence95: no values");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (values.size() == 1) return {mean, mean, mean};
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size() - 1);
  const double stderr_ = std::sqrt(var / static_cast<double>(values.size()));
  return {mean, mean - 1.96 * stderr_, mean + 1.96 * stderr_};
}

}  // namespace splitbench
