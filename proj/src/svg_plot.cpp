#include "potlab/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "potlab/error.hpp"
#include "potlab/stats.hpp"

namespace potlab {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 130.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string gap_plot_svg(const std::vector<SweepRow>& rows,
                         const std::string& title) {
  std::map<std::string, std::map<int, std::vector<double>>> grouped;
  for (const auto& r : rows) grouped[r.algorithm][r.n].push_back(r.nash_gap);
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (auto& [alg, by_n] : grouped) {
    for (auto& [n, gaps] : by_n) {
      const double med = median(gaps);
      if (!(med > 0.0)) continue;
      const double lx = std::log10(static_cast<double>(n));
      const double ly = std::log10(med);
      series[alg].emplace_back(lx, ly);
      xmin = std::min(xmin, lx);
      xmax = std::max(xmax, lx);
      ymin = std::min(ymin, ly);
      ymax = std::max(ymax, ly);
    }
  }
  if (series.empty()) throw Error("plot: no positive median gaps to draw");
  // Reference lines span the x range; include their end points in y.
  const auto& anchor = series.begin()->second.front();
  for (double s : {-1.0, -0.5}) {
    const double y_end = anchor.second + s * (xmax - anchor.first);
    ymin = std::min(ymin, y_end);
    ymax = std::max(ymax, y_end);
  }
  xmin = std::floor(xmin * 2.0) / 2.0;
  xmax = std::ceil(xmax * 2.0) / 2.0;
  if (xmax <= xmin) xmax = xmin + 0.5;
  ymin = std::floor(ymin);
  ymax = std::ceil(ymax);
  if (ymax <= ymin) ymax = ymin + 1.0;

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double lx) { return kLeft + (lx - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double ly) { return kTop + (ymax - ly) / (ymax - ymin) * ph; };

  std::ostringstream out;
  out.precision(6);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" font-family=\"sans-serif\" "
      << "font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" "
      << "font-size=\"14\">" << escape(title) << "</text>\n";
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw
      << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double lx = xmin; lx <= xmax + 1e-9; lx += 0.5) {
    out << "<line x1=\"" << px(lx) << "\" y1=\"" << kTop + ph << "\" x2=\""
        << px(lx) << "\" y2=\"" << kTop + ph + 5 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << px(lx) << "\" y=\"" << kTop + ph + 18
        << "\" text-anchor=\"middle\">" << std::pow(10.0, lx) << "</text>\n";
  }
  for (double ly = ymin; ly <= ymax + 1e-9; ly += 1.0) {
    out << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << py(ly) << "\" x2=\""
        << kLeft << "\" y2=\"" << py(ly) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << kLeft - 8 << "\" y=\"" << py(ly) + 4
        << "\" text-anchor=\"end\">1e" << ly << "</text>\n";
  }
  out << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 10
      << "\" text-anchor=\"middle\">n (log scale)</text>\n";
  out << "<text x=\"16\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" "
      << "transform=\"rotate(-90 16 " << kTop + ph / 2
      << ")\">median nash gap (log scale)</text>\n";

  int legend = 0;
  auto legend_entry = [&](const std::string& label, const std::string& color,
                          bool dashed) {
    const double y = kTop + 14 + 18 * legend++;
    const double x = kLeft + pw + 12;
    out << "<line x1=\"" << x << "\" y1=\"" << y << "\" x2=\"" << x + 24
        << "\" y2=\"" << y << "\" stroke=\"" << color << "\" stroke-width=\"2\""
        << (dashed ? " stroke-dasharray=\"5,4\"" : "") << "/>\n";
    out << "<text x=\"" << x + 30 << "\" y=\"" << y + 4 << "\">" << escape(label)
        << "</text>\n";
  };

  const char* ref_colors[] = {"#555555", "#999999"};
  int k = 0;
  for (double s : {-1.0, -0.5}) {
    const double y_end = anchor.second + s * (xmax - anchor.first);
    out << "<line x1=\"" << px(anchor.first) << "\" y1=\"" << py(anchor.second)
        << "\" x2=\"" << px(xmax) << "\" y2=\"" << py(y_end) << "\" stroke=\""
        << ref_colors[k] << "\" stroke-dasharray=\"5,4\"/>\n";
    legend_entry(s == -1.0 ? "slope -1" : "slope -0.5", ref_colors[k], true);
    ++k;
  }
  int c = 0;
  for (const auto& [alg, pts] : series) {
    const char* color = kColors[c++ % 4];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2\" points=\"";
    for (const auto& [lx, ly] : pts) out << px(lx) << ',' << py(ly) << ' ';
    out << "\"/>\n";
    for (const auto& [lx, ly] : pts) {
      out << "<circle cx=\"" << px(lx) << "\" cy=\"" << py(ly)
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    legend_entry(alg, color, false);
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace potlab
