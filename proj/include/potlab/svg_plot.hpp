#ifndef POTLAB_SVG_PLOT_HPP_
#define POTLAB_SVG_PLOT_HPP_

#include <string>
#include <vector>

#include "potlab/harness.hpp"

namespace potlab {

// Log-log line chart of median nash_gap vs n, one series per algorithm, with
// dashed reference lines of slope -1 and -0.5 through the first point.
// Non-positive medians are dropped from the chart.
std::string gap_plot_svg(const std::vector<SweepRow>& rows,
                         const std::string& title = "nash gap vs n");

}  // namespace potlab

#endif  // POTLAB_SVG_PLOT_HPP_
