#pragma once

#include <string>
#include <vector>

namespace pulsedeconv::detail {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Static line chart with linear axes, markers and a legend. Non-finite
/// points are skipped.
std::string line_plot_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<PlotSeries>& series);

}  // namespace pulsedeconv::detail
