#pragma once

// Standalone SVG line charts: one panel per channel, series overlaid.
// Series 0 is drawn as a thin black line on top of series 1 (thick gray);
// further series get distinct colours.

#include <string>
#include <vector>

#include "innerseries/model.hpp"

namespace innerseries {

struct PlotSeries {
  std::string label;
  SampleMatrix values;
  double dt = 1.0;
  /// Empty means every sample is drawn; invalid samples break the line.
  Mask valid;
};

PlotSeries plot_series(const Trajectory& traj, std::string label);
PlotSeries plot_series(const WeightSeries& w, std::string label);

/// Renders samples [begin, end) of every series.
std::string render_svg(const std::vector<PlotSeries>& series, Eigen::Index begin,
                       Eigen::Index end, const std::string& title = "");

void plot_svg(const std::vector<PlotSeries>& series, Eigen::Index begin, Eigen::Index end,
              const std::string& path, const std::string& title = "");

}  // namespace innerseries
