#pragma once

#include "radarloop/evaluation.hpp"
#include "radarloop/geometry.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace radarloop {

struct PlotSeries {
  std::string label;
  std::string color;  // any SVG color
  std::vector<Vec2> points;
};

/// Polylines in a common, equal-aspect frame.
std::string trajectory_svg(const std::vector<PlotSeries>& series, const std::string& title);

/// Precision over recall.
std::string pr_curve_svg(const std::vector<PrPoint>& curve, const std::string& title);

/// Grayscale heatmap; NaN cells are left blank.
std::string heatmap_svg(const Eigen::MatrixXd& m, const std::string& title);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace radarloop
