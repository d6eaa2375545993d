#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vecmap/geometry.hpp"
#include "vecmap/serial.hpp"

namespace vecmap {

struct XyPoint {
  double x{0};
  double y{0};
};

struct XySeries {
  std::string label;
  std::string color{"#1f77b4"};
  std::vector<XyPoint> points;
};

/// Line chart (PR curves, loss curves) written as a standalone SVG file.
void write_line_chart(const std::filesystem::path& path,
                      const std::string& title, const std::string& x_label,
                      const std::string& y_label,
                      const std::vector<XySeries>& series, double x_min,
                      double x_max, double y_min, double y_max);

/// Top-down overlay of ground truth (grey) and predictions (class colours),
/// camera-centric metres mapped into a square canvas.
void write_bev_overlay(const std::filesystem::path& path,
                       const std::vector<MapElement>& gts,
                       const std::vector<ScoredElement>& preds,
                       double half_extent, double min_score = 0.0);

}  // namespace vecmap
