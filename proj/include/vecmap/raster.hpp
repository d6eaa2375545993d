#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "vecmap/geometry.hpp"

namespace vecmap {

/// BEV canvas mapping. Defaults: 200x400 px spanning 60 m laterally and
/// 120 m longitudinally, i.e. square 0.3 m pixels, lines stroked 2 m wide.
struct RasterConfig {
  int width{200};
  int height{400};
  double extent_x{60.0};
  double extent_y{120.0};
  double line_width{2.0};
};

struct ClassMasks {
  int width{0};
  int height{0};
  std::array<std::vector<std::uint8_t>, kNumClasses> masks;

  bool at(int cls, int row, int col) const {
    return masks[cls][static_cast<std::size_t>(row) * width + col] != 0;
  }
};

/// A pixel is set iff its centre lies within line_width/2 of the polyline.
ClassMasks rasterize(const std::vector<MapElement>& elements,
                     const RasterConfig& cfg = {});

struct IoUResult {
  std::array<double, kNumClasses> iou{};
  double mean_iou{0.0};
};

/// Per-class intersection over union; 0/0 counts as 1 so empty scenes do not
/// poison averages.
IoUResult miou(const ClassMasks& pred, const ClassMasks& gt);

}  // namespace vecmap
