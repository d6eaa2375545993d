#include "vecmap/raster.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vecmap {

namespace {

double point_segment_distance(Point2 p, Point2 a, Point2 b) {
  const Point2 ab = b - a;
  const double len2 = ab.x * ab.x + ab.y * ab.y;
  if (len2 == 0.0) return distance(p, a);
  double t = ((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return distance(p, {a.x + t * ab.x, a.y + t * ab.y});
}

}  // namespace

ClassMasks rasterize(const std::vector<MapElement>& elements,
                     const RasterConfig& cfg) {
  if (cfg.width <= 0 || cfg.height <= 0) {
    throw std::invalid_argument("canvas must be positive");
  }
  ClassMasks out;
  out.width = cfg.width;
  out.height = cfg.height;
  for (auto& m : out.masks) {
    m.assign(static_cast<std::size_t>(cfg.width) * cfg.height, 0);
  }

  const double px = cfg.extent_x / cfg.width;   // metres per pixel, x
  const double py = cfg.extent_y / cfg.height;  // metres per pixel, y
  const double radius = 0.5 * cfg.line_width;

  auto col_center = [&](int i) { return -0.5 * cfg.extent_x + (i + 0.5) * px; };
  auto row_center = [&](int j) { return -0.5 * cfg.extent_y + (j + 0.5) * py; };

  for (const MapElement& e : elements) {
    if (e.points.size() < 2) continue;
    auto& mask = out.masks[static_cast<int>(e.class_id)];
    const std::size_t n_edges = e.closed ? e.points.size() : e.points.size() - 1;
    for (std::size_t k = 0; k < n_edges; ++k) {
      const Point2 a = e.points[k];
      const Point2 b = e.points[(k + 1) % e.points.size()];
      const double x0 = std::min(a.x, b.x) - radius;
      const double x1 = std::max(a.x, b.x) + radius;
      const double y0 = std::min(a.y, b.y) - radius;
      const double y1 = std::max(a.y, b.y) + radius;
      // pixel index ranges whose centres could be in reach
      const int i0 = std::max(0, static_cast<int>(
          std::floor((x0 + 0.5 * cfg.extent_x) / px - 0.5)));
      const int i1 = std::min(cfg.width - 1, static_cast<int>(
          std::ceil((x1 + 0.5 * cfg.extent_x) / px)));
      const int j0 = std::max(0, static_cast<int>(
          std::floor((y0 + 0.5 * cfg.extent_y) / py - 0.5)));
      const int j1 = std::min(cfg.height - 1, static_cast<int>(
          std::ceil((y1 + 0.5 * cfg.extent_y) / py)));
      for (int j = j0; j <= j1; ++j) {
        for (int i = i0; i <= i1; ++i) {
          if (mask[static_cast<std::size_t>(j) * cfg.width + i]) continue;
          const Point2 c{col_center(i), row_center(j)};
          if (point_segment_distance(c, a, b) <= radius) {
            mask[static_cast<std::size_t>(j) * cfg.width + i] = 1;
          }
        }
      }
    }
  }
  return out;
}

IoUResult miou(const ClassMasks& pred, const ClassMasks& gt) {
  if (pred.width != gt.width || pred.height != gt.height) {
    throw std::invalid_argument("mask shapes differ");
  }
  IoUResult out;
  double sum = 0.0;
  for (int c = 0; c < kNumClasses; ++c) {
    std::size_t inter = 0, uni = 0;
    const auto& pm = pred.masks[c];
    const auto& gm = gt.masks[c];
    for (std::size_t i = 0; i < pm.size(); ++i) {
      const bool p = pm[i] != 0, g = gm[i] != 0;
      inter += (p && g) ? 1 : 0;
      uni += (p || g) ? 1 : 0;
    }
    out.iou[c] = uni == 0 ? 1.0 : static_cast<double>(inter) /
                                      static_cast<double>(uni);
    sum += out.iou[c];
  }
  out.mean_iou = sum / kNumClasses;
  return out;
}

}  // namespace vecmap
