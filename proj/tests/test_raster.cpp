#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "vecmap/raster.hpp"

using namespace vecmap;

namespace {

MapElement make_line(std::vector<Point2> pts,
                     MapClass cls = MapClass::kDivider, bool closed = false) {
  MapElement e;
  e.points = std::move(pts);
  e.class_id = cls;
  e.closed = closed;
  return e;
}

// Brute-force per-pixel oracle over the whole canvas.
ClassMasks raster_oracle(const std::vector<MapElement>& elements,
                         const RasterConfig& cfg) {
  ClassMasks out;
  out.width = cfg.width;
  out.height = cfg.height;
  for (auto& m : out.masks) {
    m.assign(static_cast<std::size_t>(cfg.width) * cfg.height, 0);
  }
  const double px = cfg.extent_x / cfg.width;
  const double py = cfg.extent_y / cfg.height;
  for (int j = 0; j < cfg.height; ++j) {
    for (int i = 0; i < cfg.width; ++i) {
      const Point2 c{-0.5 * cfg.extent_x + (i + 0.5) * px,
                     -0.5 * cfg.extent_y + (j + 0.5) * py};
      for (const MapElement& e : elements) {
        const std::size_t n_edges =
            e.closed ? e.points.size() : e.points.size() - 1;
        double best = 1e300;
        for (std::size_t k = 0; k < n_edges; ++k) {
          const Point2 a = e.points[k];
          const Point2 b = e.points[(k + 1) % e.points.size()];
          const double abx = b.x - a.x, aby = b.y - a.y;
          const double len2 = abx * abx + aby * aby;
          double t = len2 > 0
                         ? ((c.x - a.x) * abx + (c.y - a.y) * aby) / len2
                         : 0.0;
          t = std::clamp(t, 0.0, 1.0);
          const double dx = c.x - (a.x + t * abx), dy = c.y - (a.y + t * aby);
          best = std::min(best, std::sqrt(dx * dx + dy * dy));
        }
        if (best <= 0.5 * cfg.line_width) {
          out.masks[static_cast<int>(e.class_id)]
                   [static_cast<std::size_t>(j) * cfg.width + i] = 1;
        }
      }
    }
  }
  return out;
}

bool masks_equal(const ClassMasks& a, const ClassMasks& b) {
  for (int c = 0; c < kNumClasses; ++c) {
    if (a.masks[c] != b.masks[c]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("empty input rasterizes to all-zero masks") {
  auto m = rasterize({});
  for (int c = 0; c < kNumClasses; ++c) {
    for (auto v : m.masks[c]) CHECK(v == 0);
  }
  CHECK(m.width == 200);
  CHECK(m.height == 400);
}

TEST_CASE("axis-aligned segment matches the per-pixel oracle exactly") {
  RasterConfig cfg;
  auto elems = std::vector<MapElement>{make_line({{0, -15}, {0, 15}})};
  auto fast = rasterize(elems, cfg);
  auto slow = raster_oracle(elems, cfg);
  CHECK(masks_equal(fast, slow));

  std::size_t set_count = 0;
  for (auto v : fast.masks[0]) set_count += v;
  // 30 m x 2 m stroke at 0.3 m pixels, plus rounded caps
  CHECK(set_count > 500);
  CHECK(set_count < 900);
}

TEST_CASE("random scenes match the per-pixel oracle exactly") {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> u(-28, 28);
  for (int trial = 0; trial < 12; ++trial) {
    std::vector<MapElement> elems;
    for (int i = 0; i < 4; ++i) {
      std::vector<Point2> pts;
      for (int k = 0; k < 3; ++k) pts.push_back({u(rng), u(rng) * 2});
      elems.push_back(make_line(pts, static_cast<MapClass>(i % 3),
                                i % 3 == 1));
    }
    RasterConfig cfg;
    cfg.width = 100;
    cfg.height = 200;
    CHECK(masks_equal(rasterize(elems, cfg), raster_oracle(elems, cfg)));
  }
}

TEST_CASE("rasterize is deterministic") {
  auto elems = std::vector<MapElement>{
      make_line({{-5, -20}, {3, 10}, {7, 25}}, MapClass::kBoundary)};
  CHECK(masks_equal(rasterize(elems), rasterize(elems)));
}

TEST_CASE("miou basics") {
  RasterConfig cfg;
  cfg.width = 40;
  cfg.height = 40;
  cfg.extent_x = 12;
  cfg.extent_y = 12;

  auto a = rasterize({make_line({{-3, 0}, {3, 0}})}, cfg);
  CHECK(miou(a, a).iou[0] == doctest::Approx(1.0));
  CHECK(miou(a, a).mean_iou == doctest::Approx(1.0));  // 0/0 classes count 1

  auto b = rasterize({make_line({{-3, 4}, {3, 4}})}, cfg);
  CHECK(miou(a, b).iou[0] == doctest::Approx(0.0));  // disjoint

  auto empty = rasterize({}, cfg);
  CHECK(miou(empty, empty).mean_iou == doctest::Approx(1.0));
}

TEST_CASE("half-overlap rectangles give IoU 1/3") {
  // two unit-thickness horizontal bars shifted by half their length:
  // intersection is half a bar, union is 1.5 bars
  ClassMasks a, b;
  a.width = b.width = 60;
  a.height = b.height = 20;
  for (int c = 0; c < kNumClasses; ++c) {
    a.masks[c].assign(60 * 20, 0);
    b.masks[c].assign(60 * 20, 0);
  }
  for (int j = 5; j < 15; ++j) {
    for (int i = 0; i < 40; ++i) a.masks[1][static_cast<std::size_t>(j) * 60 + i] = 1;
    for (int i = 20; i < 60; ++i) b.masks[1][static_cast<std::size_t>(j) * 60 + i] = 1;
  }
  auto r = miou(a, b);
  CHECK(r.iou[1] == doctest::Approx(1.0 / 3.0));
  CHECK(r.iou[0] == doctest::Approx(1.0));  // both empty
  CHECK(r.mean_iou == doctest::Approx((1.0 + 1.0 / 3.0 + 1.0) / 3.0));
}
