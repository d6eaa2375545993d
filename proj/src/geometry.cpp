#include "vecmap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>

namespace vecmap {

namespace {

constexpr double kParamEps = 1e-12;

double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }

Point2 lerp(Point2 p, Point2 q, double t) {
  return {p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
}

struct Interval {
  double t0;
  double t1;
};

// Produces the inside-portions of one segment as sorted parameter intervals.
// Interval endpoints that coincide with the segment endpoints must be exact
// 0 or 1 so the run stitcher can rely on them.
using SegmentClipFn =
    std::function<std::vector<Interval>(Point2, Point2)>;

std::vector<Interval> box_intervals(Point2 p, Point2 q, double he) {
  const double dx = q.x - p.x;
  const double dy = q.y - p.y;
  double t0 = 0.0, t1 = 1.0;
  const double ps[4] = {-dx, dx, -dy, dy};
  const double qs[4] = {p.x + he, he - p.x, p.y + he, he - p.y};
  for (int i = 0; i < 4; ++i) {
    if (ps[i] == 0.0) {
      if (qs[i] < 0.0) return {};
    } else {
      const double r = qs[i] / ps[i];
      if (ps[i] < 0.0) {
        if (r > t0) t0 = r;
      } else {
        if (r < t1) t1 = r;
      }
    }
  }
  if (t1 - t0 <= kParamEps) return {};
  return {Interval{t0, t1}};
}

// Wedge of half-angle `ha` around +Y. Crossing parameters against the two
// boundary rays are computed exactly, then sub-intervals are classified by
// their midpoints. Works for any ha in (0, pi], convex or not.
std::vector<Interval> wedge_intervals(Point2 p, Point2 q, double ha) {
  auto inside = [ha](Point2 v) {
    return std::abs(bearing(v)) <= ha + 1e-12;
  };
  const Point2 rays[2] = {{std::sin(ha), std::cos(ha)},
                          {-std::sin(ha), std::cos(ha)}};
  std::vector<double> cuts{0.0, 1.0};
  const Point2 d = q - p;
  for (const Point2& ray : rays) {
    const double den = cross(ray, d);
    if (std::abs(den) < 1e-15) continue;  // parallel to this ray
    const double t = -cross(ray, p) / den;
    if (t <= kParamEps || t >= 1.0 - kParamEps) continue;
    const Point2 hit = lerp(p, q, t);
    if (dot(hit, ray) < -1e-12) continue;  // on the line but behind the apex
    cuts.push_back(t);
  }
  std::sort(cuts.begin(), cuts.end());
  std::vector<Interval> out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] - cuts[i] <= kParamEps) continue;
    const Point2 mid = lerp(p, q, 0.5 * (cuts[i] + cuts[i + 1]));
    if (!inside(mid)) continue;
    if (!out.empty() && out.back().t1 == cuts[i]) {
      out.back().t1 = cuts[i + 1];
    } else {
      out.push_back({cuts[i], cuts[i + 1]});
    }
  }
  return out;
}

void drop_degenerate_points(std::vector<Point2>& pts) {
  std::vector<Point2> kept;
  kept.reserve(pts.size());
  for (const Point2& p : pts) {
    if (kept.empty() || distance(kept.back(), p) > 1e-12) kept.push_back(p);
  }
  pts = std::move(kept);
}

// Clips one element with the given per-segment rule, splitting it into runs
// at the region boundary. A closed element survives intact only if every
// edge lies fully inside; any cut opens it.
std::vector<MapElement> clip_element(const MapElement& e,
                                     const SegmentClipFn& fn) {
  if (e.points.size() < 2) return {};
  const std::size_t n_edges = e.closed ? e.points.size() : e.points.size() - 1;

  std::vector<std::vector<Interval>> per_edge(n_edges);
  bool untouched = true;
  for (std::size_t k = 0; k < n_edges; ++k) {
    const Point2 p = e.points[k];
    const Point2 q = e.points[(k + 1) % e.points.size()];
    per_edge[k] = fn(p, q);
    if (per_edge[k].size() != 1 || per_edge[k][0].t0 != 0.0 ||
        per_edge[k][0].t1 != 1.0) {
      untouched = false;
    }
  }
  if (untouched) return {e};

  std::vector<std::vector<Point2>> runs;
  std::vector<Point2> run;
  auto flush = [&] {
    if (!run.empty()) runs.push_back(std::move(run));
    run.clear();
  };
  for (std::size_t k = 0; k < n_edges; ++k) {
    const Point2 p = e.points[k];
    const Point2 q = e.points[(k + 1) % e.points.size()];
    if (per_edge[k].empty()) {
      flush();
      continue;
    }
    for (std::size_t i = 0; i < per_edge[k].size(); ++i) {
      const Interval& iv = per_edge[k][i];
      const Point2 a = iv.t0 == 0.0 ? p : lerp(p, q, iv.t0);
      const Point2 b = iv.t1 == 1.0 ? q : lerp(p, q, iv.t1);
      if (i == 0 && iv.t0 == 0.0 && !run.empty()) {
        run.push_back(b);
      } else {
        flush();
        run = {a, b};
      }
      if (iv.t1 != 1.0) flush();
    }
  }
  flush();

  // A closed element whose cycle start sits inside has its first and last
  // runs forming one contiguous piece across the wrap.
  if (e.closed && runs.size() >= 2) {
    const bool starts_inside =
        !per_edge[0].empty() && per_edge[0][0].t0 == 0.0;
    const bool ends_inside =
        !per_edge[n_edges - 1].empty() && per_edge[n_edges - 1].back().t1 == 1.0;
    if (starts_inside && ends_inside) {
      std::vector<Point2> merged = std::move(runs.back());
      merged.insert(merged.end(), runs.front().begin() + 1,
                    runs.front().end());
      runs.back() = std::move(merged);
      runs.erase(runs.begin());
      std::rotate(runs.begin(), runs.end() - 1, runs.end());
    }
  }

  std::vector<MapElement> out;
  for (auto& pts : runs) {
    drop_degenerate_points(pts);
    if (pts.size() < 2) continue;
    MapElement piece;
    piece.points = std::move(pts);
    piece.class_id = e.class_id;
    piece.closed = false;
    out.push_back(std::move(piece));
  }
  return out;
}

std::vector<MapElement> clip_all(const std::vector<MapElement>& elements,
                                 const SegmentClipFn& fn) {
  std::vector<MapElement> out;
  for (const MapElement& e : elements) {
    auto pieces = clip_element(e, fn);
    out.insert(out.end(), std::make_move_iterator(pieces.begin()),
               std::make_move_iterator(pieces.end()));
  }
  return out;
}

}  // namespace

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

const char* class_name(MapClass c) {
  switch (c) {
    case MapClass::kDivider: return "divider";
    case MapClass::kPedCrossing: return "pedestrian_crossing";
    case MapClass::kBoundary: return "boundary";
  }
  return "unknown";
}

double arc_length(const MapElement& e) {
  if (e.points.size() < 2) return 0.0;
  double total = 0.0;
  const std::size_t n_edges = e.closed ? e.points.size() : e.points.size() - 1;
  for (std::size_t k = 0; k < n_edges; ++k) {
    total += distance(e.points[k], e.points[(k + 1) % e.points.size()]);
  }
  return total;
}

CameraSpec canonical_camera(CameraSlot slot) {
  const double deg = kPi / 180.0;
  switch (slot) {
    case CameraSlot::F:  return {0, 0.0, 70.0 * deg};
    case CameraSlot::FL: return {1, 55.0 * deg, 70.0 * deg};
    case CameraSlot::FR: return {2, -55.0 * deg, 70.0 * deg};
    case CameraSlot::B:  return {3, kPi, 110.0 * deg};
    case CameraSlot::BL: return {4, 110.0 * deg, 70.0 * deg};
    case CameraSlot::BR: return {5, -110.0 * deg, 70.0 * deg};
  }
  throw std::invalid_argument("unknown camera slot");
}

const char* camera_slot_name(int view_id) {
  static const char* names[6] = {"F", "FL", "FR", "B", "BL", "BR"};
  if (view_id >= 0 && view_id < 6) return names[view_id];
  return "?";
}

Point2 rotate(Point2 p, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * p.x - s * p.y, s * p.x + c * p.y};
}

double bearing(Point2 p) {
  if (p.x == 0.0 && p.y == 0.0) return 0.0;
  return std::atan2(p.x, p.y);
}

double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a <= 0.0) a += 2.0 * kPi;
  return a - kPi;
}

std::vector<MapElement> extract_patch(const std::vector<MapElement>& world_map,
                                      const EgoPose& pose,
                                      double half_extent) {
  if (half_extent <= 0.0) throw std::invalid_argument("half_extent must be > 0");
  if (!std::isfinite(pose.x) || !std::isfinite(pose.y) ||
      !std::isfinite(pose.heading)) {
    throw std::invalid_argument("non-finite ego pose");
  }
  std::vector<MapElement> ego;
  ego.reserve(world_map.size());
  for (const MapElement& e : world_map) {
    MapElement t = e;
    for (Point2& p : t.points) {
      p = rotate(p - Point2{pose.x, pose.y}, -pose.heading);
    }
    ego.push_back(std::move(t));
  }
  return clip_all(ego, [half_extent](Point2 p, Point2 q) {
    return box_intervals(p, q, half_extent);
  });
}

std::vector<MapElement> clip_fov(const std::vector<MapElement>& elements,
                                 const CameraSpec& cam, double min_length) {
  if (cam.hfov <= 0.0) throw std::invalid_argument("hfov must be > 0");
  if (cam.hfov >= 2.0 * kPi) return elements;
  const double ha = 0.5 * cam.hfov;

  // Clip in the camera-rotated frame where the wedge is symmetric about +Y,
  // then rotate the pieces back so the output stays in the ego frame.
  std::vector<MapElement> rotated;
  rotated.reserve(elements.size());
  for (const MapElement& e : elements) {
    MapElement t = e;
    for (Point2& p : t.points) p = rotate(p, -cam.yaw);
    rotated.push_back(std::move(t));
  }
  auto clipped = clip_all(rotated, [ha](Point2 p, Point2 q) {
    return wedge_intervals(p, q, ha);
  });

  std::vector<MapElement> out;
  for (MapElement& e : clipped) {
    if (arc_length(e) < min_length) continue;
    for (Point2& p : e.points) p = rotate(p, cam.yaw);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<MapElement> rotate_to_camera(const std::vector<MapElement>& elements,
                                         const CameraSpec& cam) {
  std::vector<MapElement> out;
  out.reserve(elements.size());
  for (const MapElement& e : elements) {
    MapElement t = e;
    for (Point2& p : t.points) p = rotate(p, -cam.yaw);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<MapElement> crop_patch(const std::vector<MapElement>& elements,
                                   double half_extent) {
  if (half_extent <= 0.0) throw std::invalid_argument("half_extent must be > 0");
  return clip_all(elements, [half_extent](Point2 p, Point2 q) {
    return box_intervals(p, q, half_extent);
  });
}

std::vector<MapElement> gt_pipeline(const std::vector<MapElement>& world_map,
                                    const EgoPose& pose, const CameraSpec& cam,
                                    double outer_half_extent,
                                    double inner_half_extent,
                                    double min_length) {
  auto patch = extract_patch(world_map, pose, outer_half_extent);
  auto visible = clip_fov(patch, cam, min_length);
  auto centric = rotate_to_camera(visible, cam);
  return crop_patch(centric, inner_half_extent);
}

MapElement resample_polyline(const MapElement& e, int num_points) {
  if (num_points < 2) throw std::invalid_argument("num_points must be >= 2");
  if (e.points.size() < 2) throw std::invalid_argument("polyline needs >= 2 points");
  const double total = arc_length(e);
  if (total <= 0.0) throw std::invalid_argument("zero-length polyline");

  const std::size_t n_edges = e.closed ? e.points.size() : e.points.size() - 1;
  std::vector<double> cum(n_edges + 1, 0.0);
  for (std::size_t k = 0; k < n_edges; ++k) {
    cum[k + 1] = cum[k] + distance(e.points[k],
                                   e.points[(k + 1) % e.points.size()]);
  }

  MapElement out;
  out.class_id = e.class_id;
  out.closed = e.closed;
  out.points.reserve(num_points);
  const double step = e.closed ? total / num_points : total / (num_points - 1);
  std::size_t edge = 0;
  for (int i = 0; i < num_points; ++i) {
    if (!e.closed && i == num_points - 1) {
      out.points.push_back(e.points.back());
      break;
    }
    const double s = i * step;
    while (edge + 1 < n_edges && cum[edge + 1] < s) ++edge;
    const double seg_len = cum[edge + 1] - cum[edge];
    const double t = seg_len > 0.0 ? (s - cum[edge]) / seg_len : 0.0;
    const Point2 p = e.points[edge];
    const Point2 q = e.points[(edge + 1) % e.points.size()];
    out.points.push_back(i == 0 ? e.points.front()
                                : Point2{p.x + t * (q.x - p.x),
                                         p.y + t * (q.y - p.y)});
  }
  return out;
}

MapElement normalize_coords(const MapElement& e, double half_extent) {
  if (half_extent <= 0.0) throw std::invalid_argument("half_extent must be > 0");
  MapElement out = e;
  for (Point2& p : out.points) {
    if (std::abs(p.x) > half_extent + 1e-9 ||
        std::abs(p.y) > half_extent + 1e-9) {
      throw std::invalid_argument("point outside patch; crop before normalizing");
    }
    p.x = (p.x + half_extent) / (2.0 * half_extent);
    p.y = (p.y + half_extent) / (2.0 * half_extent);
  }
  return out;
}

MapElement denormalize_coords(const MapElement& e, double half_extent) {
  if (half_extent <= 0.0) throw std::invalid_argument("half_extent must be > 0");
  MapElement out = e;
  for (Point2& p : out.points) {
    if (p.x < -1e-9 || p.x > 1.0 + 1e-9 || p.y < -1e-9 || p.y > 1.0 + 1e-9) {
      throw std::invalid_argument("normalized point outside [0,1]^2");
    }
    p.x = p.x * 2.0 * half_extent - half_extent;
    p.y = p.y * 2.0 * half_extent - half_extent;
  }
  return out;
}

}  // namespace vecmap
