#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace vecmap {

constexpr double kPi = 3.14159265358979323846;

/// Ego/camera-frame convention used throughout: x is lateral
/// (right-positive), y is forward. Positive yaw/heading rotates the
/// forward axis toward the left (counterclockwise).
struct Point2 {
  double x{0.0};
  double y{0.0};
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }

double distance(Point2 a, Point2 b);

enum class MapClass : int {
  kDivider = 0,
  kPedCrossing = 1,
  kBoundary = 2,
};
constexpr int kNumClasses = 3;

const char* class_name(MapClass c);

/// A classed polyline. For closed elements the first and last points are
/// connected implicitly; the closing point is never duplicated.
struct MapElement {
  std::vector<Point2> points;
  MapClass class_id{MapClass::kDivider};
  bool closed{false};

  std::size_t size() const { return points.size(); }
};

/// Total arc length, including the wrap edge for closed elements.
double arc_length(const MapElement& e);

struct CameraSpec {
  int view_id{0};
  double yaw{0.0};   // camera forward relative to ego forward, radians
  double hfov{0.0};  // horizontal field of view, radians, (0, 2*pi]
};

struct EgoPose {
  double x{0.0};
  double y{0.0};
  double heading{0.0};  // radians, (-pi, pi]
};

/// Canonical six-camera slots. Yaws follow the convention above:
/// FL (+55 deg) looks front-left, B (180 deg) looks backward.
enum class CameraSlot : int { F = 0, FL = 1, FR = 2, B = 3, BL = 4, BR = 5 };

CameraSpec canonical_camera(CameraSlot slot);
const char* camera_slot_name(int view_id);

// ---------------------------------------------------------------------------
// Ground-truth conditioning pipeline
// ---------------------------------------------------------------------------

/// Step 1: transform world elements into the ego frame of `pose` and clip to
/// the axis-aligned square [-half_extent, half_extent]^2. Polylines crossing
/// the boundary are split at exact intersection points; elements fully
/// outside are dropped. Closed elements that get cut become open.
std::vector<MapElement> extract_patch(const std::vector<MapElement>& world_map,
                                      const EgoPose& pose, double half_extent);

/// Step 2: clip ego-frame elements against the angular wedge of half-angle
/// hfov/2 around the camera's yaw direction. Crossings are split at exact
/// wedge-edge intersections. Output pieces shorter than `min_length` metres
/// are discarded. hfov >= 2*pi is the identity.
std::vector<MapElement> clip_fov(const std::vector<MapElement>& elements,
                                 const CameraSpec& cam,
                                 double min_length = 0.5);

/// Step 3: rotate ego-frame elements by -yaw so the camera forward axis
/// becomes +Y.
std::vector<MapElement> rotate_to_camera(const std::vector<MapElement>& elements,
                                         const CameraSpec& cam);

/// Step 4: clip to [-half_extent, half_extent]^2 without any pose transform.
std::vector<MapElement> crop_patch(const std::vector<MapElement>& elements,
                                   double half_extent);

/// Runs steps 1-4 for one camera. `outer_half_extent` defaults to the 120x120
/// extraction patch, `inner_half_extent` to the final 60x60 crop.
std::vector<MapElement> gt_pipeline(const std::vector<MapElement>& world_map,
                                    const EgoPose& pose, const CameraSpec& cam,
                                    double outer_half_extent = 60.0,
                                    double inner_half_extent = 30.0,
                                    double min_length = 0.5);

/// Resamples to `num_points` equally spaced by arc length. Open polylines
/// keep their endpoints exactly; closed ones are sampled around the full
/// cycle starting at point 0 and stay closed. Rejects degenerate input.
MapElement resample_polyline(const MapElement& e, int num_points);

/// Affine map from [-half_extent, half_extent]^2 to [0,1]^2. Rejects points
/// outside the square; callers must crop first.
MapElement normalize_coords(const MapElement& e, double half_extent);
MapElement denormalize_coords(const MapElement& e, double half_extent);

// ---------------------------------------------------------------------------
// Shared low-level helpers
// ---------------------------------------------------------------------------

Point2 rotate(Point2 p, double angle);

/// Signed bearing of `p` relative to the +Y axis, positive to the right.
/// The origin itself has bearing 0.
double bearing(Point2 p);

/// Wraps an angle difference into (-pi, pi].
double wrap_angle(double a);

}  // namespace vecmap
