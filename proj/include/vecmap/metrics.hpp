#pragma once

#include <array>
#include <optional>
#include <vector>

#include "vecmap/geometry.hpp"
#include "vecmap/serial.hpp"

namespace vecmap {

inline constexpr std::array<double, 3> kChamferThresholds{0.5, 1.0, 1.5};

/// Symmetric Chamfer distance in metres. Both elements are resampled to
/// `samples` points by arc length first (degenerate zero-length geometry
/// falls back to its raw points).
double chamfer(const MapElement& pred, const MapElement& gt, int samples = 100);

/// Average precision for one class at one Chamfer threshold. Predictions are
/// visited in descending score order; each claims the lowest-Chamfer
/// still-unclaimed ground truth of the class and is a true positive iff the
/// claimed distance is within the threshold. AP is the area under the
/// all-points interpolated precision-recall curve. With no ground truth the
/// result is 1 when there are also no predictions, else 0.
double ap_at(const std::vector<ScoredElement>& preds,
             const std::vector<MapElement>& gts, MapClass cls,
             double threshold_m, int samples = 100);

/// ap[class][threshold index], thresholds as in kChamferThresholds.
using ApGrid = std::array<std::array<double, 3>, kNumClasses>;

struct ViewSet {
  int view_id{0};
  std::vector<ScoredElement> preds;
  std::vector<MapElement> gts;
};

struct APResult {
  struct PerView {
    int view_id{0};
    ApGrid ap{};
    double mean_ap{0.0};
    int num_gts{0};
    int num_preds{0};
  };
  std::vector<PerView> views;
  ApGrid ap{};        // per cell, averaged over views
  double mean_ap{0.0};  // mean over classes and thresholds, macro over views
};

APResult map_score(const std::vector<ViewSet>& views, int samples = 100);

/// Maps externally produced predictions onto the per-view visible region so
/// they score against the same ground truth as native per-view output:
/// FOV clipping, camera-centric rotation, then the final crop. Inputs are
/// ego-centric; pass `pose` to first transform world-frame predictions.
std::vector<ScoredElement> align_for_eval(
    const std::vector<ScoredElement>& preds, const CameraSpec& cam,
    std::optional<EgoPose> pose = std::nullopt,
    double crop_half_extent = 30.0, double min_length = 0.5);

}  // namespace vecmap
