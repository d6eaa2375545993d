#include "vecmap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace vecmap {

namespace {

std::vector<Point2> sample_points(const MapElement& e, int samples) {
  if (e.points.empty()) throw std::invalid_argument("empty geometry");
  if (e.points.size() < 2 || arc_length(e) <= 0.0) return e.points;
  return resample_polyline(e, samples).points;
}

double mean_nearest(const std::vector<Point2>& from,
                    const std::vector<Point2>& to) {
  double total = 0.0;
  for (const Point2& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const Point2& q : to) best = std::min(best, distance(p, q));
    total += best;
  }
  return total / static_cast<double>(from.size());
}

double ap_from_hits(const std::vector<bool>& tp, int num_gts) {
  if (num_gts == 0) return tp.empty() ? 1.0 : 0.0;
  std::vector<double> precision, recall;
  int tp_cum = 0;
  for (std::size_t i = 0; i < tp.size(); ++i) {
    if (tp[i]) ++tp_cum;
    precision.push_back(static_cast<double>(tp_cum) /
                        static_cast<double>(i + 1));
    recall.push_back(static_cast<double>(tp_cum) /
                     static_cast<double>(num_gts));
  }
  // all-points interpolation: running max of precision from the right
  for (std::size_t i = precision.size(); i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t i = 0; i < precision.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

}  // namespace

double chamfer(const MapElement& pred, const MapElement& gt, int samples) {
  const auto a = sample_points(pred, samples);
  const auto b = sample_points(gt, samples);
  return 0.5 * (mean_nearest(a, b) + mean_nearest(b, a));
}

double ap_at(const std::vector<ScoredElement>& preds,
             const std::vector<MapElement>& gts, MapClass cls,
             double threshold_m, int samples) {
  std::vector<std::size_t> pred_idx;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].element.class_id == cls) pred_idx.push_back(i);
  }
  std::stable_sort(pred_idx.begin(), pred_idx.end(),
                   [&](std::size_t a, std::size_t b) {
                     return preds[a].score > preds[b].score;
                   });
  std::vector<std::size_t> gt_idx;
  for (std::size_t j = 0; j < gts.size(); ++j) {
    if (gts[j].class_id == cls) gt_idx.push_back(j);
  }

  std::vector<bool> claimed(gt_idx.size(), false);
  std::vector<bool> tp;
  tp.reserve(pred_idx.size());
  for (std::size_t i : pred_idx) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_j = gt_idx.size();
    for (std::size_t j = 0; j < gt_idx.size(); ++j) {
      if (claimed[j]) continue;
      const double d = chamfer(preds[i].element, gts[gt_idx[j]], samples);
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    if (best_j == gt_idx.size()) {
      tp.push_back(false);  // nothing left to claim
      continue;
    }
    claimed[best_j] = true;
    tp.push_back(best <= threshold_m);
  }
  return ap_from_hits(tp, static_cast<int>(gt_idx.size()));
}

APResult map_score(const std::vector<ViewSet>& views, int samples) {
  APResult result;
  if (views.empty()) return result;
  for (const ViewSet& v : views) {
    APResult::PerView pv;
    pv.view_id = v.view_id;
    pv.num_gts = static_cast<int>(v.gts.size());
    pv.num_preds = static_cast<int>(v.preds.size());
    double sum = 0.0;
    for (int c = 0; c < kNumClasses; ++c) {
      for (std::size_t t = 0; t < kChamferThresholds.size(); ++t) {
        pv.ap[c][t] = ap_at(v.preds, v.gts, static_cast<MapClass>(c),
                            kChamferThresholds[t], samples);
        sum += pv.ap[c][t];
      }
    }
    pv.mean_ap = sum / (kNumClasses * kChamferThresholds.size());
    result.views.push_back(pv);
  }
  for (int c = 0; c < kNumClasses; ++c) {
    for (std::size_t t = 0; t < kChamferThresholds.size(); ++t) {
      double s = 0.0;
      for (const auto& pv : result.views) s += pv.ap[c][t];
      result.ap[c][t] = s / static_cast<double>(result.views.size());
    }
  }
  double s = 0.0;
  for (const auto& pv : result.views) s += pv.mean_ap;
  result.mean_ap = s / static_cast<double>(result.views.size());
  return result;
}

std::vector<ScoredElement> align_for_eval(
    const std::vector<ScoredElement>& preds, const CameraSpec& cam,
    std::optional<EgoPose> pose, double crop_half_extent, double min_length) {
  std::vector<ScoredElement> out;
  for (const ScoredElement& se : preds) {
    std::vector<MapElement> piece{se.element};
    if (pose) {
      piece = extract_patch(piece, *pose, 2.0 * crop_half_extent);
    }
    piece = crop_patch(rotate_to_camera(clip_fov(piece, cam, min_length), cam),
                       crop_half_extent);
    for (MapElement& e : piece) out.push_back({std::move(e), se.score});
  }
  return out;
}

}  // namespace vecmap
