#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vecmap/geometry.hpp"

namespace vecmap {

enum class RoadType : int { kStraight = 0, kCurved = 1, kIntersection = 2 };

const char* road_type_name(RoadType t);
RoadType road_type_from_name(const std::string& name);

struct SceneSpec {
  std::uint64_t seed{0};
  RoadType road_type{RoadType::kStraight};
  int num_lanes{2};
  double lane_width{3.5};
  double crossing_density{1.0};  // crossings per 100 m
  double length{160.0};          // centerline length, metres
  double speed{8.0};             // ego speed, m/s
};

struct RigSpec {
  std::vector<CameraSpec> cameras;
  double frame_rate{2.0};  // Hz
};

/// Rig built from canonical slots, e.g. {CameraSlot::F, CameraSlot::B}.
RigSpec make_rig(const std::vector<CameraSlot>& slots, double frame_rate = 2.0);

struct Scene {
  std::vector<MapElement> world_map;
  std::vector<EgoPose> trajectory;
};

/// Deterministic given spec.seed. Trajectory poses are spaced by
/// spec.speed / frame_rate along the centerline.
Scene generate_scene(const SceneSpec& spec);
Scene generate_scene_at_rate(const SceneSpec& spec, double frame_rate);

/// One camera observation. The pose is carried for ground-truth building and
/// evaluation alignment only; it is never part of the model-facing record.
struct FrameSample {
  std::vector<float> image;  // channels * height * width, row-major
  int channels{0};
  int height{0};
  int width{0};
  int view_id{0};
  int time_id{0};
  int scene_id{0};
  EgoPose pose;
};

struct RenderOptions {
  int height{112};
  int width{112};
  double camera_height{1.6};
  double noise_sigma{0.05};
  double near_plane{0.5};
  bool clamp{true};
};

/// Projects ground-plane map elements through a fixed pinhole (horizontal
/// optical axis at `camera_height`) and rasterizes one channel per class
/// plus an all-class channel, with additive Gaussian pixel noise.
FrameSample render_view(const std::vector<MapElement>& world_map,
                        const EgoPose& pose, const CameraSpec& cam,
                        const RenderOptions& opts, std::uint64_t noise_seed);

struct DatasetConfig {
  int window{2};                 // timestamps per training window
  int points_per_element{10};    // P, resample target
  int windows_per_scene{0};      // 0 = keep all
  double patch_half_extent{60.0};
  double crop_half_extent{30.0};
  double min_clip_length{0.5};
  RenderOptions render;
};

inline constexpr int kDatasetFormatMajor = 1;
inline constexpr int kDatasetFormatMinor = 0;

/// Builds the on-disk archive for one or more scenes. Scene i observes
/// rigs[i % rigs.size()]; pass a single rig for a fixed configuration.
/// Returns the manifest hash.
std::string build_dataset(const std::vector<SceneSpec>& scene_specs,
                          const std::vector<RigSpec>& rigs,
                          const DatasetConfig& cfg, std::uint64_t root_seed,
                          const std::filesystem::path& out_dir);

/// The model-facing portion of one stored window.
struct WindowRecord {
  std::string dir_name;
  int scene_id{0};
  int window_id{0};
  std::vector<int> view_ids;   // per frame
  std::vector<int> time_ids;   // per frame
  std::vector<float> frames;   // S * channels * H * W
  int num_frames{0};
  int channels{0};
  int height{0};
  int width{0};
};

/// Evaluation-side metadata for one window (poses and camera parameters
/// live here, never in WindowRecord).
struct WindowMeta {
  EgoPose anchor_pose;  // pose at the window's last timestamp
  std::vector<CameraSpec> cameras;
};

/// Read access to a dataset archive. Any future real-data loader must
/// present this same surface.
class DatasetSource {
 public:
  virtual ~DatasetSource() = default;
  virtual std::size_t num_windows() const = 0;
  virtual WindowRecord load_window(std::size_t index) const = 0;
  virtual WindowMeta load_meta(std::size_t index) const = 0;
  virtual std::vector<MapElement> load_gt(std::size_t index,
                                          int view_id) const = 0;
};

class ArchiveDataset final : public DatasetSource {
 public:
  explicit ArchiveDataset(const std::filesystem::path& root);

  std::size_t num_windows() const override { return window_dirs_.size(); }
  WindowRecord load_window(std::size_t index) const override;
  WindowMeta load_meta(std::size_t index) const override;
  std::vector<MapElement> load_gt(std::size_t index, int view_id) const override;

  const std::filesystem::path& root() const { return root_; }
  std::string manifest_hash() const { return manifest_hash_; }
  int points_per_element() const { return points_per_element_; }
  double crop_half_extent() const { return crop_half_extent_; }

  /// Window indices whose scene falls in the train (or validation) part of
  /// the split recorded in the manifest.
  std::vector<std::size_t> split_indices(const std::string& split) const;

 private:
  std::filesystem::path root_;
  std::vector<std::string> window_dirs_;
  std::vector<std::string> window_splits_;
  std::string manifest_hash_;
  int points_per_element_{0};
  double crop_half_extent_{30.0};
};

}  // namespace vecmap
