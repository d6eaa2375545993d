#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "vecmap/scene.hpp"

namespace vecmap {

/// Raised for malformed or out-of-contract configuration; the CLI maps it
/// to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when training hits non-finite numerics; CLI exit code 3.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelConfig {
  int in_channels{4};
  int image_h{112};  // must match the dataset render size
  int image_w{112};
  int patch{14};
  int dim{128};
  int depth{8};
  int heads{4};
  std::vector<int> taps{2, 4, 6, 8};
  int max_time{8};          // time-embedding table size (window positions)
  int enh_layers{4};
  int enh_window{5};
  int enh_heads{4};
  int num_instances{20};    // N
  int points_per_line{10};  // P
  int dec_layers{6};        // L
  int dec_heads{4};
  int dec_points{4};        // K sampling locations per head
  double tau_min{0.5};
  double tau_max{2.0};
  int num_classes{kNumClasses};
  bool camera_conditioning{true};  // false zeroes the camera embedding c_s
};

struct TrainConfig {
  double lr{2e-4};
  double weight_decay{0.01};
  double min_lr{1e-5};
  std::string schedule{"cosine"};
  int steps{5000};
  double lambda_cls{3.0};
  double lambda_pts{4.0};
  double lambda_dir{0.05};
  double focal_alpha{0.25};
  double focal_gamma{2.0};
  double grad_clip{10.0};
  int frame_budget{12};  // dynamic batching: frames per optimizer step
  int checkpoint_every{500};
  std::uint64_t seed{7};
};

struct DatasetGenConfig {
  int num_scenes{40};
  std::vector<std::string> road_mix{"straight", "curved"};
  int lanes_min{2};
  int lanes_max{3};
  double lane_width_min{3.0};
  double lane_width_max{4.0};
  double crossing_density{1.0};
  double length{160.0};
  double speed{8.0};
  std::string rig_mode{"mixed"};  // F | B | FB | F3 | B3 | ALL6 | mixed
  double frame_rate{2.0};
  DatasetConfig data;
};

struct EvalParams {
  std::string split{"val"};
  int max_windows{0};  // 0 = all
  double plot_min_score{0.4};
  int num_overlays{4};
  int chamfer_samples{100};
};

struct RunConfig {
  std::uint64_t seed{7};
  std::string output_dir{"out"};
  DatasetGenConfig dataset;
  ModelConfig model;
  TrainConfig train;
  EvalParams eval;
};

/// Strict parse: unknown keys anywhere in the document are rejected.
RunConfig run_config_from_json_text(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Canonical resolved form (sorted keys) used for dumps and hashing.
std::string run_config_to_json(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

/// Expands the generation config into concrete per-scene specs; all
/// randomness derives from `seed`.
std::vector<SceneSpec> make_scene_specs(const DatasetGenConfig& cfg,
                                        std::uint64_t seed);

/// Rig list for a rig_mode string; "mixed" cycles the Table-style
/// 1/1/2/3/3/6-camera settings.
std::vector<RigSpec> rigs_for_mode(const std::string& mode,
                                   double frame_rate);

}  // namespace vecmap
