#include "vecmap/config.hpp"

#include <fstream>
#include <random>
#include <set>

#include "json.hpp"
#include "vecmap/serial.hpp"

namespace vecmap {

namespace {

using nlohmann::json;

/// Wraps one JSON object; every field access marks its key, and finish()
/// rejects anything left over so typos never pass silently.
class Strict {
 public:
  Strict(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& sub(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw ConfigError("unknown key \"" + it.key() + "\" in " + where_);
      }
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

void parse_model(const json& j, ModelConfig& m) {
  Strict s(j, "model");
  s.get("in_channels", m.in_channels);
  s.get("image_h", m.image_h);
  s.get("image_w", m.image_w);
  s.get("patch", m.patch);
  s.get("dim", m.dim);
  s.get("depth", m.depth);
  s.get("heads", m.heads);
  s.get("taps", m.taps);
  s.get("max_time", m.max_time);
  s.get("enh_layers", m.enh_layers);
  s.get("enh_window", m.enh_window);
  s.get("enh_heads", m.enh_heads);
  s.get("num_instances", m.num_instances);
  s.get("points_per_line", m.points_per_line);
  s.get("dec_layers", m.dec_layers);
  s.get("dec_heads", m.dec_heads);
  s.get("dec_points", m.dec_points);
  s.get("tau_min", m.tau_min);
  s.get("tau_max", m.tau_max);
  s.get("camera_conditioning", m.camera_conditioning);
  s.finish();
  if (m.depth < 2 || m.depth % 2 != 0) {
    throw ConfigError("model.depth must be even and >= 2");
  }
  if (m.tau_min <= 0 || m.tau_min >= m.tau_max) {
    throw ConfigError("model.tau bounds must satisfy 0 < tau_min < tau_max");
  }
  for (int t : m.taps) {
    if (t < 1 || t > m.depth) throw ConfigError("model.taps out of range");
  }
  if (m.taps.size() < 1) throw ConfigError("model.taps must be non-empty");
}

void parse_train(const json& j, TrainConfig& t) {
  Strict s(j, "train");
  s.get("lr", t.lr);
  s.get("weight_decay", t.weight_decay);
  s.get("min_lr", t.min_lr);
  s.get("schedule", t.schedule);
  s.get("steps", t.steps);
  s.get("lambda_cls", t.lambda_cls);
  s.get("lambda_pts", t.lambda_pts);
  s.get("lambda_dir", t.lambda_dir);
  s.get("focal_alpha", t.focal_alpha);
  s.get("focal_gamma", t.focal_gamma);
  s.get("grad_clip", t.grad_clip);
  s.get("frame_budget", t.frame_budget);
  s.get("checkpoint_every", t.checkpoint_every);
  s.get("seed", t.seed);
  s.finish();
  if (t.schedule != "cosine" && t.schedule != "constant") {
    throw ConfigError("train.schedule must be cosine or constant");
  }
  if (t.steps < 1) throw ConfigError("train.steps must be >= 1");
  if (t.lr <= 0 || t.min_lr <= 0 || t.min_lr > t.lr) {
    throw ConfigError("train: need 0 < min_lr <= lr");
  }
}

void parse_dataset(const json& j, DatasetGenConfig& d) {
  Strict s(j, "dataset");
  s.get("num_scenes", d.num_scenes);
  s.get("road_mix", d.road_mix);
  s.get("lanes_min", d.lanes_min);
  s.get("lanes_max", d.lanes_max);
  s.get("lane_width_min", d.lane_width_min);
  s.get("lane_width_max", d.lane_width_max);
  s.get("crossing_density", d.crossing_density);
  s.get("length", d.length);
  s.get("speed", d.speed);
  s.get("rig_mode", d.rig_mode);
  s.get("frame_rate", d.frame_rate);
  s.get("window", d.data.window);
  s.get("points_per_element", d.data.points_per_element);
  s.get("windows_per_scene", d.data.windows_per_scene);
  s.get("image_height", d.data.render.height);
  s.get("image_width", d.data.render.width);
  s.get("noise_sigma", d.data.render.noise_sigma);
  s.finish();
  if (d.num_scenes < 1) throw ConfigError("dataset.num_scenes must be >= 1");
  if (d.road_mix.empty()) throw ConfigError("dataset.road_mix must be non-empty");
  for (const std::string& r : d.road_mix) road_type_from_name(r);
  if (d.lanes_min < 1 || d.lanes_max < d.lanes_min) {
    throw ConfigError("dataset.lanes range invalid");
  }
  rigs_for_mode(d.rig_mode, d.frame_rate);  // validates the mode string
}

void parse_eval(const json& j, EvalParams& e) {
  Strict s(j, "eval");
  s.get("split", e.split);
  s.get("max_windows", e.max_windows);
  s.get("plot_min_score", e.plot_min_score);
  s.get("num_overlays", e.num_overlays);
  s.get("chamfer_samples", e.chamfer_samples);
  s.finish();
  if (e.split != "train" && e.split != "val" && e.split != "all") {
    throw ConfigError("eval.split must be train, val or all");
  }
}

}  // namespace

RunConfig run_config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig cfg;
  Strict s(j, "config");
  s.get("seed", cfg.seed);
  s.get("output_dir", cfg.output_dir);
  if (s.has("dataset")) parse_dataset(s.sub("dataset"), cfg.dataset);
  if (s.has("model")) parse_model(s.sub("model"), cfg.model);
  if (s.has("train")) parse_train(s.sub("train"), cfg.train);
  if (s.has("eval")) parse_eval(s.sub("eval"), cfg.eval);
  s.finish();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return run_config_from_json_text(text);
}

std::string run_config_to_json(const RunConfig& cfg) {
  json j{
      {"seed", cfg.seed},
      {"output_dir", cfg.output_dir},
      {"dataset",
       {{"num_scenes", cfg.dataset.num_scenes},
        {"road_mix", cfg.dataset.road_mix},
        {"lanes_min", cfg.dataset.lanes_min},
        {"lanes_max", cfg.dataset.lanes_max},
        {"lane_width_min", cfg.dataset.lane_width_min},
        {"lane_width_max", cfg.dataset.lane_width_max},
        {"crossing_density", cfg.dataset.crossing_density},
        {"length", cfg.dataset.length},
        {"speed", cfg.dataset.speed},
        {"rig_mode", cfg.dataset.rig_mode},
        {"frame_rate", cfg.dataset.frame_rate},
        {"window", cfg.dataset.data.window},
        {"points_per_element", cfg.dataset.data.points_per_element},
        {"windows_per_scene", cfg.dataset.data.windows_per_scene},
        {"image_height", cfg.dataset.data.render.height},
        {"image_width", cfg.dataset.data.render.width},
        {"noise_sigma", cfg.dataset.data.render.noise_sigma}}},
      {"model",
       {{"in_channels", cfg.model.in_channels},
        {"image_h", cfg.model.image_h},
        {"image_w", cfg.model.image_w},
        {"patch", cfg.model.patch},
        {"dim", cfg.model.dim},
        {"depth", cfg.model.depth},
        {"heads", cfg.model.heads},
        {"taps", cfg.model.taps},
        {"max_time", cfg.model.max_time},
        {"enh_layers", cfg.model.enh_layers},
        {"enh_window", cfg.model.enh_window},
        {"enh_heads", cfg.model.enh_heads},
        {"num_instances", cfg.model.num_instances},
        {"points_per_line", cfg.model.points_per_line},
        {"dec_layers", cfg.model.dec_layers},
        {"dec_heads", cfg.model.dec_heads},
        {"dec_points", cfg.model.dec_points},
        {"tau_min", cfg.model.tau_min},
        {"tau_max", cfg.model.tau_max},
        {"camera_conditioning", cfg.model.camera_conditioning}}},
      {"train",
       {{"lr", cfg.train.lr},
        {"weight_decay", cfg.train.weight_decay},
        {"min_lr", cfg.train.min_lr},
        {"schedule", cfg.train.schedule},
        {"steps", cfg.train.steps},
        {"lambda_cls", cfg.train.lambda_cls},
        {"lambda_pts", cfg.train.lambda_pts},
        {"lambda_dir", cfg.train.lambda_dir},
        {"focal_alpha", cfg.train.focal_alpha},
        {"focal_gamma", cfg.train.focal_gamma},
        {"grad_clip", cfg.train.grad_clip},
        {"frame_budget", cfg.train.frame_budget},
        {"checkpoint_every", cfg.train.checkpoint_every},
        {"seed", cfg.train.seed}}},
      {"eval",
       {{"split", cfg.eval.split},
        {"max_windows", cfg.eval.max_windows},
        {"plot_min_score", cfg.eval.plot_min_score},
        {"num_overlays", cfg.eval.num_overlays},
        {"chamfer_samples", cfg.eval.chamfer_samples}}}};
  return j.dump(2);
}

std::string config_hash(const RunConfig& cfg) {
  return fnv1a_hex(run_config_to_json(cfg));
}

std::vector<SceneSpec> make_scene_specs(const DatasetGenConfig& cfg,
                                        std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x5ce11e5u);
  std::uniform_int_distribution<int> lanes(cfg.lanes_min, cfg.lanes_max);
  std::uniform_real_distribution<double> width(cfg.lane_width_min,
                                               cfg.lane_width_max);
  std::vector<SceneSpec> specs;
  specs.reserve(cfg.num_scenes);
  for (int i = 0; i < cfg.num_scenes; ++i) {
    SceneSpec sp;
    sp.seed = rng();
    sp.road_type =
        road_type_from_name(cfg.road_mix[i % cfg.road_mix.size()]);
    sp.num_lanes = lanes(rng);
    sp.lane_width = width(rng);
    sp.crossing_density = cfg.crossing_density;
    sp.length = cfg.length;
    sp.speed = cfg.speed;
    specs.push_back(sp);
  }
  return specs;
}

std::vector<RigSpec> rigs_for_mode(const std::string& mode,
                                   double frame_rate) {
  using S = CameraSlot;
  if (mode == "F") return {make_rig({S::F}, frame_rate)};
  if (mode == "B") return {make_rig({S::B}, frame_rate)};
  if (mode == "FB") return {make_rig({S::F, S::B}, frame_rate)};
  if (mode == "F3") return {make_rig({S::F, S::FL, S::FR}, frame_rate)};
  if (mode == "B3") return {make_rig({S::B, S::BL, S::BR}, frame_rate)};
  if (mode == "ALL6") {
    return {make_rig({S::F, S::FL, S::FR, S::B, S::BL, S::BR}, frame_rate)};
  }
  if (mode == "mixed") {
    return {make_rig({S::F}, frame_rate),
            make_rig({S::B}, frame_rate),
            make_rig({S::F, S::B}, frame_rate),
            make_rig({S::F, S::FL, S::FR}, frame_rate),
            make_rig({S::B, S::BL, S::BR}, frame_rate),
            make_rig({S::F, S::FL, S::FR, S::B, S::BL, S::BR}, frame_rate)};
  }
  throw ConfigError("unknown rig_mode \"" + mode + "\"");
}

}  // namespace vecmap
