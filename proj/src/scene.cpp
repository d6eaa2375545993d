#include "vecmap/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <random>

#include "json.hpp"
#include "vecmap/serial.hpp"

namespace vecmap {

namespace {

using nlohmann::json;

constexpr double kCrossingLength = 3.0;  // extent along the road, metres

struct Centerline {
  // maps arc length s and signed lateral offset d (right-positive) to world
  std::vector<double> stations;
  std::function<Point2(double, double)> at;
  std::function<double(double)> heading_at;
};

Centerline straight_centerline(double length) {
  Centerline c;
  for (double s = 0; s <= length + 1e-9; s += 5.0) c.stations.push_back(s);
  c.at = [](double s, double d) { return Point2{d, s}; };
  c.heading_at = [](double) { return 0.0; };
  return c;
}

Centerline curved_centerline(double length, double radius, int turn_sign) {
  // turn_sign +1 turns left (centre at -R on x), -1 turns right
  Centerline c;
  const double step = std::min(5.0, radius * kPi / 90.0);  // <= 2 degrees
  for (double s = 0; s <= length + 1e-9; s += step) c.stations.push_back(s);
  c.at = [radius, turn_sign](double s, double d) {
    const double theta = s / radius;
    const double r = radius + turn_sign * d;
    const double cx = -turn_sign * radius;
    return Point2{cx + turn_sign * r * std::cos(theta), r * std::sin(theta)};
  };
  c.heading_at = [radius, turn_sign](double s) {
    return turn_sign * s / radius;
  };
  return c;
}

MapElement line_along(const Centerline& c, double d, double s0, double s1,
                      MapClass cls) {
  MapElement e;
  e.class_id = cls;
  for (double s : c.stations) {
    if (s < s0 - 1e-9 || s > s1 + 1e-9) continue;
    e.points.push_back(c.at(s, d));
  }
  if (e.points.empty() || std::abs(e.points.back().y - c.at(s1, d).y) > 1e-9 ||
      std::abs(e.points.back().x - c.at(s1, d).x) > 1e-9) {
    e.points.push_back(c.at(s1, d));
  }
  return e;
}

MapElement crossing_rect(const Centerline& c, double s0, double half_width) {
  MapElement e;
  e.class_id = MapClass::kPedCrossing;
  e.closed = true;
  e.points = {c.at(s0, -half_width), c.at(s0, half_width),
              c.at(s0 + kCrossingLength, half_width),
              c.at(s0 + kCrossingLength, -half_width)};
  return e;
}

void add_lane_lines(const Centerline& c, const SceneSpec& spec, double s0,
                    double s1, std::vector<MapElement>* out) {
  const double w = spec.lane_width;
  const double half_road = 0.5 * spec.num_lanes * w;
  for (int i = 0; i <= spec.num_lanes; ++i) {
    const double d = (i - 0.5 * spec.num_lanes) * w;
    out->push_back(line_along(c, d, s0, s1, MapClass::kDivider));
  }
  out->push_back(line_along(c, -(half_road + 0.5 * w), s0, s1,
                            MapClass::kBoundary));
  out->push_back(line_along(c, half_road + 0.5 * w, s0, s1,
                            MapClass::kBoundary));
}

std::vector<double> draw_crossing_stations(std::mt19937_64& rng,
                                           const SceneSpec& spec) {
  const double expected = spec.crossing_density * spec.length / 100.0;
  std::poisson_distribution<int> count_dist(std::max(expected, 0.0));
  const int count = expected > 0 ? count_dist(rng) : 0;
  std::uniform_real_distribution<double> pos(8.0, spec.length - 8.0 -
                                                      kCrossingLength);
  std::vector<double> stations;
  for (int i = 0; i < count; ++i) stations.push_back(pos(rng));
  std::sort(stations.begin(), stations.end());
  return stations;
}

Scene build_road_scene(const SceneSpec& spec, const Centerline& c,
                       std::mt19937_64& rng, double frame_rate) {
  Scene scene;
  add_lane_lines(c, spec, 0.0, spec.length, &scene.world_map);
  const double half_cross = 0.5 * spec.num_lanes * spec.lane_width +
                            0.5 * spec.lane_width;
  for (double s : draw_crossing_stations(rng, spec)) {
    scene.world_map.push_back(crossing_rect(c, s, half_cross));
  }
  const double spacing = spec.speed / frame_rate;
  for (double s = 0; s <= spec.length + 1e-9; s += spacing) {
    const Point2 p = c.at(s, 0.0);
    scene.trajectory.push_back({p.x, p.y, wrap_angle(c.heading_at(s))});
  }
  return scene;
}

Scene build_intersection_scene(const SceneSpec& spec, std::mt19937_64& rng,
                               double frame_rate) {
  Scene scene;
  const double w = spec.lane_width;
  const double half_road = 0.5 * spec.num_lanes * w + 0.5 * w;
  const double yc = 0.5 * spec.length;
  const double arm = 40.0;

  Centerline main = straight_centerline(spec.length);
  // main road, gap across the junction box
  add_lane_lines(main, spec, 0.0, yc - half_road, &scene.world_map);
  add_lane_lines(main, spec, yc + half_road, spec.length, &scene.world_map);

  // cross road along +X through (0, yc)
  Centerline cross;
  cross = straight_centerline(2 * arm);
  cross.at = [yc, arm](double s, double d) {
    return Point2{s - arm, yc + d};
  };
  cross.heading_at = [](double) { return -kPi / 2; };
  add_lane_lines(cross, spec, 0.0, arm - half_road, &scene.world_map);
  add_lane_lines(cross, spec, arm + half_road, 2 * arm, &scene.world_map);

  // one pedestrian crossing per approach, drawn with probability tied to
  // the crossing density
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double p_cross = std::min(1.0, spec.crossing_density);
  const double off = half_road + 0.8;
  if (u01(rng) < p_cross) {
    scene.world_map.push_back(
        crossing_rect(main, yc - off - kCrossingLength, half_road));
  }
  if (u01(rng) < p_cross) {
    scene.world_map.push_back(crossing_rect(main, yc + off, half_road));
  }
  if (u01(rng) < p_cross) {
    scene.world_map.push_back(
        crossing_rect(cross, arm - off - kCrossingLength, half_road));
  }
  if (u01(rng) < p_cross) {
    scene.world_map.push_back(crossing_rect(cross, arm + off, half_road));
  }

  const double spacing = spec.speed / frame_rate;
  for (double s = 0; s <= spec.length + 1e-9; s += spacing) {
    scene.trajectory.push_back({0.0, s, 0.0});
  }
  return scene;
}

}  // namespace

const char* road_type_name(RoadType t) {
  switch (t) {
    case RoadType::kStraight: return "straight";
    case RoadType::kCurved: return "curved";
    case RoadType::kIntersection: return "intersection";
  }
  return "unknown";
}

RoadType road_type_from_name(const std::string& name) {
  if (name == "straight") return RoadType::kStraight;
  if (name == "curved") return RoadType::kCurved;
  if (name == "intersection") return RoadType::kIntersection;
  throw std::invalid_argument("unknown road type: " + name);
}

RigSpec make_rig(const std::vector<CameraSlot>& slots, double frame_rate) {
  RigSpec rig;
  rig.frame_rate = frame_rate;
  for (CameraSlot s : slots) rig.cameras.push_back(canonical_camera(s));
  return rig;
}

Scene generate_scene(const SceneSpec& spec) {
  return generate_scene_at_rate(spec, 2.0);
}

Scene generate_scene_at_rate(const SceneSpec& spec, double frame_rate) {
  if (spec.num_lanes < 1) throw std::invalid_argument("num_lanes must be >= 1");
  if (spec.lane_width <= 0) throw std::invalid_argument("lane_width must be > 0");
  if (frame_rate <= 0) throw std::invalid_argument("frame_rate must be > 0");

  std::mt19937_64 rng(spec.seed);
  switch (spec.road_type) {
    case RoadType::kStraight:
      return build_road_scene(spec, straight_centerline(spec.length), rng,
                              frame_rate);
    case RoadType::kCurved: {
      std::uniform_real_distribution<double> radius(60.0, 160.0);
      const double r = radius(rng);
      const int sign = (rng() & 1) ? 1 : -1;
      return build_road_scene(spec, curved_centerline(spec.length, r, sign),
                              rng, frame_rate);
    }
    case RoadType::kIntersection:
      return build_intersection_scene(spec, rng, frame_rate);
  }
  throw std::invalid_argument("unknown road type");
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

FrameSample render_view(const std::vector<MapElement>& world_map,
                        const EgoPose& pose, const CameraSpec& cam,
                        const RenderOptions& opts, std::uint64_t noise_seed) {
  const int H = opts.height, W = opts.width, C = kNumClasses + 1;
  FrameSample fs;
  fs.channels = C;
  fs.height = H;
  fs.width = W;
  fs.view_id = cam.view_id;
  fs.pose = pose;
  fs.image.assign(static_cast<std::size_t>(C) * H * W, 0.0f);

  const double cx = 0.5 * (W - 1), cy = 0.5 * (H - 1);
  const double fx = cx / std::tan(0.5 * cam.hfov);
  const double fy = fx;

  auto paint = [&](int channel, double u, double v) {
    const int iu = static_cast<int>(std::lround(u));
    const int iv = static_cast<int>(std::lround(v));
    if (iu < 0 || iu >= W || iv < 0 || iv >= H) return;
    fs.image[(static_cast<std::size_t>(channel) * H + iv) * W + iu] = 1.0f;
    fs.image[(static_cast<std::size_t>(C - 1) * H + iv) * W + iu] = 1.0f;
  };

  auto draw_edge = [&](int channel, Point2 a, Point2 b) {
    // clip to the near plane in depth (camera-frame y)
    if (a.y < opts.near_plane && b.y < opts.near_plane) return;
    if (a.y < opts.near_plane || b.y < opts.near_plane) {
      const double t = (opts.near_plane - a.y) / (b.y - a.y);
      Point2 hit{a.x + t * (b.x - a.x), opts.near_plane};
      if (a.y < opts.near_plane) a = hit; else b = hit;
    }
    double u0 = cx + fx * a.x / a.y, v0 = cy + fy * opts.camera_height / a.y;
    double u1 = cx + fx * b.x / b.y, v1 = cy + fy * opts.camera_height / b.y;
    // clip the image-space segment to the canvas so step counts stay small
    double t0 = 0.0, t1 = 1.0;
    const double du = u1 - u0, dv = v1 - v0;
    const double ps[4] = {-du, du, -dv, dv};
    const double qs[4] = {u0 + 0.5, W - 0.5 - u0, v0 + 0.5, H - 0.5 - v0};
    for (int i = 0; i < 4; ++i) {
      if (ps[i] == 0.0) {
        if (qs[i] < 0.0) return;
      } else {
        const double r = qs[i] / ps[i];
        if (ps[i] < 0.0) t0 = std::max(t0, r);
        else t1 = std::min(t1, r);
      }
    }
    if (t0 > t1) return;
    const double su = u0 + t0 * du, sv = v0 + t0 * dv;
    const double eu = u0 + t1 * du, ev = v0 + t1 * dv;
    const int steps =
        1 + static_cast<int>(std::ceil(std::max(std::abs(eu - su),
                                                std::abs(ev - sv)) / 0.4));
    for (int i = 0; i <= steps; ++i) {
      const double t = static_cast<double>(i) / steps;
      paint(channel, su + t * (eu - su), sv + t * (ev - sv));
    }
  };

  auto local = rotate_to_camera(extract_patch(world_map, pose, 60.0), cam);
  for (const MapElement& e : local) {
    const std::size_t n_edges = e.closed ? e.points.size() : e.points.size() - 1;
    for (std::size_t k = 0; k < n_edges; ++k) {
      draw_edge(static_cast<int>(e.class_id), e.points[k],
                e.points[(k + 1) % e.points.size()]);
    }
  }

  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<float> noise(0.0f, static_cast<float>(opts.noise_sigma));
  for (float& v : fs.image) {
    v += noise(rng);
    if (opts.clamp) v = std::clamp(v, 0.0f, 1.0f);
  }
  return fs;
}

// ---------------------------------------------------------------------------
// Dataset archive
// ---------------------------------------------------------------------------

namespace {

std::uint64_t window_noise_seed(std::uint64_t root, int scene, int window,
                                int t, int view) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%llu/%d/%d/%d/%d",
                static_cast<unsigned long long>(root), scene, window, t, view);
  return fnv1a(buf);
}

json rig_to_json(const RigSpec& rig) {
  json cams = json::array();
  for (const CameraSpec& c : rig.cameras) {
    cams.push_back({{"view_id", c.view_id}, {"yaw", c.yaw}, {"hfov", c.hfov}});
  }
  return json{{"cameras", cams}, {"frame_rate", rig.frame_rate}};
}

}  // namespace

std::string build_dataset(const std::vector<SceneSpec>& scene_specs,
                          const std::vector<RigSpec>& rigs,
                          const DatasetConfig& cfg, std::uint64_t root_seed,
                          const std::filesystem::path& out_dir) {
  if (rigs.empty()) throw std::invalid_argument("need at least one rig");
  for (const RigSpec& rig : rigs) {
    if (rig.cameras.empty() || rig.cameras.size() > 6) {
      throw std::invalid_argument("rig must have 1..6 cameras");
    }
    if (static_cast<int>(rig.cameras.size()) * cfg.window > 24) {
      throw std::invalid_argument("cameras * window must be <= 24");
    }
  }
  if (cfg.window < 1) throw std::invalid_argument("window must be >= 1");

  std::filesystem::create_directories(out_dir);
  json windows = json::array();

  for (std::size_t si = 0; si < scene_specs.size(); ++si) {
    SceneSpec spec = scene_specs[si];
    const RigSpec& rig = rigs[si % rigs.size()];
    Scene scene = generate_scene_at_rate(spec, rig.frame_rate);

    const int total_windows =
        static_cast<int>(scene.trajectory.size()) / cfg.window;
    std::vector<int> selected;
    if (cfg.windows_per_scene > 0 && total_windows > cfg.windows_per_scene) {
      for (int i = 0; i < cfg.windows_per_scene; ++i) {
        selected.push_back(i * total_windows / cfg.windows_per_scene);
      }
    } else {
      for (int i = 0; i < total_windows; ++i) selected.push_back(i);
    }

    for (int wi : selected) {
      const int t0 = wi * cfg.window;
      const int S = static_cast<int>(rig.cameras.size()) * cfg.window;
      const int C = kNumClasses + 1;
      std::vector<std::uint8_t> packed(
          static_cast<std::size_t>(S) * C * cfg.render.height *
          cfg.render.width);
      std::vector<int> view_ids, time_ids;
      int frame = 0;
      for (int t = 0; t < cfg.window; ++t) {
        for (const CameraSpec& cam : rig.cameras) {
          FrameSample fs = render_view(
              scene.world_map, scene.trajectory[t0 + t], cam, cfg.render,
              window_noise_seed(root_seed, static_cast<int>(si), wi, t,
                                cam.view_id));
          const std::size_t off =
              static_cast<std::size_t>(frame) * fs.image.size();
          for (std::size_t i = 0; i < fs.image.size(); ++i) {
            packed[off + i] = static_cast<std::uint8_t>(
                std::lround(std::clamp(fs.image[i], 0.0f, 1.0f) * 255.0f));
          }
          view_ids.push_back(cam.view_id);
          time_ids.push_back(t);
          ++frame;
        }
      }

      char name[64];
      std::snprintf(name, sizeof(name), "window_%04zu_%03d", si, wi);
      const std::filesystem::path wdir = out_dir / name;
      std::filesystem::create_directories(wdir);
      write_npy_u8(wdir / "frames.npy",
                   {static_cast<std::size_t>(S), static_cast<std::size_t>(C),
                    static_cast<std::size_t>(cfg.render.height),
                    static_cast<std::size_t>(cfg.render.width)},
                   packed.data());

      // model-facing record: ids only, no calibration or pose fields
      json input{{"format", "vecmap.window"},
                 {"version", std::to_string(kDatasetFormatMajor) + "." +
                                 std::to_string(kDatasetFormatMinor)},
                 {"scene_id", static_cast<int>(si)},
                 {"window_id", wi},
                 {"view_ids", view_ids},
                 {"time_ids", time_ids}};
      std::ofstream(wdir / "input.json") << input.dump(2) << "\n";

      const EgoPose& anchor = scene.trajectory[t0 + cfg.window - 1];
      json meta{{"anchor_pose",
                 {{"x", anchor.x}, {"y", anchor.y}, {"heading", anchor.heading}}},
                {"rig", rig_to_json(rig)}};
      std::ofstream(wdir / "meta.json") << meta.dump(2) << "\n";

      for (const CameraSpec& cam : rig.cameras) {
        auto gt = gt_pipeline(scene.world_map, anchor, cam,
                              cfg.patch_half_extent, cfg.crop_half_extent,
                              cfg.min_clip_length);
        std::vector<MapElement> resampled;
        for (const MapElement& e : gt) {
          resampled.push_back(resample_polyline(e, cfg.points_per_element));
        }
        char gtname[32];
        std::snprintf(gtname, sizeof(gtname), "gt_view%d.jsonl", cam.view_id);
        write_elements(wdir / gtname, resampled);
      }

      const char* split =
          (si % 5 == 4) ? "val" : "train";
      windows.push_back({{"dir", name},
                         {"scene_id", static_cast<int>(si)},
                         {"window_id", wi},
                         {"split", split},
                         {"num_frames", S}});
    }
  }

  json rig_list = json::array();
  for (const RigSpec& r : rigs) rig_list.push_back(rig_to_json(r));
  json manifest{
      {"format", "vecmap.dataset"},
      {"version", std::to_string(kDatasetFormatMajor) + "." +
                      std::to_string(kDatasetFormatMinor)},
      {"root_seed", root_seed},
      {"num_scenes", scene_specs.size()},
      {"window", cfg.window},
      {"points_per_element", cfg.points_per_element},
      {"crop_half_extent", cfg.crop_half_extent},
      {"patch_half_extent", cfg.patch_half_extent},
      {"render",
       {{"height", cfg.render.height},
        {"width", cfg.render.width},
        {"noise_sigma", cfg.render.noise_sigma},
        {"camera_height", cfg.render.camera_height}}},
      {"rigs", rig_list},
      {"windows", windows}};
  const std::string hash = fnv1a_hex(manifest.dump());
  manifest["manifest_hash"] = hash;
  std::ofstream(out_dir / "manifest.json") << manifest.dump(2) << "\n";
  return hash;
}

ArchiveDataset::ArchiveDataset(const std::filesystem::path& root)
    : root_(root) {
  std::ifstream in(root / "manifest.json");
  if (!in) throw std::runtime_error("no manifest.json in " + root.string());
  json manifest = json::parse(in);
  if (manifest.value("format", "") != "vecmap.dataset") {
    throw std::runtime_error("not a dataset archive: " + root.string());
  }
  const std::string v = manifest.at("version").get<std::string>();
  if (std::stoi(v.substr(0, v.find('.'))) != kDatasetFormatMajor) {
    throw std::runtime_error("unsupported dataset version " + v);
  }
  manifest_hash_ = manifest.value("manifest_hash", "");
  points_per_element_ = manifest.at("points_per_element").get<int>();
  crop_half_extent_ = manifest.at("crop_half_extent").get<double>();
  for (const auto& w : manifest.at("windows")) {
    window_dirs_.push_back(w.at("dir").get<std::string>());
    window_splits_.push_back(w.at("split").get<std::string>());
  }
}

WindowRecord ArchiveDataset::load_window(std::size_t index) const {
  const std::filesystem::path wdir = root_ / window_dirs_.at(index);
  WindowRecord rec;
  rec.dir_name = window_dirs_.at(index);

  std::ifstream in(wdir / "input.json");
  if (!in) throw std::runtime_error("missing input.json in " + wdir.string());
  json input = json::parse(in);
  rec.scene_id = input.at("scene_id").get<int>();
  rec.window_id = input.at("window_id").get<int>();
  rec.view_ids = input.at("view_ids").get<std::vector<int>>();
  rec.time_ids = input.at("time_ids").get<std::vector<int>>();

  NpyArray arr = read_npy(wdir / "frames.npy");
  if (arr.shape.size() != 4) throw std::runtime_error("bad frames.npy rank");
  rec.num_frames = static_cast<int>(arr.shape[0]);
  rec.channels = static_cast<int>(arr.shape[1]);
  rec.height = static_cast<int>(arr.shape[2]);
  rec.width = static_cast<int>(arr.shape[3]);
  rec.frames.resize(arr.element_count());
  const std::uint8_t* u8 = arr.as_u8();
  for (std::size_t i = 0; i < rec.frames.size(); ++i) {
    rec.frames[i] = static_cast<float>(u8[i]) / 255.0f;
  }
  return rec;
}

WindowMeta ArchiveDataset::load_meta(std::size_t index) const {
  const std::filesystem::path wdir = root_ / window_dirs_.at(index);
  std::ifstream in(wdir / "meta.json");
  if (!in) throw std::runtime_error("missing meta.json in " + wdir.string());
  json meta = json::parse(in);
  WindowMeta out;
  out.anchor_pose = {meta.at("anchor_pose").at("x").get<double>(),
                     meta.at("anchor_pose").at("y").get<double>(),
                     meta.at("anchor_pose").at("heading").get<double>()};
  for (const auto& c : meta.at("rig").at("cameras")) {
    out.cameras.push_back({c.at("view_id").get<int>(),
                           c.at("yaw").get<double>(),
                           c.at("hfov").get<double>()});
  }
  return out;
}

std::vector<MapElement> ArchiveDataset::load_gt(std::size_t index,
                                                int view_id) const {
  char gtname[32];
  std::snprintf(gtname, sizeof(gtname), "gt_view%d.jsonl", view_id);
  return read_elements(root_ / window_dirs_.at(index) / gtname);
}

std::vector<std::size_t> ArchiveDataset::split_indices(
    const std::string& split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < window_dirs_.size(); ++i) {
    if (split == "all" || window_splits_[i] == split) out.push_back(i);
  }
  return out;
}

}  // namespace vecmap
