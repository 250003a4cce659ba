#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "geograph/detection.hpp"
#include "geograph/geometry.hpp"
#include "geograph/rng.hpp"

namespace geograph {

// Version tag written into every scene line.
inline constexpr const char *kSceneSchema = "geograph-scene/1";

// Synthetic corpus knobs. The seed fully determines the output; every scene
// draws from its own stream derived from (seed, scene index).
struct SimConfig {
  std::uint64_t seed = 7;
  std::size_t n_scenes = 100;
  std::size_t views_per_scene = 4;
  std::size_t objects_min = 2;
  std::size_t objects_max = 5;
  double area_extent_m = 30.0;   // placement disc radius
  double camera_height_m = 2.5;
  std::size_t feature_dim = 32;
  double feature_noise_sigma = 0.0;
  double pose_noise_sigma_m = 0.0;
  double heading_noise_sigma_rad = 0.0;
  double bbox_noise_px = 0.0;
  double false_positive_rate = 0.0;
  double missed_detection_rate = 0.0;
  int image_w = 2048;
  int image_h = 1024;
};

struct SceneObject {
  std::int64_t id = 0;
  GeoPoint position;
};

// One simulated multi-view capture. cameras holds the *reported* (noise
// perturbed) poses — the coarse poses the pipeline consumes; detections are
// rendered from the true poses, which are not persisted.
struct Scene {
  std::int64_t scene_id = 0;
  std::vector<SceneObject> objects;
  std::vector<CameraPose> cameras;
  std::vector<Detection> detections;
};

Scene generate_scene(const SimConfig &cfg, std::int64_t scene_index);

// Scene-parallel generation; per-scene RNG streams keep the result
// independent of scheduling.
std::vector<Scene> generate_scenes(const SimConfig &cfg);

// Line-delimited JSON, one scene per line, degrees for angles, meters for
// heights. Throws IoError / SchemaError with file, line and field context.
void write_scenes(std::span<const Scene> scenes,
                  const std::filesystem::path &path);
std::vector<Scene> read_scenes(const std::filesystem::path &path);

} // namespace geograph
