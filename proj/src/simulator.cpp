#include "geograph/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "geograph/error.hpp"

namespace geograph {

namespace {

using nlohmann::json;

constexpr double kPi = std::numbers::pi;

// Anchor band keeps scenes away from the poles and the dateline so local
// tangent-plane math stays valid.
constexpr double kAnchorLatMaxDeg = 55.0;
constexpr double kAnchorLngMaxDeg = 170.0;

// Objects closer than this to a camera fall below the frame.
constexpr double kMinGroundRangeM = 2.0;

// Simulated object height and the box-size constant: a 2 m object at 10 m
// spans ~100 px at the default 2048x1024 panorama size.
constexpr double kObjectHeightM = 2.0;
constexpr double kBoxSizeK = 1.53;
constexpr double kBoxAspect = 0.62;
constexpr double kMinBoxPx = 6.0;

std::vector<double> random_unit_vector(std::size_t dim, Rng &rng) {
  std::vector<double> v(dim);
  double norm_sq = 0.0;
  for (double &x : v) {
    x = rng.normal();
    norm_sq += x * x;
  }
  const double inv = 1.0 / std::sqrt(norm_sq);
  for (double &x : v)
    x *= inv;
  return v;
}

// Object appearance model: latent descriptors are noisy samples of a
// corpus-wide prototype dictionary (derived from the master seed), not
// isolated random directions. Urban objects of the same kind look alike, so
// two objects in a scene can be near-identical on appearance; those are the
// pairs geometric cues must resolve.
constexpr std::size_t kPrototypeCount = 24;
constexpr double kPrototypeSpread = 0.35;

std::vector<std::vector<double>> prototype_dictionary(const SimConfig &cfg) {
  Rng rng(derive_seed(cfg.seed, 0xD1C7));
  std::vector<std::vector<double>> protos(kPrototypeCount);
  for (auto &p : protos)
    p = random_unit_vector(cfg.feature_dim, rng);
  return protos;
}

std::vector<double> sample_latent(const std::vector<std::vector<double>> &dict,
                                  Rng &rng) {
  const auto &proto = dict[rng.uniform_index(dict.size())];
  std::vector<double> v(proto.size());
  double norm_sq = 0.0;
  for (std::size_t i = 0; i < proto.size(); ++i) {
    v[i] = proto[i] + kPrototypeSpread * rng.normal();
    norm_sq += v[i] * v[i];
  }
  const double inv = 1.0 / std::sqrt(norm_sq);
  for (double &x : v)
    x *= inv;
  return v;
}

std::vector<double> noisy_descriptor(const std::vector<double> &latent,
                                     double sigma, Rng &rng) {
  std::vector<double> v(latent.size());
  double norm_sq = 0.0;
  for (std::size_t i = 0; i < latent.size(); ++i) {
    v[i] = latent[i] + sigma * rng.normal();
    norm_sq += v[i] * v[i];
  }
  const double inv = 1.0 / std::sqrt(norm_sq);
  for (double &x : v)
    x *= inv;
  return v;
}

// Renders one detection from the true camera pose; returns false when the
// object is out of frame (too close, or its box would cross the panorama
// seam — wrap boxes are out of scope).
bool render_detection(const GeoPoint &object, const CameraPose &true_cam,
                      const SimConfig &cfg, Rng &rng, BoundingBox &bbox) {
  EnuVector enu = geo_to_enu(object, true_cam);
  const double z = std::hypot(enu.e, enu.n);
  if (z < kMinGroundRangeM)
    return false;
  PixelPoint px = enu_to_pixel(enu, true_cam, cfg.image_w, cfg.image_h);

  double cx = px.x;
  double by = px.y;
  double bh = std::clamp(kBoxSizeK * kObjectHeightM * cfg.image_h / (kPi * z),
                         8.0, cfg.image_h / 2.0);
  double bw = std::max(kMinBoxPx, kBoxAspect * bh);
  if (cfg.bbox_noise_px > 0.0) {
    cx += rng.normal(0.0, cfg.bbox_noise_px);
    by += rng.normal(0.0, cfg.bbox_noise_px);
    bh = std::max(kMinBoxPx, bh + rng.normal(0.0, cfg.bbox_noise_px / 2.0));
    bw = std::max(kMinBoxPx, bw + rng.normal(0.0, cfg.bbox_noise_px / 2.0));
  }
  // Bottom-center must stay below the horizon and inside the image.
  by = std::clamp(by, cfg.image_h / 2.0 + 1.0, cfg.image_h - 1.0);
  bbox.x_min = cx - bw / 2.0;
  bbox.x_max = cx + bw / 2.0;
  if (bbox.x_min < 0.0 || bbox.x_max >= cfg.image_w)
    return false; // seam-crossing box, treat as a miss
  bbox.y_max = by;
  bbox.y_min = std::max(0.0, by - bh);
  return true;
}

} // namespace

Scene generate_scene(const SimConfig &cfg, std::int64_t scene_index) {
  Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(scene_index)));
  Scene scene;
  scene.scene_id = scene_index;
  const auto dictionary = prototype_dictionary(cfg);

  const GeoPoint anchor =
      geo_from_degrees(rng.uniform(-kAnchorLatMaxDeg, kAnchorLatMaxDeg),
                       rng.uniform(-kAnchorLngMaxDeg, kAnchorLngMaxDeg));

  const std::size_t n_objects =
      cfg.objects_min +
      (cfg.objects_max > cfg.objects_min
           ? rng.uniform_index(cfg.objects_max - cfg.objects_min + 1)
           : 0);
  std::vector<std::vector<double>> latents;
  for (std::size_t k = 0; k < n_objects; ++k) {
    const double r = cfg.area_extent_m * std::sqrt(rng.uniform());
    const double theta = rng.uniform(0.0, 2.0 * kPi);
    scene.objects.push_back({static_cast<std::int64_t>(k),
                             displace(anchor, r * std::sin(theta),
                                      r * std::cos(theta))});
    latents.push_back(sample_latent(dictionary, rng));
  }

  // Cameras on a straight path through the disc.
  const double path_dir = rng.uniform(0.0, 2.0 * kPi);
  const double path_side = rng.uniform(-0.25, 0.25) * cfg.area_extent_m;
  std::vector<CameraPose> true_cams;
  for (std::size_t v = 0; v < cfg.views_per_scene; ++v) {
    double t = 0.0;
    if (cfg.views_per_scene > 1)
      t = cfg.area_extent_m *
          (-0.8 + 1.6 * static_cast<double>(v) /
                      static_cast<double>(cfg.views_per_scene - 1));
    const double e = t * std::sin(path_dir) + path_side * std::cos(path_dir);
    const double n = t * std::cos(path_dir) - path_side * std::sin(path_dir);
    const double heading =
        normalize_heading(path_dir + rng.normal(0.0, 0.15));
    true_cams.push_back(make_camera_pose(displace(anchor, e, n), heading,
                                         cfg.camera_height_m));
  }

  // Reported poses: what the pipeline consumes.
  for (const CameraPose &cam : true_cams) {
    GeoPoint reported_pos = cam.position;
    double reported_heading = cam.heading;
    if (cfg.pose_noise_sigma_m > 0.0)
      reported_pos = displace(cam.position,
                              rng.normal(0.0, cfg.pose_noise_sigma_m),
                              rng.normal(0.0, cfg.pose_noise_sigma_m));
    if (cfg.heading_noise_sigma_rad > 0.0)
      reported_heading = normalize_heading(
          cam.heading + rng.normal(0.0, cfg.heading_noise_sigma_rad));
    scene.cameras.push_back(
        make_camera_pose(reported_pos, reported_heading, cam.height));
  }

  for (std::size_t v = 0; v < cfg.views_per_scene; ++v) {
    for (std::size_t k = 0; k < n_objects; ++k) {
      BoundingBox bbox;
      if (!render_detection(scene.objects[k].position, true_cams[v], cfg, rng,
                            bbox))
        continue;
      // Score and feature are drawn even for missed detections so the
      // stream advances identically for any miss rate.
      const double miss_draw = rng.uniform();
      const double score = rng.uniform(0.75, 1.0);
      auto feature = noisy_descriptor(latents[k], cfg.feature_noise_sigma, rng);
      if (miss_draw < cfg.missed_detection_rate)
        continue;
      Detection d;
      d.bbox = bbox;
      d.score = score;
      d.feature = std::move(feature);
      d.camera = scene.cameras[v];
      d.image_width = cfg.image_w;
      d.image_height = cfg.image_h;
      d.view_id = static_cast<int>(v);
      d.gt_object_id = static_cast<std::int64_t>(k);
      scene.detections.push_back(std::move(d));
    }
    // False positives: spurious ground points with fresh descriptors.
    for (std::size_t k = 0; k < n_objects; ++k) {
      if (rng.uniform() >= cfg.false_positive_rate)
        continue;
      const double r = cfg.area_extent_m * std::sqrt(rng.uniform());
      const double theta = rng.uniform(0.0, 2.0 * kPi);
      const GeoPoint ghost =
          displace(anchor, r * std::sin(theta), r * std::cos(theta));
      BoundingBox bbox;
      if (!render_detection(ghost, true_cams[v], cfg, rng, bbox))
        continue;
      Detection d;
      d.bbox = bbox;
      d.score = rng.uniform(0.4, 0.9);
      d.feature = random_unit_vector(cfg.feature_dim, rng);
      d.camera = scene.cameras[v];
      d.image_width = cfg.image_w;
      d.image_height = cfg.image_h;
      d.view_id = static_cast<int>(v);
      d.gt_object_id = std::nullopt;
      scene.detections.push_back(std::move(d));
    }
  }
  return scene;
}

std::vector<Scene> generate_scenes(const SimConfig &cfg) {
  std::vector<Scene> scenes(cfg.n_scenes);
  const std::int64_t n = static_cast<std::int64_t>(cfg.n_scenes);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i)
    scenes[static_cast<std::size_t>(i)] = generate_scene(cfg, i);
  return scenes;
}

namespace {

json scene_to_json(const Scene &scene) {
  json j;
  j["schema"] = kSceneSchema;
  j["scene_id"] = scene.scene_id;
  int image_w = 2048, image_h = 1024;
  if (!scene.detections.empty()) {
    image_w = scene.detections.front().image_width;
    image_h = scene.detections.front().image_height;
  }
  j["image_wh"] = {image_w, image_h};
  j["objects"] = json::array();
  for (const SceneObject &o : scene.objects)
    j["objects"].push_back({{"id", o.id},
                            {"lat_deg", lat_degrees(o.position)},
                            {"lng_deg", lng_degrees(o.position)}});
  j["cameras"] = json::array();
  for (const CameraPose &c : scene.cameras)
    j["cameras"].push_back({{"lat_deg", lat_degrees(c.position)},
                            {"lng_deg", lng_degrees(c.position)},
                            {"heading_deg", c.heading * 180.0 / kPi},
                            {"height_m", c.height}});
  j["detections"] = json::array();
  for (const Detection &d : scene.detections) {
    json dj;
    dj["view"] = d.view_id;
    dj["bbox"] = {d.bbox.x_min, d.bbox.y_min, d.bbox.x_max, d.bbox.y_max};
    dj["score"] = d.score;
    dj["feature"] = d.feature;
    if (d.gt_object_id)
      dj["gt_object_id"] = *d.gt_object_id;
    else
      dj["gt_object_id"] = nullptr;
    j["detections"].push_back(std::move(dj));
  }
  return j;
}

[[noreturn]] void schema_fail(const std::filesystem::path &path,
                              std::size_t line, const std::string &what) {
  throw SchemaError(path.string() + ":" + std::to_string(line) + ": " + what);
}

const json &require_field(const json &j, const char *field,
                          const std::filesystem::path &path,
                          std::size_t line) {
  auto it = j.find(field);
  if (it == j.end())
    schema_fail(path, line, std::string("missing field '") + field + "'");
  return *it;
}

Scene scene_from_json(const json &j, const std::filesystem::path &path,
                      std::size_t line) {
  const auto &schema = require_field(j, "schema", path, line);
  if (!schema.is_string() || schema.get<std::string>() != kSceneSchema)
    schema_fail(path, line,
                "unsupported schema version (expected " +
                    std::string(kSceneSchema) + ")");
  Scene scene;
  scene.scene_id = require_field(j, "scene_id", path, line).get<std::int64_t>();
  const auto &wh = require_field(j, "image_wh", path, line);
  if (!wh.is_array() || wh.size() != 2)
    schema_fail(path, line, "field 'image_wh' must be [width, height]");
  const int image_w = wh[0].get<int>();
  const int image_h = wh[1].get<int>();
  if (image_w <= 0 || image_h <= 0)
    schema_fail(path, line, "field 'image_wh' must be positive");
  for (const json &oj : require_field(j, "objects", path, line)) {
    SceneObject o;
    o.id = require_field(oj, "id", path, line).get<std::int64_t>();
    o.position =
        geo_from_degrees(require_field(oj, "lat_deg", path, line).get<double>(),
                         require_field(oj, "lng_deg", path, line).get<double>());
    scene.objects.push_back(o);
  }
  for (const json &cj : require_field(j, "cameras", path, line)) {
    const double lat = require_field(cj, "lat_deg", path, line).get<double>();
    const double lng = require_field(cj, "lng_deg", path, line).get<double>();
    const double heading =
        require_field(cj, "heading_deg", path, line).get<double>() * kPi /
        180.0;
    const double height =
        require_field(cj, "height_m", path, line).get<double>();
    if (height <= 0.0)
      schema_fail(path, line, "field 'height_m' must be positive");
    scene.cameras.push_back(
        make_camera_pose(geo_from_degrees(lat, lng), heading, height));
  }
  for (const json &dj : require_field(j, "detections", path, line)) {
    Detection d;
    const int view = require_field(dj, "view", path, line).get<int>();
    if (view < 0 || static_cast<std::size_t>(view) >= scene.cameras.size())
      schema_fail(path, line, "field 'view' out of camera range");
    d.view_id = view;
    d.camera = scene.cameras[static_cast<std::size_t>(view)];
    const auto &bbox = require_field(dj, "bbox", path, line);
    if (!bbox.is_array() || bbox.size() != 4)
      schema_fail(path, line, "field 'bbox' must be [x_min,y_min,x_max,y_max]");
    d.bbox = {bbox[0].get<double>(), bbox[1].get<double>(),
              bbox[2].get<double>(), bbox[3].get<double>()};
    if (d.bbox.x_min >= d.bbox.x_max || d.bbox.y_min >= d.bbox.y_max)
      schema_fail(path, line, "field 'bbox' is degenerate");
    d.score = require_field(dj, "score", path, line).get<double>();
    if (d.score < 0.0 || d.score > 1.0)
      schema_fail(path, line, "field 'score' outside [0, 1]");
    d.feature =
        require_field(dj, "feature", path, line).get<std::vector<double>>();
    const auto &gt = require_field(dj, "gt_object_id", path, line);
    if (!gt.is_null())
      d.gt_object_id = gt.get<std::int64_t>();
    d.image_width = image_w;
    d.image_height = image_h;
    scene.detections.push_back(std::move(d));
  }
  return scene;
}

} // namespace

void write_scenes(std::span<const Scene> scenes,
                  const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out)
    throw IoError("write_scenes: cannot open " + path.string());
  for (const Scene &scene : scenes)
    out << scene_to_json(scene).dump() << '\n';
  if (!out)
    throw IoError("write_scenes: write failed for " + path.string());
}

std::vector<Scene> read_scenes(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("read_scenes: cannot open " + path.string());
  std::vector<Scene> scenes;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty())
      continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      schema_fail(path, line_no, "invalid JSON");
    scenes.push_back(scene_from_json(j, path, line_no));
  }
  return scenes;
}

} // namespace geograph
