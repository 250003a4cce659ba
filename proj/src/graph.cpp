#include "geograph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "geograph/error.hpp"
#include "geograph/union_find.hpp"

namespace geograph {

bool GtGraph::is_positive(std::size_t i, std::size_t j) const {
  if (i > j)
    std::swap(i, j);
  return std::binary_search(positive_edges.begin(), positive_edges.end(),
                            Edge{i, j});
}

SceneGraph build_scene_graph(const std::vector<Detection> &detections) {
  return build_scene_graph(detections, false);
}

SceneGraph build_scene_graph(const std::vector<Detection> &detections,
                             bool zero_pose_block) {
  if (detections.empty())
    throw EmptySceneError("build_scene_graph: no detections");
  const std::size_t feat_dim = detections.front().feature.size();
  for (const auto &d : detections)
    if (d.feature.size() != feat_dim)
      throw DimensionMismatchError(
          "build_scene_graph: feature dimensions differ across detections");

  // Centroid of the scene's camera positions, one vote per view.
  std::map<int, GeoPoint> view_cameras;
  for (const auto &d : detections)
    view_cameras.emplace(d.view_id, d.camera.position);
  double lat0 = 0.0, lng0 = 0.0;
  for (const auto &[view, pos] : view_cameras) {
    lat0 += pos.lat;
    lng0 += pos.lng;
  }
  lat0 /= static_cast<double>(view_cameras.size());
  lng0 /= static_cast<double>(view_cameras.size());
  const double cos_lat0 = std::cos(lat0);

  SceneGraph g;
  g.nodes.reserve(detections.size());
  for (std::size_t idx = 0; idx < detections.size(); ++idx) {
    const Detection &d = detections[idx];
    Node node;
    node.node_id = idx;
    node.detection_ref = idx;
    node.embedding.reserve(feat_dim + kPoseBlockDim);
    node.embedding = d.feature;
    // Geometric cue: the flat-terrain ground point of the box bottom-center,
    // relative to the camera centroid. This composes camera position,
    // heading and box location into the directly comparable quantity; the
    // raw pose left the trigonometry unlearnable at this scale. Rays at or
    // above the horizon fall back to the camera position.
    GeoPoint ground = d.camera.position;
    if (below_horizon(d.bbox.bottom_y(), d.image_height))
      ground = pixel_to_geo({d.bbox.center_x(), d.bbox.bottom_y()}, d.camera,
                            d.image_width, d.image_height);
    double block[kPoseBlockDim] = {
        (ground.lat - lat0) * kEarthRadiusM / kPoseBlockScaleM,
        (ground.lng - lng0) * kEarthRadiusM * cos_lat0 / kPoseBlockScaleM,
        std::sin(d.camera.heading),
        std::cos(d.camera.heading),
        d.bbox.center_x() / d.image_width,
        d.bbox.bottom_y() / d.image_height,
        d.bbox.width() / d.image_width,
        d.bbox.height() / d.image_height,
    };
    for (double v : block)
      node.embedding.push_back(zero_pose_block ? 0.0 : v);
    g.nodes.push_back(std::move(node));
  }

  const std::size_t n = g.nodes.size();
  g.edges.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      g.edges.push_back({i, j});
  return g;
}

GtGraph build_gt_graph(const std::vector<Detection> &detections) {
  GtGraph gt;
  gt.n_nodes = detections.size();
  for (std::size_t i = 0; i < detections.size(); ++i) {
    if (!detections[i].gt_object_id)
      continue;
    for (std::size_t j = i + 1; j < detections.size(); ++j) {
      if (detections[j].gt_object_id &&
          *detections[j].gt_object_id == *detections[i].gt_object_id)
        gt.positive_edges.push_back({i, j});
    }
  }
  std::sort(gt.positive_edges.begin(), gt.positive_edges.end());
  return gt;
}

SceneGraph threshold_edges(const SceneGraph &graph, double threshold) {
  if (!graph.has_scores())
    throw MissingScoresError("threshold_edges: edge scores not populated");
  SceneGraph out;
  out.nodes = graph.nodes;
  for (std::size_t k = 0; k < graph.edges.size(); ++k) {
    if (graph.edge_scores[k] >= threshold) {
      out.edges.push_back(graph.edges[k]);
      out.edge_scores.push_back(graph.edge_scores[k]);
    }
  }
  return out;
}

std::vector<std::vector<std::size_t>>
connected_components(const SceneGraph &graph) {
  const std::size_t n = graph.nodes.size();
  UnionFind uf(n);
  for (const Edge &e : graph.edges)
    uf.merge(e.i, e.j);

  std::map<std::size_t, std::vector<std::size_t>> by_root;
  for (std::size_t v = 0; v < n; ++v)
    by_root[uf.find(v)].push_back(v);

  std::vector<std::vector<std::size_t>> components;
  components.reserve(by_root.size());
  for (auto &[root, members] : by_root)
    components.push_back(std::move(members));
  // Members are ascending by construction; order components by smallest id.
  std::sort(components.begin(), components.end(),
            [](const auto &a, const auto &b) { return a.front() < b.front(); });
  return components;
}

} // namespace geograph
