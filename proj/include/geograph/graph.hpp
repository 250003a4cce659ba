#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "geograph/detection.hpp"

namespace geograph {

// Width of the pose-and-box block appended to each feature descriptor:
// camera east/north offset from the scene camera centroid, heading as
// sin/cos, and the box as (center_x/W, bottom_y/H, w/W, h/H).
inline constexpr std::size_t kPoseBlockDim = 8;

// Camera offsets are expressed in units of 100 m so the block sits near the
// unit scale of the normalized descriptors; raw meters swamp them and
// saturate the network.
inline constexpr double kPoseBlockScaleM = 100.0;

// Unordered node pair with i < j.
struct Edge {
  std::size_t i = 0;
  std::size_t j = 0;

  bool operator==(const Edge &) const = default;
  auto operator<=>(const Edge &) const = default;
};

struct Node {
  std::size_t node_id = 0;
  std::size_t detection_ref = 0; // index into the scene detection list
  std::vector<double> embedding; // feature descriptor + pose-and-box block
};

// Fully connected at construction: all N(N-1)/2 unordered pairs, including
// pairs within the same view. edge_scores stays empty until a model scores
// the graph; when present it parallels edges.
struct SceneGraph {
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  std::vector<double> edge_scores;

  bool has_scores() const { return edge_scores.size() == edges.size(); }
};

// Ground-truth counterpart: positive edges connect detections sharing a
// non-null gt_object_id, forming a disjoint union of cliques. Background
// detections are isolated nodes.
struct GtGraph {
  std::size_t n_nodes = 0;
  std::vector<Edge> positive_edges; // sorted ascending

  bool is_positive(std::size_t i, std::size_t j) const;
};

// One node per detection, embedding = feature || pose-and-box block. The
// pose offsets are taken relative to the centroid of the scene's camera
// positions. Throws EmptySceneError / DimensionMismatchError.
SceneGraph build_scene_graph(const std::vector<Detection> &detections);

SceneGraph build_scene_graph(const std::vector<Detection> &detections,
                             bool zero_pose_block);

GtGraph build_gt_graph(const std::vector<Detection> &detections);

// Keeps edges with score >= threshold (inclusive boundary). Throws
// MissingScoresError when the graph has no scores.
SceneGraph threshold_edges(const SceneGraph &graph, double threshold);

// Partition of all nodes into maximal connected components. Isolated nodes
// become singletons. Each component is sorted ascending; components are
// ordered by their smallest node id.
std::vector<std::vector<std::size_t>>
connected_components(const SceneGraph &graph);

} // namespace geograph
