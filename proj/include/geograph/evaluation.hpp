#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "geograph/geoloc.hpp"
#include "geograph/graph.hpp"

namespace geograph {

struct ReidReport {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double average_precision = 0.0;
};

struct GeoReport {
  std::vector<double> per_object_errors; // meters, matched pairs only
  double mae = 0.0;
  std::size_t matched = 0;
  std::size_t unmatched_estimates = 0;
  std::size_t unmatched_truths = 0;
};

// Strict edge metrics: a predicted edge is a true positive iff it is
// GT-positive and neither endpoint has any predicted edge to a node of a
// different object (background counts as different). Every other predicted
// edge is a false positive; false negatives are the GT-positive edges that
// did not make true positive, so TP + FN equals the GT-positive count.
// average_precision sweeps the graph's own scores (descending) and
// step-integrates precision over recall gains.
ReidReport reid_edge_metrics(const SceneGraph &pred, const GtGraph &gt);

// Plain binary F1 at a threshold over (score, label) pairs — the ablation
// protocol, without the strict no-other-edge condition.
double pairwise_f1(std::span<const std::pair<double, int>> scores,
                   double threshold);

// Majority-vote assignment of predicted components to GT objects. Ties on
// the vote go to the lower object id; components whose majority is
// background stay unmatched; when several components claim one object the
// larger wins (ties: lower smallest-node-id).
std::vector<std::optional<std::int64_t>>
match_components_to_objects(const std::vector<std::vector<std::size_t>> &components,
                            const std::vector<Detection> &detections);

// Haversine error per matched (estimate, truth) pair.
GeoReport geo_mae(const std::vector<ObjectEstimate> &estimates,
                  const std::map<std::int64_t, GeoPoint> &truth,
                  const std::vector<std::optional<std::int64_t>> &matching);

} // namespace geograph
