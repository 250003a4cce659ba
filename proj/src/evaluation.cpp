#include "geograph/evaluation.hpp"

#include <algorithm>
#include <set>

#include "geograph/error.hpp"

namespace geograph {

namespace {

double safe_ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

struct Counts {
  std::size_t tp = 0, fp = 0, fn = 0;
};

// Strict rule over an explicit edge set.
Counts strict_counts(std::span<const Edge> pred_edges, const GtGraph &gt) {
  // clean[v]: every predicted neighbor of v shares v's object (GT-positive
  // edge). An edge to background or to another object poisons both ends.
  std::vector<bool> clean(gt.n_nodes, true);
  for (const Edge &e : pred_edges) {
    if (!gt.is_positive(e.i, e.j)) {
      clean[e.i] = false;
      clean[e.j] = false;
    }
  }
  Counts c;
  for (const Edge &e : pred_edges) {
    if (gt.is_positive(e.i, e.j) && clean[e.i] && clean[e.j])
      ++c.tp;
    else
      ++c.fp;
  }
  c.fn = gt.positive_edges.size() - c.tp;
  return c;
}

} // namespace

ReidReport reid_edge_metrics(const SceneGraph &pred, const GtGraph &gt) {
  if (gt.n_nodes != pred.nodes.size())
    throw NodeSetMismatchError(
        "reid_edge_metrics: gt node set differs from prediction");

  Counts c = strict_counts(pred.edges, gt);
  ReidReport r;
  r.true_positives = c.tp;
  r.false_positives = c.fp;
  r.false_negatives = c.fn;
  r.precision = safe_ratio(c.tp, c.tp + c.fp);
  r.recall = safe_ratio(c.tp, c.tp + c.fn);
  r.f1 = (r.precision + r.recall) > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;

  // Threshold sweep over the graph's own scores. The strict rule can lower
  // recall as edges are added, so only recall gains are integrated.
  if (pred.has_scores() && !gt.positive_edges.empty()) {
    std::vector<double> thresholds(pred.edge_scores.begin(),
                                   pred.edge_scores.end());
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                     thresholds.end());
    double ap = 0.0;
    double best_recall = 0.0;
    std::vector<Edge> kept;
    for (double t : thresholds) {
      kept.clear();
      for (std::size_t k = 0; k < pred.edges.size(); ++k)
        if (pred.edge_scores[k] >= t)
          kept.push_back(pred.edges[k]);
      Counts sc = strict_counts(kept, gt);
      const double recall = safe_ratio(sc.tp, sc.tp + sc.fn);
      const double precision = safe_ratio(sc.tp, sc.tp + sc.fp);
      if (recall > best_recall) {
        ap += (recall - best_recall) * precision;
        best_recall = recall;
      }
    }
    r.average_precision = ap;
  }
  return r;
}

double pairwise_f1(std::span<const std::pair<double, int>> scores,
                   double threshold) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto &[score, label] : scores) {
    const bool pred = score >= threshold;
    if (pred && label)
      ++tp;
    else if (pred && !label)
      ++fp;
    else if (!pred && label)
      ++fn;
  }
  const double precision = safe_ratio(tp, tp + fp);
  const double recall = safe_ratio(tp, tp + fn);
  return (precision + recall) > 0.0
             ? 2.0 * precision * recall / (precision + recall)
             : 0.0;
}

std::vector<std::optional<std::int64_t>> match_components_to_objects(
    const std::vector<std::vector<std::size_t>> &components,
    const std::vector<Detection> &detections) {
  std::vector<std::optional<std::int64_t>> majority(components.size());
  for (std::size_t c = 0; c < components.size(); ++c) {
    std::map<std::int64_t, std::size_t> votes;
    std::size_t null_votes = 0;
    for (std::size_t node : components[c]) {
      const auto &gt = detections.at(node).gt_object_id;
      if (gt)
        ++votes[*gt];
      else
        ++null_votes;
    }
    std::optional<std::int64_t> best;
    std::size_t best_count = 0;
    for (const auto &[id, count] : votes) {
      if (count > best_count) { // map order makes ties go to the lower id
        best = id;
        best_count = count;
      }
    }
    if (best && null_votes > best_count)
      best = std::nullopt; // background majority
    majority[c] = best;
  }

  // At most one component per object: larger component wins, ties to the
  // component with the lower smallest node id (i.e. the earlier component,
  // since components are ordered by smallest contained id).
  std::map<std::int64_t, std::size_t> winner;
  for (std::size_t c = 0; c < components.size(); ++c) {
    if (!majority[c])
      continue;
    auto it = winner.find(*majority[c]);
    if (it == winner.end() ||
        components[c].size() > components[it->second].size())
      winner[*majority[c]] = c;
  }
  std::vector<std::optional<std::int64_t>> matching(components.size());
  for (const auto &[id, c] : winner)
    matching[c] = id;
  return matching;
}

GeoReport geo_mae(const std::vector<ObjectEstimate> &estimates,
                  const std::map<std::int64_t, GeoPoint> &truth,
                  const std::vector<std::optional<std::int64_t>> &matching) {
  GeoReport report;
  std::set<std::int64_t> matched_ids;
  for (std::size_t k = 0; k < estimates.size(); ++k) {
    if (k >= matching.size() || !matching[k]) {
      ++report.unmatched_estimates;
      continue;
    }
    auto it = truth.find(*matching[k]);
    if (it == truth.end()) {
      ++report.unmatched_estimates;
      continue;
    }
    matched_ids.insert(it->first);
    report.per_object_errors.push_back(
        haversine_m(estimates[k].final, it->second));
  }
  report.matched = report.per_object_errors.size();
  report.unmatched_truths = truth.size() - matched_ids.size();
  double total = 0.0;
  for (double e : report.per_object_errors)
    total += e;
  report.mae = report.per_object_errors.empty()
                   ? 0.0
                   : total / static_cast<double>(report.per_object_errors.size());
  return report;
}

} // namespace geograph
