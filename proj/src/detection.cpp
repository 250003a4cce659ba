#include "geograph/detection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace geograph {

double iou(const BoundingBox &a, const BoundingBox &b) {
  double ix = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  double iy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (ix <= 0.0 || iy <= 0.0)
    return 0.0;
  double inter = ix * iy;
  double uni = a.area() + b.area() - inter;
  return inter / uni;
}

std::vector<Detection> nms(const std::vector<Detection> &detections,
                           double iou_threshold) {
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  // Stable sort keeps the lower input index first among equal scores.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return detections[a].score > detections[b].score;
                   });

  std::vector<bool> suppressed(detections.size(), false);
  std::vector<Detection> kept;
  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    std::size_t i = order[oi];
    if (suppressed[i])
      continue;
    kept.push_back(detections[i]);
    for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
      std::size_t j = order[oj];
      if (!suppressed[j] &&
          iou(detections[i].bbox, detections[j].bbox) > iou_threshold)
        suppressed[j] = true;
    }
  }
  return kept;
}

std::vector<Detection> score_filter(const std::vector<Detection> &detections,
                                    double min_score) {
  std::vector<Detection> kept;
  for (const auto &d : detections)
    if (d.score >= min_score)
      kept.push_back(d);
  return kept;
}

double focal_loss(double p, bool y, double alpha, double gamma) {
  double pc = std::clamp(p, kProbEps, 1.0 - kProbEps);
  double p_t = y ? pc : 1.0 - pc;
  double a_t = y ? alpha : 1.0 - alpha;
  return -a_t * std::pow(1.0 - p_t, gamma) * std::log(p_t);
}

double focal_loss_grad(double p, bool y, double alpha, double gamma) {
  // Evaluated at the clamped probability rather than zeroed outside the
  // clamp: downstream sigmoid chains would otherwise lose all signal once
  // they saturate past the clamp and never recover.
  double pc = std::clamp(p, kProbEps, 1.0 - kProbEps);
  double p_t = y ? pc : 1.0 - pc;
  double a_t = y ? alpha : 1.0 - alpha;
  double one_m = 1.0 - p_t;
  // d/dp_t of -a_t*(1-p_t)^g*ln(p_t), then dp_t/dp = +-1.
  double d_pt = a_t * gamma * std::pow(one_m, gamma - 1.0) * std::log(p_t) -
                a_t * std::pow(one_m, gamma) / p_t;
  return y ? d_pt : -d_pt;
}

double smooth_l1(double pred, double target, double beta) {
  double d = pred - target;
  double ad = std::abs(d);
  if (ad < beta)
    return 0.5 * d * d / beta;
  return ad - 0.5 * beta;
}

double smooth_l1_grad(double pred, double target, double beta) {
  double d = pred - target;
  if (std::abs(d) < beta)
    return d / beta;
  return d > 0.0 ? 1.0 : -1.0;
}

} // namespace geograph
