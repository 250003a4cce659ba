#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "geograph/geometry.hpp"

namespace geograph {

// Focal-loss defaults from the original focal-loss formulation; probability
// clamp keeps log and gradients bounded.
inline constexpr double kFocalAlphaDefault = 0.25;
inline constexpr double kFocalGammaDefault = 2.0;
inline constexpr double kProbEps = 1e-7;

// Axis-aligned box in continuous pixels, x_min < x_max, y_min < y_max.
// Panorama-wrapping boxes are out of scope.
struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (x_min + x_max); }
  double bottom_y() const { return y_max; }
};

// One per-view object observation. gt_object_id is nullopt for background /
// false-positive detections; it is only populated by the simulator and by
// labeled corpora.
struct Detection {
  BoundingBox bbox;
  double score = 0.0; // detector confidence in [0, 1]
  std::vector<double> feature;
  CameraPose camera; // coarse (reported) pose of the owning view
  int image_width = 0;
  int image_height = 0;
  int view_id = 0;
  std::optional<std::int64_t> gt_object_id;
};

// Intersection over union, in [0, 1], symmetric.
double iou(const BoundingBox &a, const BoundingBox &b);

// Greedy non-maximum suppression: repeatedly keep the highest-score remaining
// detection and discard everything overlapping it above iou_threshold.
// Equal scores tie-break on the lower input index. Output is sorted by
// descending score. All detections must come from the same view.
std::vector<Detection> nms(const std::vector<Detection> &detections,
                           double iou_threshold);

// Subset with score >= min_score, input order preserved.
std::vector<Detection> score_filter(const std::vector<Detection> &detections,
                                    double min_score);

// Focal loss for a binary label:
//   p_t = p if y else 1-p,  a_t = alpha if y else 1-alpha
//   loss = -a_t * (1-p_t)^gamma * ln(p_t)
// p is clamped to [kProbEps, 1-kProbEps] first.
double focal_loss(double p, bool y, double alpha = kFocalAlphaDefault,
                  double gamma = kFocalGammaDefault);

// d focal_loss / d p. Zero where the clamp is active.
double focal_loss_grad(double p, bool y, double alpha = kFocalAlphaDefault,
                       double gamma = kFocalGammaDefault);

// Huber-style loss with quadratic region |d| < beta:
//   0.5*d^2/beta if |d| < beta else |d| - 0.5*beta
double smooth_l1(double pred, double target, double beta);

double smooth_l1_grad(double pred, double target, double beta);

} // namespace geograph
