#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "geograph/detection.hpp"
#include "geograph/geometry.hpp"
#include "geograph/gnn.hpp"
#include "geograph/matrix.hpp"

namespace geograph {

inline constexpr std::size_t kRefineHiddenDim = 16;

// Input features are expressed in units of 100 m so they sit near unit
// scale; the correction output stays in meters.
inline constexpr double kRefineFeatureScaleM = 100.0;

// Two-layer perceptron correcting a flat-terrain projection. Input is the
// raw estimate relative to its camera (east offset, north offset, distance,
// in kRefineFeatureScaleM units); output is a (d_east, d_north) correction
// in meters added to the raw estimate. w2/b2 start at zero so a freshly
// initialized net is the identity.
struct RefineNet {
  Matrix w1; // [hidden x 3]
  std::vector<double> b1;
  Matrix w2; // [2 x hidden]
  std::vector<double> b2;
};

RefineNet init_refine(std::uint64_t seed);

// Ground-contact projection: bbox bottom-center through pixel_to_geo with the
// detection's camera. Propagates HorizonRayError.
GeoPoint project_detection(const Detection &d);

GeoPoint refine(const RefineNet &net, const GeoPoint &raw,
                const CameraPose &camera);

struct RefineSample {
  GeoPoint raw;
  CameraPose camera;
  GeoPoint truth;
};

struct RefineTrainConfig {
  double learning_rate = 1e-2;
  std::size_t steps = 500;
};

struct RefineGradients {
  Matrix w1;
  std::vector<double> b1;
  Matrix w2;
  std::vector<double> b2;
};

std::vector<std::span<double>> tensor_views(RefineNet &net);
std::vector<std::span<const double>> tensor_views(const RefineNet &net);
std::vector<std::span<double>> tensor_views(RefineGradients &grads);
std::vector<std::span<const double>> tensor_views(const RefineGradients &grads);

// Mean squared correction error in camera-frame ENU meters:
//   L = mean over samples of |raw_en + net(x) - true_en|^2
double refine_loss(const RefineNet &net, std::span<const RefineSample> samples);

RefineGradients refine_loss_backward(const RefineNet &net,
                                     std::span<const RefineSample> samples);

// Full-batch Adam on refine_loss; returns the final loss.
double train_refine(RefineNet &net, std::span<const RefineSample> samples,
                    const RefineTrainConfig &cfg);

struct ObjectEstimate {
  std::vector<std::size_t> object_component; // node ids
  std::vector<GeoPoint> per_view_estimates;
  GeoPoint final;
};

// Projects, refines and averages one identified object. When a component
// holds several detections from the same view, the highest-score one is
// used. Views whose ray misses the ground are skipped; throws
// NoValidViewsError when none remain. The final position is the ENU centroid
// of the per-view estimates.
ObjectEstimate localize_object(std::span<const std::size_t> component,
                               const std::vector<Detection> &detections,
                               const RefineNet &net);

} // namespace geograph
