#include "geograph/geoloc.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "geograph/error.hpp"

namespace geograph {

namespace {

// Hidden activations for one sample. raw_e/raw_n are the camera-frame
// offsets in meters; x is the scaled feature vector fed to the net.
struct RefineForward {
  double raw_e = 0.0, raw_n = 0.0;
  double x[3];
  std::vector<double> pre1;
  std::vector<double> h1;
  double out[2];
};

RefineForward refine_forward(const RefineNet &net, const GeoPoint &raw,
                             const CameraPose &camera) {
  RefineForward f;
  auto [e, n] = enu_offset(raw, camera.position);
  f.raw_e = e;
  f.raw_n = n;
  f.x[0] = e / kRefineFeatureScaleM;
  f.x[1] = n / kRefineFeatureScaleM;
  f.x[2] = std::hypot(e, n) / kRefineFeatureScaleM;
  const std::size_t h = net.w1.rows;
  f.pre1.resize(h);
  f.h1.resize(h);
  for (std::size_t i = 0; i < h; ++i) {
    double acc = net.b1[i];
    for (std::size_t c = 0; c < 3; ++c)
      acc += net.w1.at(i, c) * f.x[c];
    f.pre1[i] = acc;
    f.h1[i] = acc > 0.0 ? acc : 0.0;
  }
  for (std::size_t o = 0; o < 2; ++o) {
    double acc = net.b2[o];
    for (std::size_t i = 0; i < h; ++i)
      acc += net.w2.at(o, i) * f.h1[i];
    f.out[o] = acc;
  }
  return f;
}

} // namespace

RefineNet init_refine(std::uint64_t seed) {
  RefineNet net;
  net.w1 = Matrix(kRefineHiddenDim, 3);
  net.b1.assign(kRefineHiddenDim, 0.0);
  net.w2 = Matrix(2, kRefineHiddenDim);
  net.b2.assign(2, 0.0);
  // First layer random so gradients can flow; output layer zero so the
  // initial correction is exactly zero.
  Rng rng(derive_seed(seed, 0xF12E));
  const double bound = std::sqrt(6.0 / (3.0 + kRefineHiddenDim));
  for (double &v : net.w1.data)
    v = rng.uniform(-bound, bound);
  return net;
}

GeoPoint project_detection(const Detection &d) {
  PixelPoint bottom_center{d.bbox.center_x(), d.bbox.bottom_y()};
  return pixel_to_geo(bottom_center, d.camera, d.image_width, d.image_height);
}

GeoPoint refine(const RefineNet &net, const GeoPoint &raw,
                const CameraPose &camera) {
  RefineForward f = refine_forward(net, raw, camera);
  return displace(raw, f.out[0], f.out[1]);
}

namespace {

template <class NetT, class SpanT> std::vector<SpanT> refine_views(NetT &n) {
  return {SpanT(n.w1.data), SpanT(n.b1), SpanT(n.w2.data), SpanT(n.b2)};
}

} // namespace

std::vector<std::span<double>> tensor_views(RefineNet &net) {
  return refine_views<RefineNet, std::span<double>>(net);
}
std::vector<std::span<const double>> tensor_views(const RefineNet &net) {
  return refine_views<const RefineNet, std::span<const double>>(net);
}
std::vector<std::span<double>> tensor_views(RefineGradients &grads) {
  return refine_views<RefineGradients, std::span<double>>(grads);
}
std::vector<std::span<const double>>
tensor_views(const RefineGradients &grads) {
  return refine_views<const RefineGradients, std::span<const double>>(grads);
}

double refine_loss(const RefineNet &net,
                   std::span<const RefineSample> samples) {
  if (samples.empty())
    return 0.0;
  double total = 0.0;
  for (const RefineSample &s : samples) {
    RefineForward f = refine_forward(net, s.raw, s.camera);
    auto [te, tn] = enu_offset(s.truth, s.camera.position);
    const double ee = f.raw_e + f.out[0] - te;
    const double en = f.raw_n + f.out[1] - tn;
    total += ee * ee + en * en;
  }
  return total / static_cast<double>(samples.size());
}

RefineGradients refine_loss_backward(const RefineNet &net,
                                     std::span<const RefineSample> samples) {
  RefineGradients g;
  g.w1 = Matrix(net.w1.rows, net.w1.cols);
  g.b1.assign(net.b1.size(), 0.0);
  g.w2 = Matrix(net.w2.rows, net.w2.cols);
  g.b2.assign(net.b2.size(), 0.0);
  if (samples.empty())
    return g;
  const double inv_m = 1.0 / static_cast<double>(samples.size());
  const std::size_t h = net.w1.rows;
  for (const RefineSample &s : samples) {
    RefineForward f = refine_forward(net, s.raw, s.camera);
    auto [te, tn] = enu_offset(s.truth, s.camera.position);
    const double dout[2] = {2.0 * (f.raw_e + f.out[0] - te) * inv_m,
                            2.0 * (f.raw_n + f.out[1] - tn) * inv_m};
    for (std::size_t o = 0; o < 2; ++o) {
      g.b2[o] += dout[o];
      for (std::size_t i = 0; i < h; ++i)
        g.w2.at(o, i) += dout[o] * f.h1[i];
    }
    for (std::size_t i = 0; i < h; ++i) {
      if (f.pre1[i] <= 0.0)
        continue;
      const double dh1 =
          net.w2.at(0, i) * dout[0] + net.w2.at(1, i) * dout[1];
      g.b1[i] += dh1;
      for (std::size_t c = 0; c < 3; ++c)
        g.w1.at(i, c) += dh1 * f.x[c];
    }
  }
  return g;
}

double train_refine(RefineNet &net, std::span<const RefineSample> samples,
                    const RefineTrainConfig &cfg) {
  AdamState opt;
  adam_init(opt, tensor_views(std::as_const(net)));
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    RefineGradients grads = refine_loss_backward(net, samples);
    auto params = tensor_views(net);
    auto grad_views = tensor_views(std::as_const(grads));
    adam_step(opt, params, grad_views, cfg.learning_rate);
  }
  return refine_loss(net, samples);
}

ObjectEstimate localize_object(std::span<const std::size_t> component,
                               const std::vector<Detection> &detections,
                               const RefineNet &net) {
  // At most one detection per view: highest score wins, lower node id on
  // ties (map iteration ascending by view keeps this deterministic).
  std::map<int, std::size_t> best_per_view;
  for (std::size_t node : component) {
    const Detection &d = detections.at(node);
    auto it = best_per_view.find(d.view_id);
    if (it == best_per_view.end() ||
        detections[it->second].score < d.score)
      best_per_view[d.view_id] = node;
  }

  ObjectEstimate est;
  est.object_component.assign(component.begin(), component.end());
  std::sort(est.object_component.begin(), est.object_component.end());

  for (const auto &[view, node] : best_per_view) {
    const Detection &d = detections[node];
    if (!below_horizon(d.bbox.bottom_y(), d.image_height))
      continue;
    GeoPoint raw = project_detection(d);
    est.per_view_estimates.push_back(refine(net, raw, d.camera));
  }
  if (est.per_view_estimates.empty())
    throw NoValidViewsError("localize_object: every ray hits the horizon");

  // ENU centroid about a common reference; linear in lat/lng, so the mean
  // offsets are exact up to rounding.
  const GeoPoint ref = est.per_view_estimates.front();
  double sum_e = 0.0, sum_n = 0.0;
  for (const GeoPoint &p : est.per_view_estimates) {
    auto [e, n] = enu_offset(p, ref);
    sum_e += e;
    sum_n += n;
  }
  const double count = static_cast<double>(est.per_view_estimates.size());
  est.final = displace(ref, sum_e / count, sum_n / count);
  return est;
}

} // namespace geograph
