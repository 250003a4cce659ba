#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "geograph/graph.hpp"
#include "geograph/matrix.hpp"
#include "geograph/rng.hpp"

namespace geograph {

inline constexpr std::size_t kNumConvLayers = 3;
inline constexpr std::size_t kDefaultHiddenDim = 64;
inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

// Graph convolution with separate self and neighbor transforms:
//   out_v = w_self * h_v + w_neigh * mean_{w in N(v)} h_w + bias
// Mean aggregation rather than sum: on fully connected scene graphs a sum
// grows activations ~N per layer (ReLU outputs are nonnegative), which
// saturates the edge scorer at initialization for desk-scale scenes.
struct GraphConvLayer {
  Matrix w_self;  // [out x in]
  Matrix w_neigh; // [out x in]
  std::vector<double> bias;
};

// Sigmoid scorer over symmetric pair features (h_i + h_j || |h_i - h_j|).
// A linear map over the ordered concatenation is additive in the pair and
// provably cannot separate two same-object clusters from their cross edges
// (summing the four 2x2 decision constraints yields a contradiction); the
// absolute-difference channel supplies the missing pair interaction while
// keeping score(i,j) == score(j,i) exact.
struct EdgeScorer {
  std::vector<double> w; // [2 * hidden]: sum half, then |diff| half
  double b = 0.0;
};

struct GnnModel {
  std::array<GraphConvLayer, kNumConvLayers> layers;
  EdgeScorer scorer;
  double dropout_p = 0.2;
  std::size_t in_dim = 0;
  std::size_t hidden_dim = 0;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 10;
  double alpha = 0.25; // focal weight
  double gamma = 2.0;  // focal exponent
  std::uint64_t seed = 0;
  double edge_threshold = 0.5;
};

enum class RunMode { kTrain, kEval };

// Glorot-uniform weights (|w| <= sqrt(6/(fan_in+fan_out))), zero biases,
// deterministic per seed.
GnnModel init_model(std::size_t in_dim, std::size_t hidden_dim,
                    std::uint64_t seed, double dropout_p = 0.2);

// Single-layer forward (no activation); isolated nodes receive
// w_self*h + bias only.
Matrix graph_conv_forward(const GraphConvLayer &layer, const Matrix &node_feats,
                          std::span<const Edge> edges);

struct ForwardResult {
  Matrix node_embeddings; // [N x hidden], the tensor fed to the scorer
  std::vector<double> edge_scores;
};

// Three conv layers each followed by ReLU, inverted dropout after the stack
// in train mode, then the symmetric edge scorer. Eval mode is a pure
// function of (model, graph). rng is required in train mode only.
ForwardResult model_forward(const GnnModel &model, const SceneGraph &graph,
                            RunMode mode, Rng *rng = nullptr);

// Gradients mirror the model tensor-for-tensor.
struct GnnGradients {
  std::array<GraphConvLayer, kNumConvLayers> layers;
  EdgeScorer scorer;
};

GnnGradients zero_gradients(const GnnModel &model);

// Mean focal loss over all edges, eval-mode forward (no dropout).
double edge_loss(const GnnModel &model, const SceneGraph &graph,
                 const GtGraph &gt, double alpha, double gamma);

// Analytic reverse-mode gradients of edge_loss, dropout disabled.
GnnGradients edge_loss_backward(const GnnModel &model, const SceneGraph &graph,
                                const GtGraph &gt, double alpha, double gamma);

// Fixed-order views over every parameter tensor, used by the optimizer, the
// checkpoint writer and the finite-difference tests.
std::vector<std::span<double>> tensor_views(GnnModel &model);
std::vector<std::span<const double>> tensor_views(const GnnModel &model);
std::vector<std::span<double>> tensor_views(GnnGradients &grads);
std::vector<std::span<const double>> tensor_views(const GnnGradients &grads);

// Adam with bias correction; one (m, v) slot per tensor view.
struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::int64_t t = 0;
};

void adam_init(AdamState &state, std::span<const std::span<const double>> params);
void adam_step(AdamState &state, std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, double lr);

// One optimization step on one scene: dropout-enabled forward, mean focal
// loss over all edges, full reverse-mode backward, Adam update. Returns the
// loss at the pre-update parameters. Throws NodeSetMismatchError when gt and
// graph disagree on the node count.
double train_step(GnnModel &model, const SceneGraph &graph, const GtGraph &gt,
                  const TrainConfig &cfg, AdamState &opt, Rng &rng);

} // namespace geograph
