#include "geograph/gnn.hpp"

#include <cassert>
#include <cmath>

#include "geograph/detection.hpp"
#include "geograph/error.hpp"
#include "geograph/kernels.hpp"

namespace geograph {

namespace {

void add_inplace(Matrix &dst, const Matrix &src) {
  assert(dst.same_shape(src));
  const std::int64_t total = static_cast<std::int64_t>(dst.data.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < total; ++k)
    dst.data[static_cast<std::size_t>(k)] +=
        src.data[static_cast<std::size_t>(k)];
}

Matrix embeddings_to_matrix(const GnnModel &model, const SceneGraph &graph) {
  if (graph.nodes.empty())
    throw EmptyGraphError("model_forward: graph has no nodes");
  Matrix feats(graph.nodes.size(), model.in_dim);
  for (std::size_t v = 0; v < graph.nodes.size(); ++v) {
    const auto &emb = graph.nodes[v].embedding;
    if (emb.size() != model.in_dim)
      throw DimensionMismatchError("model_forward: node embedding dim " +
                                   std::to_string(emb.size()) +
                                   " != model in_dim " +
                                   std::to_string(model.in_dim));
    std::copy(emb.begin(), emb.end(), feats.row(v));
  }
  return feats;
}

struct LayerCache {
  Matrix input;     // layer input [N x in]
  Matrix neigh_agg; // neighbor mean of input [N x in]
  Matrix pre_act;   // before ReLU [N x out]
};

struct ForwardCaches {
  Csr adj;
  std::array<LayerCache, kNumConvLayers> layers;
  std::vector<double> dropout_mask; // scaled; empty when dropout is off
  Matrix scored_input;              // tensor fed to the scorer
  std::vector<double> scores;
};

void conv_layer_forward(const GraphConvLayer &layer, const Csr &adj,
                        const Matrix &input, LayerCache &cache) {
  cache.input = input;
  cache.neigh_agg = Matrix(input.rows, input.cols);
  kernels::neighbor_mean(adj, input, cache.neigh_agg);
  cache.pre_act = Matrix(input.rows, layer.w_self.rows);
  kernels::linear_nt(input, layer.w_self, layer.bias, cache.pre_act);
  Matrix neigh_term(input.rows, layer.w_neigh.rows);
  kernels::linear_nt(cache.neigh_agg, layer.w_neigh, {}, neigh_term);
  add_inplace(cache.pre_act, neigh_term);
}

ForwardCaches forward_impl(const GnnModel &model, const SceneGraph &graph,
                           RunMode mode, Rng *rng) {
  ForwardCaches c;
  Matrix h = embeddings_to_matrix(model, graph);
  c.adj = build_adjacency(graph.nodes.size(), graph.edges);

  for (std::size_t k = 0; k < kNumConvLayers; ++k) {
    conv_layer_forward(model.layers[k], c.adj, h, c.layers[k]);
    h = c.layers[k].pre_act;
    kernels::relu_inplace(h);
  }

  if (mode == RunMode::kTrain && model.dropout_p > 0.0) {
    if (!rng)
      throw Error("model_forward: train mode requires an rng");
    // Mask drawn serially so it is independent of thread count; inverted
    // scaling keeps eval free of rescaling.
    const double keep_scale = 1.0 / (1.0 - model.dropout_p);
    c.dropout_mask.resize(h.data.size());
    for (double &m : c.dropout_mask)
      m = rng->uniform() < model.dropout_p ? 0.0 : keep_scale;
    kernels::apply_mask_inplace(h, c.dropout_mask);
  }

  c.scored_input = std::move(h);
  kernels::edge_pair_scores(c.scored_input, graph.edges, model.scorer.w,
                            model.scorer.b, c.scores);
  return c;
}

double mean_focal_loss(const std::vector<double> &scores, const GtGraph &gt,
                       const SceneGraph &graph, double alpha, double gamma) {
  if (scores.empty())
    return 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const Edge &e = graph.edges[k];
    total += focal_loss(scores[k], gt.is_positive(e.i, e.j), alpha, gamma);
  }
  return total / static_cast<double>(scores.size());
}

// Reverse-mode pass from the focal edge loss back through scorer, dropout
// and all conv layers. Fills grads; returns the loss.
double backward_impl(const GnnModel &model, const SceneGraph &graph,
                     const GtGraph &gt, double alpha, double gamma,
                     const ForwardCaches &c, GnnGradients &grads) {
  const std::size_t n_edges = graph.edges.size();
  const std::size_t hidden = model.hidden_dim;
  const double loss = mean_focal_loss(c.scores, gt, graph, alpha, gamma);
  if (n_edges == 0)
    return loss;

  // d loss / d pre-sigmoid activation per edge.
  std::vector<double> ga(n_edges);
  for (std::size_t k = 0; k < n_edges; ++k) {
    const Edge &e = graph.edges[k];
    const bool y = gt.is_positive(e.i, e.j);
    const double ds = focal_loss_grad(c.scores[k], y, alpha, gamma) /
                      static_cast<double>(n_edges);
    ga[k] = ds * c.scores[k] * (1.0 - c.scores[k]);
  }

  // Scorer parameter gradients; serial loop keeps the reduction order fixed.
  for (std::size_t k = 0; k < n_edges; ++k) {
    const Edge &e = graph.edges[k];
    const double *hi = c.scored_input.row(e.i);
    const double *hj = c.scored_input.row(e.j);
    for (std::size_t d = 0; d < hidden; ++d) {
      grads.scorer.w[d] += ga[k] * (hi[d] + hj[d]);
      grads.scorer.w[hidden + d] += ga[k] * std::abs(hi[d] - hj[d]);
    }
    grads.scorer.b += ga[k];
  }

  Matrix dh(c.scored_input.rows, hidden);
  Csr incidence = build_incidence(graph.nodes.size(), graph.edges);
  kernels::edge_grad_to_nodes(incidence, graph.edges, ga, model.scorer.w,
                              c.scored_input, dh);

  if (!c.dropout_mask.empty())
    kernels::apply_mask_inplace(dh, c.dropout_mask);

  // Mean aggregation backward: h_u receives sum over v in N(u) of dz_v /
  // deg_v, so scale rows by 1/deg before the symmetric gather.
  std::vector<double> inv_deg(c.scored_input.rows);
  for (std::size_t v = 0; v < inv_deg.size(); ++v) {
    const std::size_t deg = c.adj.offsets[v + 1] - c.adj.offsets[v];
    inv_deg[v] = deg > 0 ? 1.0 / static_cast<double>(deg) : 0.0;
  }

  for (std::size_t k = kNumConvLayers; k-- > 0;) {
    const LayerCache &cache = c.layers[k];
    kernels::relu_backward_inplace(cache.pre_act, dh);
    kernels::accum_outer_nt(dh, cache.input, grads.layers[k].w_self);
    kernels::accum_outer_nt(dh, cache.neigh_agg, grads.layers[k].w_neigh);
    kernels::col_sums_accum(dh, grads.layers[k].bias);
    if (k > 0) {
      Matrix d_input(cache.input.rows, cache.input.cols);
      kernels::matmul_nn(dh, model.layers[k].w_self, d_input);
      Matrix d_scaled = dh;
      kernels::scale_rows_inplace(d_scaled, inv_deg);
      Matrix d_neigh(dh.rows, dh.cols);
      kernels::neighbor_sum(c.adj, d_scaled, d_neigh); // adjacency symmetric
      Matrix d_via_neigh(cache.input.rows, cache.input.cols);
      kernels::matmul_nn(d_neigh, model.layers[k].w_neigh, d_via_neigh);
      add_inplace(d_input, d_via_neigh);
      dh = std::move(d_input);
    }
  }
  return loss;
}

void glorot_fill(Matrix &w, std::size_t fan_in, std::size_t fan_out,
                 Rng &rng) {
  const double bound =
      std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double &v : w.data)
    v = rng.uniform(-bound, bound);
}

} // namespace

GnnModel init_model(std::size_t in_dim, std::size_t hidden_dim,
                    std::uint64_t seed, double dropout_p) {
  GnnModel m;
  m.in_dim = in_dim;
  m.hidden_dim = hidden_dim;
  m.dropout_p = dropout_p;
  Rng rng(derive_seed(seed, 0xC0DE));
  for (std::size_t k = 0; k < kNumConvLayers; ++k) {
    const std::size_t fan_in = (k == 0) ? in_dim : hidden_dim;
    m.layers[k].w_self = Matrix(hidden_dim, fan_in);
    m.layers[k].w_neigh = Matrix(hidden_dim, fan_in);
    m.layers[k].bias.assign(hidden_dim, 0.0);
    glorot_fill(m.layers[k].w_self, fan_in, hidden_dim, rng);
    glorot_fill(m.layers[k].w_neigh, fan_in, hidden_dim, rng);
    // Identity-augmented self weights: layers start near a feature
    // pass-through, so the scorer's |h_i - h_j| channel begins as a real
    // descriptor distance. Pure Glorot stacks scramble the descriptor
    // space and push training toward memorizing the corpus.
    for (std::size_t d = 0; d < std::min(hidden_dim, fan_in); ++d)
      m.layers[k].w_self.at(d, d) += 1.0;
  }
  m.scorer.w.resize(2 * hidden_dim);
  const double bound =
      std::sqrt(6.0 / static_cast<double>(2 * hidden_dim + 1));
  for (double &v : m.scorer.w)
    v = rng.uniform(-bound, bound);
  m.scorer.b = 0.0;
  return m;
}

Matrix graph_conv_forward(const GraphConvLayer &layer, const Matrix &node_feats,
                          std::span<const Edge> edges) {
  Csr adj = build_adjacency(node_feats.rows, edges);
  LayerCache cache;
  conv_layer_forward(layer, adj, node_feats, cache);
  return cache.pre_act;
}

ForwardResult model_forward(const GnnModel &model, const SceneGraph &graph,
                            RunMode mode, Rng *rng) {
  ForwardCaches c = forward_impl(model, graph, mode, rng);
  return {std::move(c.scored_input), std::move(c.scores)};
}

GnnGradients zero_gradients(const GnnModel &model) {
  GnnGradients g;
  for (std::size_t k = 0; k < kNumConvLayers; ++k) {
    g.layers[k].w_self =
        Matrix(model.layers[k].w_self.rows, model.layers[k].w_self.cols);
    g.layers[k].w_neigh =
        Matrix(model.layers[k].w_neigh.rows, model.layers[k].w_neigh.cols);
    g.layers[k].bias.assign(model.layers[k].bias.size(), 0.0);
  }
  g.scorer.w.assign(model.scorer.w.size(), 0.0);
  g.scorer.b = 0.0;
  return g;
}

double edge_loss(const GnnModel &model, const SceneGraph &graph,
                 const GtGraph &gt, double alpha, double gamma) {
  if (gt.n_nodes != graph.nodes.size())
    throw NodeSetMismatchError("edge_loss: gt node set differs from graph");
  ForwardCaches c = forward_impl(model, graph, RunMode::kEval, nullptr);
  return mean_focal_loss(c.scores, gt, graph, alpha, gamma);
}

GnnGradients edge_loss_backward(const GnnModel &model, const SceneGraph &graph,
                                const GtGraph &gt, double alpha,
                                double gamma) {
  if (gt.n_nodes != graph.nodes.size())
    throw NodeSetMismatchError(
        "edge_loss_backward: gt node set differs from graph");
  ForwardCaches c = forward_impl(model, graph, RunMode::kEval, nullptr);
  GnnGradients grads = zero_gradients(model);
  backward_impl(model, graph, gt, alpha, gamma, c, grads);
  return grads;
}

namespace {

template <class ModelT, class SpanT>
std::vector<SpanT> tensor_views_impl(ModelT &m) {
  std::vector<SpanT> views;
  views.reserve(kNumConvLayers * 3 + 2);
  for (auto &layer : m.layers) {
    views.push_back(SpanT(layer.w_self.data));
    views.push_back(SpanT(layer.w_neigh.data));
    views.push_back(SpanT(layer.bias));
  }
  views.push_back(SpanT(m.scorer.w));
  views.push_back(SpanT(&m.scorer.b, 1));
  return views;
}

} // namespace

std::vector<std::span<double>> tensor_views(GnnModel &model) {
  return tensor_views_impl<GnnModel, std::span<double>>(model);
}
std::vector<std::span<const double>> tensor_views(const GnnModel &model) {
  return tensor_views_impl<const GnnModel, std::span<const double>>(model);
}
std::vector<std::span<double>> tensor_views(GnnGradients &grads) {
  return tensor_views_impl<GnnGradients, std::span<double>>(grads);
}
std::vector<std::span<const double>> tensor_views(const GnnGradients &grads) {
  return tensor_views_impl<const GnnGradients, std::span<const double>>(grads);
}

void adam_init(AdamState &state,
               std::span<const std::span<const double>> params) {
  state.m.clear();
  state.v.clear();
  state.t = 0;
  for (const auto &p : params) {
    state.m.emplace_back(p.size(), 0.0);
    state.v.emplace_back(p.size(), 0.0);
  }
}

void adam_step(AdamState &state, std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, double lr) {
  assert(params.size() == grads.size() && params.size() == state.m.size());
  ++state.t;
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.t));
  for (std::size_t ti = 0; ti < params.size(); ++ti) {
    auto p = params[ti];
    auto g = grads[ti];
    auto &m = state.m[ti];
    auto &v = state.v[ti];
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = kAdamBeta1 * m[k] + (1.0 - kAdamBeta1) * g[k];
      v[k] = kAdamBeta2 * v[k] + (1.0 - kAdamBeta2) * g[k] * g[k];
      p[k] -= lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + kAdamEps);
    }
  }
}

double train_step(GnnModel &model, const SceneGraph &graph, const GtGraph &gt,
                  const TrainConfig &cfg, AdamState &opt, Rng &rng) {
  if (gt.n_nodes != graph.nodes.size())
    throw NodeSetMismatchError("train_step: gt node set differs from graph");
  ForwardCaches c = forward_impl(model, graph, RunMode::kTrain, &rng);
  GnnGradients grads = zero_gradients(model);
  const double loss =
      backward_impl(model, graph, gt, cfg.alpha, cfg.gamma, c, grads);
  auto params = tensor_views(model);
  auto grad_views = tensor_views(std::as_const(grads));
  if (opt.m.empty())
    adam_init(opt, tensor_views(std::as_const(model)));
  adam_step(opt, params, grad_views, cfg.learning_rate);
  return loss;
}

} // namespace geograph
