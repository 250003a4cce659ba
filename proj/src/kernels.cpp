#include "geograph/kernels.hpp"

#include <cassert>
#include <cmath>

namespace geograph {

Csr build_adjacency(std::size_t n, std::span<const Edge> edges) {
  std::vector<std::size_t> degree(n, 0);
  for (const Edge &e : edges) {
    ++degree[e.i];
    ++degree[e.j];
  }
  Csr csr;
  csr.offsets.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v)
    csr.offsets[v + 1] = csr.offsets[v] + degree[v];
  csr.cols.resize(csr.offsets.back());
  std::vector<std::size_t> cursor(csr.offsets.begin(), csr.offsets.end() - 1);
  // Edges arrive sorted by (i, j), so filling in order keeps rows sorted.
  for (const Edge &e : edges) {
    csr.cols[cursor[e.i]++] = e.j;
    csr.cols[cursor[e.j]++] = e.i;
  }
  return csr;
}

Csr build_incidence(std::size_t n, std::span<const Edge> edges) {
  std::vector<std::size_t> degree(n, 0);
  for (const Edge &e : edges) {
    ++degree[e.i];
    ++degree[e.j];
  }
  Csr csr;
  csr.offsets.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v)
    csr.offsets[v + 1] = csr.offsets[v] + degree[v];
  csr.cols.resize(csr.offsets.back());
  std::vector<std::size_t> cursor(csr.offsets.begin(), csr.offsets.end() - 1);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    csr.cols[cursor[edges[k].i]++] = k * 2;
    csr.cols[cursor[edges[k].j]++] = k * 2 + 1;
  }
  return csr;
}

} // namespace geograph

namespace geograph::kernels {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline void linear_nt_row(const Matrix &x, const Matrix &w,
                          std::span<const double> bias, Matrix &y,
                          std::size_t r) {
  const double *xr = x.row(r);
  double *yr = y.row(r);
  for (std::size_t o = 0; o < w.rows; ++o) {
    const double *wr = w.row(o);
    double acc = bias.empty() ? 0.0 : bias[o];
    for (std::size_t c = 0; c < w.cols; ++c)
      acc += xr[c] * wr[c];
    yr[o] = acc;
  }
}

inline void matmul_nn_row(const Matrix &g, const Matrix &w, Matrix &y,
                          std::size_t r) {
  const double *gr = g.row(r);
  double *yr = y.row(r);
  for (std::size_t c = 0; c < w.cols; ++c)
    yr[c] = 0.0;
  for (std::size_t o = 0; o < g.cols; ++o) {
    const double go = gr[o];
    const double *wr = w.row(o);
    for (std::size_t c = 0; c < w.cols; ++c)
      yr[c] += go * wr[c];
  }
}

inline void neighbor_sum_row(const Csr &adj, const Matrix &x, Matrix &s,
                             std::size_t v) {
  double *sr = s.row(v);
  for (std::size_t c = 0; c < x.cols; ++c)
    sr[c] = 0.0;
  for (std::size_t k = adj.offsets[v]; k < adj.offsets[v + 1]; ++k) {
    const double *xr = x.row(adj.cols[k]);
    for (std::size_t c = 0; c < x.cols; ++c)
      sr[c] += xr[c];
  }
}

inline void neighbor_mean_row(const Csr &adj, const Matrix &x, Matrix &s,
                              std::size_t v) {
  neighbor_sum_row(adj, x, s, v);
  const std::size_t deg = adj.offsets[v + 1] - adj.offsets[v];
  if (deg > 1) {
    const double inv = 1.0 / static_cast<double>(deg);
    double *sr = s.row(v);
    for (std::size_t c = 0; c < x.cols; ++c)
      sr[c] *= inv;
  }
}

// One output row of dw per call; the row owner iterates all n inputs in
// order, so the accumulation order is fixed.
inline void accum_outer_row(const Matrix &g, const Matrix &x, Matrix &dw,
                            std::size_t o) {
  double *dwr = dw.row(o);
  for (std::size_t r = 0; r < g.rows; ++r) {
    const double go = g.at(r, o);
    if (go == 0.0)
      continue;
    const double *xr = x.row(r);
    for (std::size_t c = 0; c < x.cols; ++c)
      dwr[c] += go * xr[c];
  }
}

inline double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

inline double edge_score_one(const Matrix &h, const Edge &e,
                             std::span<const double> w, double b) {
  const std::size_t d = h.cols;
  const double *hi = h.row(e.i);
  const double *hj = h.row(e.j);
  double a = b;
  for (std::size_t c = 0; c < d; ++c)
    a += w[c] * (hi[c] + hj[c]) + w[d + c] * std::abs(hi[c] - hj[c]);
  return sigmoid(a);
}

inline void edge_grad_node_row(const Csr &incidence,
                               std::span<const Edge> edges,
                               std::span<const double> ga,
                               std::span<const double> w, const Matrix &h,
                               Matrix &dh, std::size_t v) {
  const std::size_t d = dh.cols;
  double *out = dh.row(v);
  for (std::size_t s = incidence.offsets[v]; s < incidence.offsets[v + 1];
       ++s) {
    const std::size_t slot = incidence.cols[s];
    const std::size_t k = slot / 2;
    const bool is_j = (slot & 1) != 0;
    const Edge &e = edges[k];
    const double *hi = h.row(e.i);
    const double *hj = h.row(e.j);
    const double g = ga[k];
    // a = w_sum.(h_i+h_j) + w_diff.|h_i-h_j| + b; the diff term flips sign
    // for the j endpoint.
    const double side = is_j ? -1.0 : 1.0;
    for (std::size_t c = 0; c < d; ++c)
      out[c] += g * (w[c] + side * w[d + c] * sgn(hi[c] - hj[c]));
  }
}

} // namespace

void linear_nt(const Matrix &x, const Matrix &w, std::span<const double> bias,
               Matrix &y) {
  assert(x.cols == w.cols && y.rows == x.rows && y.cols == w.rows);
  const std::int64_t n = static_cast<std::int64_t>(x.rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < n; ++r)
    linear_nt_row(x, w, bias, y, static_cast<std::size_t>(r));
}

void matmul_nn(const Matrix &g, const Matrix &w, Matrix &y) {
  assert(g.cols == w.rows && y.rows == g.rows && y.cols == w.cols);
  const std::int64_t n = static_cast<std::int64_t>(g.rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < n; ++r)
    matmul_nn_row(g, w, y, static_cast<std::size_t>(r));
}

void neighbor_sum(const Csr &adj, const Matrix &x, Matrix &s) {
  assert(adj.rows() == x.rows && s.rows == x.rows && s.cols == x.cols);
  const std::int64_t n = static_cast<std::int64_t>(x.rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t v = 0; v < n; ++v)
    neighbor_sum_row(adj, x, s, static_cast<std::size_t>(v));
}

void neighbor_mean(const Csr &adj, const Matrix &x, Matrix &s) {
  assert(adj.rows() == x.rows && s.rows == x.rows && s.cols == x.cols);
  const std::int64_t n = static_cast<std::int64_t>(x.rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t v = 0; v < n; ++v)
    neighbor_mean_row(adj, x, s, static_cast<std::size_t>(v));
}

void scale_rows_inplace(Matrix &x, std::span<const double> factors) {
  assert(factors.size() == x.rows);
  const std::int64_t n = static_cast<std::int64_t>(x.rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t v = 0; v < n; ++v) {
    double *xr = x.row(static_cast<std::size_t>(v));
    const double f = factors[static_cast<std::size_t>(v)];
    for (std::size_t c = 0; c < x.cols; ++c)
      xr[c] *= f;
  }
}

void accum_outer_nt(const Matrix &g, const Matrix &x, Matrix &dw) {
  assert(g.rows == x.rows && dw.rows == g.cols && dw.cols == x.cols);
  const std::int64_t out = static_cast<std::int64_t>(dw.rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t o = 0; o < out; ++o)
    accum_outer_row(g, x, dw, static_cast<std::size_t>(o));
}

void col_sums_accum(const Matrix &g, std::span<double> out) {
  assert(out.size() == g.cols);
  const std::int64_t cols = static_cast<std::int64_t>(g.cols);
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < cols; ++c) {
    double acc = 0.0;
    for (std::size_t r = 0; r < g.rows; ++r)
      acc += g.at(r, static_cast<std::size_t>(c));
    out[static_cast<std::size_t>(c)] += acc;
  }
}

void relu_inplace(Matrix &x) {
  const std::int64_t total = static_cast<std::int64_t>(x.data.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < total; ++k)
    if (x.data[static_cast<std::size_t>(k)] < 0.0)
      x.data[static_cast<std::size_t>(k)] = 0.0;
}

void relu_backward_inplace(const Matrix &pre, Matrix &g) {
  assert(pre.same_shape(g));
  const std::int64_t total = static_cast<std::int64_t>(g.data.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < total; ++k)
    if (pre.data[static_cast<std::size_t>(k)] <= 0.0)
      g.data[static_cast<std::size_t>(k)] = 0.0;
}

void apply_mask_inplace(Matrix &x, std::span<const double> mask) {
  assert(mask.size() == x.data.size());
  const std::int64_t total = static_cast<std::int64_t>(x.data.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < total; ++k)
    x.data[static_cast<std::size_t>(k)] *= mask[static_cast<std::size_t>(k)];
}

void edge_pair_scores(const Matrix &h, std::span<const Edge> edges,
                      std::span<const double> w, double b,
                      std::vector<double> &scores) {
  assert(w.size() == 2 * h.cols);
  scores.resize(edges.size());
  const std::int64_t m = static_cast<std::int64_t>(edges.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < m; ++k)
    scores[static_cast<std::size_t>(k)] =
        edge_score_one(h, edges[static_cast<std::size_t>(k)], w, b);
}

void edge_grad_to_nodes(const Csr &incidence, std::span<const Edge> edges,
                        std::span<const double> ga, std::span<const double> w,
                        const Matrix &h, Matrix &dh) {
  const std::int64_t n = static_cast<std::int64_t>(dh.rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t v = 0; v < n; ++v)
    edge_grad_node_row(incidence, edges, ga, w, h, dh,
                       static_cast<std::size_t>(v));
}

// Serial reference mirrors. Same per-row routines, plain loops; kept for
// parity tests and the kernel benchmark.
namespace serial {

void linear_nt(const Matrix &x, const Matrix &w, std::span<const double> bias,
               Matrix &y) {
  for (std::size_t r = 0; r < x.rows; ++r)
    linear_nt_row(x, w, bias, y, r);
}

void matmul_nn(const Matrix &g, const Matrix &w, Matrix &y) {
  for (std::size_t r = 0; r < g.rows; ++r)
    matmul_nn_row(g, w, y, r);
}

void neighbor_sum(const Csr &adj, const Matrix &x, Matrix &s) {
  for (std::size_t v = 0; v < x.rows; ++v)
    neighbor_sum_row(adj, x, s, v);
}

void neighbor_mean(const Csr &adj, const Matrix &x, Matrix &s) {
  for (std::size_t v = 0; v < x.rows; ++v)
    neighbor_mean_row(adj, x, s, v);
}

void scale_rows_inplace(Matrix &x, std::span<const double> factors) {
  for (std::size_t v = 0; v < x.rows; ++v) {
    double *xr = x.row(v);
    for (std::size_t c = 0; c < x.cols; ++c)
      xr[c] *= factors[v];
  }
}

void accum_outer_nt(const Matrix &g, const Matrix &x, Matrix &dw) {
  for (std::size_t o = 0; o < dw.rows; ++o)
    accum_outer_row(g, x, dw, o);
}

void col_sums_accum(const Matrix &g, std::span<double> out) {
  for (std::size_t c = 0; c < g.cols; ++c) {
    double acc = 0.0;
    for (std::size_t r = 0; r < g.rows; ++r)
      acc += g.at(r, c);
    out[c] += acc;
  }
}

void relu_inplace(Matrix &x) {
  for (double &v : x.data)
    if (v < 0.0)
      v = 0.0;
}

void relu_backward_inplace(const Matrix &pre, Matrix &g) {
  for (std::size_t k = 0; k < g.data.size(); ++k)
    if (pre.data[k] <= 0.0)
      g.data[k] = 0.0;
}

void apply_mask_inplace(Matrix &x, std::span<const double> mask) {
  for (std::size_t k = 0; k < x.data.size(); ++k)
    x.data[k] *= mask[k];
}

void edge_pair_scores(const Matrix &h, std::span<const Edge> edges,
                      std::span<const double> w, double b,
                      std::vector<double> &scores) {
  scores.resize(edges.size());
  for (std::size_t k = 0; k < edges.size(); ++k)
    scores[k] = edge_score_one(h, edges[k], w, b);
}

void edge_grad_to_nodes(const Csr &incidence, std::span<const Edge> edges,
                        std::span<const double> ga, std::span<const double> w,
                        const Matrix &h, Matrix &dh) {
  for (std::size_t v = 0; v < dh.rows; ++v)
    edge_grad_node_row(incidence, edges, ga, w, h, dh, v);
}

} // namespace serial

} // namespace geograph::kernels
