#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "geograph/graph.hpp"
#include "geograph/matrix.hpp"

namespace geograph {

// Compressed sparse adjacency. rows() == offsets.size() - 1; cols holds the
// neighbor ids of row v in [offsets[v], offsets[v+1]), in edge order (sorted
// ascending when the edge list is sorted by (i, j)).
struct Csr {
  std::vector<std::size_t> offsets;
  std::vector<std::size_t> cols;

  std::size_t rows() const { return offsets.empty() ? 0 : offsets.size() - 1; }
};

// Undirected adjacency over n nodes (both directions of every edge).
Csr build_adjacency(std::size_t n, std::span<const Edge> edges);

// Per node: incident edge slots packed as edge_index*2 + (node == edge.j).
// Used to gather edge-score gradients back onto nodes without races.
Csr build_incidence(std::size_t n, std::span<const Edge> edges);

} // namespace geograph

// Data-parallel kernels. Every kernel parallelizes over independent output
// rows/elements, so results are bit-identical to the serial reference in
// kernels::serial regardless of thread count. tests/test_kernels.cpp asserts
// the parity; tools/bench_kernels.cpp compares throughput.
namespace geograph::kernels {

// y = x * w^T + bias (bias broadcast per row; pass empty to skip).
// x [n x in], w [out x in], y [n x out].
void linear_nt(const Matrix &x, const Matrix &w, std::span<const double> bias,
               Matrix &y);

// y = g * w.  g [n x out], w [out x in], y [n x in].
void matmul_nn(const Matrix &g, const Matrix &w, Matrix &y);

// s[v] = sum of x[w] over neighbors w of v.
void neighbor_sum(const Csr &adj, const Matrix &x, Matrix &s);

// s[v] = mean of x[w] over neighbors w of v; zero row for isolated nodes.
void neighbor_mean(const Csr &adj, const Matrix &x, Matrix &s);

// x[v] *= factors[v] for every row v.
void scale_rows_inplace(Matrix &x, std::span<const double> factors);

// dw += g^T * x.  g [n x out], x [n x in], dw [out x in].
void accum_outer_nt(const Matrix &g, const Matrix &x, Matrix &dw);

// out[j] += sum over rows of g[., j].
void col_sums_accum(const Matrix &g, std::span<double> out);

void relu_inplace(Matrix &x);

// g <- g where pre > 0 else 0 (elementwise).
void relu_backward_inplace(const Matrix &pre, Matrix &g);

// x <- x .* mask (elementwise; mask carries the inverted-dropout scaling).
void apply_mask_inplace(Matrix &x, std::span<const double> mask);

// Sigmoid edge scorer over symmetric pair features of node embeddings
// h [n x d]:
//   a_ij      = w[0:d].(h_i + h_j) + w[d:2d].|h_i - h_j| + b
//   scores[k] = sigmoid(a_ij)
// Symmetric in (i, j) by construction. A plain linear map over the ordered
// concatenation is additive in the pair and provably cannot separate two
// same-object clusters from their cross edges; the |h_i - h_j| channel
// carries the pair interaction.
void edge_pair_scores(const Matrix &h, std::span<const Edge> edges,
                      std::span<const double> w, double b,
                      std::vector<double> &scores);

// Gathers per-edge pre-activation gradients back onto node embeddings:
//   dh_i += ga[k] * (w_sum + w_diff * sign(h_i - h_j))
//   dh_j += ga[k] * (w_sum - w_diff * sign(h_i - h_j))
// using the incidence structure so each node row is written by one thread.
void edge_grad_to_nodes(const Csr &incidence, std::span<const Edge> edges,
                        std::span<const double> ga, std::span<const double> w,
                        const Matrix &h, Matrix &dh);

namespace serial {
void linear_nt(const Matrix &x, const Matrix &w, std::span<const double> bias,
               Matrix &y);
void matmul_nn(const Matrix &g, const Matrix &w, Matrix &y);
void neighbor_sum(const Csr &adj, const Matrix &x, Matrix &s);
void neighbor_mean(const Csr &adj, const Matrix &x, Matrix &s);
void scale_rows_inplace(Matrix &x, std::span<const double> factors);
void accum_outer_nt(const Matrix &g, const Matrix &x, Matrix &dw);
void col_sums_accum(const Matrix &g, std::span<double> out);
void relu_inplace(Matrix &x);
void relu_backward_inplace(const Matrix &pre, Matrix &g);
void apply_mask_inplace(Matrix &x, std::span<const double> mask);
void edge_pair_scores(const Matrix &h, std::span<const Edge> edges,
                      std::span<const double> w, double b,
                      std::vector<double> &scores);
void edge_grad_to_nodes(const Csr &incidence, std::span<const Edge> edges,
                        std::span<const double> ga, std::span<const double> w,
                        const Matrix &h, Matrix &dh);
} // namespace serial

} // namespace geograph::kernels
