// Compares the OpenMP kernels against the serial reference implementations.
// Usage: bench_kernels [n_nodes] [dim] [repeats]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "geograph/kernels.hpp"
#include "geograph/rng.hpp"

using namespace geograph;

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

Matrix random_matrix(std::size_t r, std::size_t c, Rng &rng) {
  Matrix m(r, c);
  for (double &v : m.data)
    v = rng.uniform(-1.0, 1.0);
  return m;
}

template <class Fn> double time_best_of(int repeats, Fn &&fn) {
  double best = 1e300;
  for (int i = 0; i < repeats; ++i) {
    auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, ms_since(t0));
  }
  return best;
}

void report(const char *name, double serial_ms, double parallel_ms) {
  std::printf("%-18s serial %9.3f ms   omp %9.3f ms   speedup %5.2fx\n", name,
              serial_ms, parallel_ms, serial_ms / parallel_ms);
}

} // namespace

int main(int argc, char **argv) {
  const std::size_t n = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 2000;
  const std::size_t dim = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 64;
  const int repeats = argc > 3 ? std::atoi(argv[3]) : 5;

  Rng rng(42);
  Matrix x = random_matrix(n, dim, rng);
  Matrix w = random_matrix(dim, dim, rng);
  std::vector<double> bias(dim, 0.1);
  Matrix y(n, dim);

  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < std::min(n, i + 32); ++j)
      edges.push_back({i, j});
  Csr adj = build_adjacency(n, edges);
  Csr inc = build_incidence(n, edges);

  std::printf("n=%zu dim=%zu edges=%zu repeats=%d\n", n, dim, edges.size(),
              repeats);

  report("linear_nt",
         time_best_of(repeats,
                      [&] { kernels::serial::linear_nt(x, w, bias, y); }),
         time_best_of(repeats, [&] { kernels::linear_nt(x, w, bias, y); }));

  Matrix s(n, dim);
  report("neighbor_sum",
         time_best_of(repeats,
                      [&] { kernels::serial::neighbor_sum(adj, x, s); }),
         time_best_of(repeats, [&] { kernels::neighbor_sum(adj, x, s); }));

  Matrix dw(dim, dim);
  report("accum_outer_nt",
         time_best_of(repeats,
                      [&] {
                        dw.fill(0.0);
                        kernels::serial::accum_outer_nt(y, x, dw);
                      }),
         time_best_of(repeats, [&] {
           dw.fill(0.0);
           kernels::accum_outer_nt(y, x, dw);
         }));

  Matrix dx(n, dim);
  report("matmul_nn",
         time_best_of(repeats, [&] { kernels::serial::matmul_nn(y, w, dx); }),
         time_best_of(repeats, [&] { kernels::matmul_nn(y, w, dx); }));

  std::vector<double> sw(2 * dim, 0.05);
  std::vector<double> scores;
  report("edge_pair_scores",
         time_best_of(repeats,
                      [&] {
                        kernels::serial::edge_pair_scores(x, edges, sw, 0.0,
                                                          scores);
                      }),
         time_best_of(repeats, [&] {
           kernels::edge_pair_scores(x, edges, sw, 0.0, scores);
         }));

  Matrix dh(n, dim);
  report("edge_grad_to_nodes",
         time_best_of(repeats,
                      [&] {
                        dh.fill(0.0);
                        kernels::serial::edge_grad_to_nodes(inc, edges, scores,
                                                            sw, x, dh);
                      }),
         time_best_of(repeats, [&] {
           dh.fill(0.0);
           kernels::edge_grad_to_nodes(inc, edges, scores, sw, x, dh);
         }));

  return 0;
}
