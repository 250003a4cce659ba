#pragma once

#include <cstddef>
#include <numeric>
#include <vector>

namespace geograph {

// Disjoint-set union with path compression and union by size.
class UnionFind {
public:
  explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    std::size_t root = x;
    while (parent_[root] != root)
      root = parent_[root];
    while (parent_[x] != root) {
      std::size_t next = parent_[x];
      parent_[x] = root;
      x = next;
    }
    return root;
  }

  void merge(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b)
      return;
    if (size_[a] < size_[b])
      std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
  }

  bool connected(std::size_t a, std::size_t b) { return find(a) == find(b); }

private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

} // namespace geograph
