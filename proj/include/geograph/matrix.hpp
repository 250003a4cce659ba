#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace geograph {

// Dense row-major matrix of doubles. Deliberately minimal: the kernels in
// kernels.hpp do all the arithmetic.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double *row(std::size_t i) { return data.data() + i * cols; }
  const double *row(std::size_t i) const { return data.data() + i * cols; }

  double &at(std::size_t i, std::size_t j) {
    assert(i < rows && j < cols);
    return data[i * cols + j];
  }
  double at(std::size_t i, std::size_t j) const {
    assert(i < rows && j < cols);
    return data[i * cols + j];
  }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  bool same_shape(const Matrix &o) const {
    return rows == o.rows && cols == o.cols;
  }
};

} // namespace geograph
