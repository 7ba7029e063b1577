#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace capolab {

// Dense row-major matrix of doubles. Rows index contexts, columns index
// actions everywhere in this library; gradients share the shape of the
// logit table they differentiate.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

  double& operator()(int r, int c) {
    return data[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)];
  }
  double operator()(int r, int c) const {
    return data[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)];
  }

  std::size_t size() const { return data.size(); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  // this += s * o
  void add_scaled(const Matrix& o, double s) {
    for (std::size_t i = 0; i < data.size(); ++i) data[i] += s * o.data[i];
  }

  double l2_norm() const {
    double acc = 0.0;
    for (double v : data) acc += v * v;
    return std::sqrt(acc);
  }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline double l2_distance(const Matrix& a, const Matrix& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace capolab
