#pragma once

#include <cstddef>
#include <vector>

namespace somn {

// Dense (batch, channels, length) tensor of doubles, row-major.
struct Tensor {
  int batch = 0;
  int channels = 0;
  int length = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int b, int c, int n)
      : batch(b), channels(c), length(n),
        v(static_cast<std::size_t>(b) * c * n, 0.0) {}

  double& at(int b, int c, int i) {
    return v[(static_cast<std::size_t>(b) * channels + c) * length + i];
  }
  double at(int b, int c, int i) const {
    return v[(static_cast<std::size_t>(b) * channels + c) * length + i];
  }
  double* row(int b, int c) {
    return v.data() + (static_cast<std::size_t>(b) * channels + c) * length;
  }
  const double* row(int b, int c) const {
    return v.data() + (static_cast<std::size_t>(b) * channels + c) * length;
  }

  std::size_t size() const { return v.size(); }
  bool same_shape(const Tensor& o) const {
    return batch == o.batch && channels == o.channels && length == o.length;
  }
};

// Row-major 2-D matrix.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
  double* row(int r) { return v.data() + static_cast<std::size_t>(r) * cols; }
  const double* row(int r) const { return v.data() + static_cast<std::size_t>(r) * cols; }
};

}  // namespace somn
