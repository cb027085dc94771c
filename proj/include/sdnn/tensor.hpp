#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "sdnn/common.hpp"

namespace sdnn {

// Dense n-dimensional array of doubles, row-major (last index fastest).
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims)
      : shape(std::move(dims)), data(numel_of(shape), 0.0) {}
  Tensor(std::vector<std::size_t> dims, std::vector<double> values);

  static std::size_t numel_of(const std::vector<std::size_t>& dims);

  std::size_t numel() const { return data.size(); }
  bool empty() const { return data.empty(); }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }
  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  void fill(double v);
  bool all_finite() const;
  std::size_t nonzero_count() const;
};

std::string shape_string(const std::vector<std::size_t>& dims);

// Indices of the k largest-magnitude entries of values[0..n).  Ordering is by
// |v| descending with ties broken toward the lower index, so the selection is
// a deterministic function of the input and nested across k.  Returned sorted
// ascending.  k >= n selects everything.
std::vector<std::size_t> top_k_magnitude_indices(const double* values,
                                                 std::size_t n, std::size_t k);

}  // namespace sdnn
