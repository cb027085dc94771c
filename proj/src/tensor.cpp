#include "sdnn/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace sdnn {

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<double> values)
    : shape(std::move(dims)), data(std::move(values)) {
  if (data.size() != numel_of(shape))
    throw Error("tensor value count " + std::to_string(data.size()) +
                " does not match shape " + shape_string(shape));
}

std::size_t Tensor::numel_of(const std::vector<std::size_t>& dims) {
  std::size_t n = 1;
  for (std::size_t d : dims) n *= d;
  return n;
}

void Tensor::fill(double v) { std::fill(data.begin(), data.end(), v); }

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

std::size_t Tensor::nonzero_count() const {
  std::size_t n = 0;
  for (double v : data)
    if (v != 0.0) ++n;
  return n;
}

std::string shape_string(const std::vector<std::size_t>& dims) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) os << ", ";
    os << dims[i];
  }
  os << "]";
  return os.str();
}

std::vector<std::size_t> top_k_magnitude_indices(const double* values,
                                                 std::size_t n,
                                                 std::size_t k) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (k >= n) return idx;
  auto larger = [values](std::size_t a, std::size_t b) {
    double ma = std::abs(values[a]), mb = std::abs(values[b]);
    if (ma != mb) return ma > mb;
    return a < b;  // ties keep the lower index
  };
  std::nth_element(idx.begin(), idx.begin() + k, idx.end(), larger);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace sdnn
