#include "inertia/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "inertia/common/error.hpp"

namespace inertia::nn {

std::size_t shape_size(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(s[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)), data(shape_size(shape), fill) {}

void Tensor::resize(Shape s) {
  shape = std::move(s);
  data.resize(shape_size(shape));
}

void Tensor::fill(double v) { std::fill(data.begin(), data.end(), v); }

void Tensor::reshape(Shape s) {
  require(shape_size(s) == data.size(), "reshape " + shape_string(shape) + " -> " + shape_string(s));
  shape = std::move(s);
}

bool Tensor::all_finite() const {
  return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace inertia::nn
