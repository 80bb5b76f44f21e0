#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace inertia::nn {

using Shape = std::vector<std::size_t>;

/// Storage aligned to Eigen's largest packet so vectorized reductions take the
/// same path on every allocation.
using Buffer = std::vector<double, Eigen::aligned_allocator<double>>;

std::size_t shape_size(const Shape& s);
std::string shape_string(const Shape& s);

/// Dense row-major float64 array.
struct Tensor {
  Shape shape;
  Buffer data;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0);

  [[nodiscard]] std::size_t size() const { return data.size(); }
  [[nodiscard]] std::size_t dim(std::size_t i) const { return shape.at(i); }
  [[nodiscard]] std::size_t rank() const { return shape.size(); }
  double* ptr() { return data.data(); }
  [[nodiscard]] const double* ptr() const { return data.data(); }

  void resize(Shape s);  // contents unspecified after a size change
  void fill(double v);
  void reshape(Shape s);  // same element count

  [[nodiscard]] bool all_finite() const;
  bool operator==(const Tensor&) const = default;
};

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

inline MatMap as_matrix(double* p, std::size_t rows, std::size_t cols) {
  return {p, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}
inline ConstMatMap as_matrix(const double* p, std::size_t rows, std::size_t cols) {
  return {p, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

}  // namespace inertia::nn
