#pragma once

#include <cstddef>
#include <optional>
#include <span>

namespace inertia::estimators {

struct Metrics {
  double acc = 0.0;          // fraction with |y - y_hat| <= mu
  double mse = 0.0;          // seconds^2
  std::optional<double> r2;  // absent when the labels have zero variance
  std::size_t n = 0;
};

/// ACC, MSE and R^2 of predictions against labels. mu must be positive
/// (infinity is allowed and gives ACC = 1).
Metrics compute_metrics(std::span<const double> y, std::span<const double> y_hat, double mu = 0.5);

/// Mean absolute error.
double mean_abs_error(std::span<const double> y, std::span<const double> y_hat);

}  // namespace inertia::estimators
