#include "inertia/estimators/metrics.hpp"

#include <cmath>
#include <string>

#include "inertia/common/error.hpp"

namespace inertia::estimators {

Metrics compute_metrics(std::span<const double> y, std::span<const double> y_hat, double mu) {
  require(!y.empty(), "metrics: empty split");
  require(y.size() == y_hat.size(), "metrics: " + std::to_string(y.size()) + " labels vs " +
                                        std::to_string(y_hat.size()) + " predictions");
  require(mu > 0.0, "metrics: tolerance must be positive");
  const auto n = static_cast<double>(y.size());
  std::size_t hits = 0;
  double ss_res = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = y[i] - y_hat[i];
    if (std::abs(e) <= mu) ++hits;
    ss_res += e * e;
    mean += y[i];
  }
  mean /= n;
  double ss_tot = 0.0;
  for (double v : y) ss_tot += (v - mean) * (v - mean);
  Metrics m;
  m.n = y.size();
  m.acc = static_cast<double>(hits) / n;
  m.mse = ss_res / n;
  if (ss_tot > 0.0) m.r2 = 1.0 - ss_res / ss_tot;
  return m;
}

double mean_abs_error(std::span<const double> y, std::span<const double> y_hat) {
  require(!y.empty() && y.size() == y_hat.size(), "mean_abs_error: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += std::abs(y[i] - y_hat[i]);
  return s / static_cast<double>(y.size());
}

}  // namespace inertia::estimators
