#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "inertia/nn/layers.hpp"

namespace inertia::nn {

struct GradCheckOptions {
  double eps = 1e-5;
  /// Denominator floor of the relative error |a - n| / max(|a|, |n|, floor).
  double abs_floor = 1e-6;
  /// A coordinate whose central differences at eps and eps/2 disagree by more
  /// than this (relative) straddles a kink (ReLU at 0, max-pool tie) and is
  /// excluded instead of failing.
  double kink_tol = 1e-3;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t excluded = 0;
};

/// Compares `analytic` with central differences of `f` around `x`, one
/// coordinate at a time. `x` is restored on return.
GradCheckResult check_gradient(const std::function<double()>& f, std::span<double> x,
                               std::span<const double> analytic, const GradCheckOptions& opts = {});

/// Checks every parameter and input coordinate of `model` under the scalar
/// loss sum_i r_i y_i with seeded random weights r.
GradCheckResult grad_check_model(Sequential& model, const Tensor& x, std::uint64_t seed,
                                 const GradCheckOptions& opts = {});

/// Same check for a single layer.
GradCheckResult grad_check_layer(Layer& layer, const Tensor& x, std::uint64_t seed,
                                 const GradCheckOptions& opts = {});

}  // namespace inertia::nn
