#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "inertia/nn/layers.hpp"

namespace inertia::nn {

/// w <- w - lr * grad. Returns false and leaves `w` untouched when any
/// gradient entry is non-finite.
bool sgd_step(std::span<double> w, std::span<const double> grad, double lr);

/// Gradient descent over a parameter set, optionally with heavy-ball momentum
/// (v <- mu v + g; w <- w - lr v).
class Sgd {
 public:
  explicit Sgd(double momentum = 0.0);
  /// Returns false (and changes nothing) if any gradient is non-finite.
  bool step(const std::vector<Param*>& params, double lr);
  [[nodiscard]] double momentum() const { return momentum_; }

 private:
  double momentum_;
};

/// Reduce-on-plateau learning rate. The reference loss passed at
/// construction counts as the best seen so far; every `patience` consecutive
/// observations without an improvement larger than `threshold` multiply the
/// rate by `factor`, down to `floor`.
class PlateauSchedule {
 public:
  PlateauSchedule(double base_lr, double reference_loss, double factor = 0.5, std::size_t patience = 50,
                  double floor = 1e-6, double threshold = 1e-8);

  /// Records one epoch's validation loss and returns the rate to use next.
  double observe(double loss);
  [[nodiscard]] double lr() const { return lr_; }
  [[nodiscard]] std::size_t reductions() const { return reductions_; }
  [[nodiscard]] double best() const { return best_; }

 private:
  double lr_, best_, factor_, floor_, threshold_;
  std::size_t patience_, stale_ = 0, reductions_ = 0;
};

}  // namespace inertia::nn
