#include "inertia/nn/optim.hpp"

#include <algorithm>
#include <cmath>

#include "inertia/common/error.hpp"

namespace inertia::nn {

bool sgd_step(std::span<double> w, std::span<const double> grad, double lr) {
  require(w.size() == grad.size(), "sgd_step: size mismatch");
  require(lr >= 0.0, "sgd_step: learning rate must be non-negative");
  if (!std::all_of(grad.begin(), grad.end(), [](double g) { return std::isfinite(g); })) return false;
  for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * grad[i];
  return true;
}

Sgd::Sgd(double momentum) : momentum_(momentum) {
  require(momentum >= 0.0 && momentum < 1.0, "sgd: momentum must be in [0, 1)");
}

bool Sgd::step(const std::vector<Param*>& params, double lr) {
  require(lr >= 0.0, "sgd: learning rate must be non-negative");
  for (const auto* p : params)
    if (!p->grad.all_finite()) return false;
  for (auto* p : params) {
    if (momentum_ == 0.0) {
      sgd_step(p->value.data, p->grad.data, lr);
      continue;
    }
    auto& v = p->velocity.data;
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = momentum_ * v[i] + p->grad.data[i];
      p->value.data[i] -= lr * v[i];
    }
  }
  return true;
}

PlateauSchedule::PlateauSchedule(double base_lr, double reference_loss, double factor, std::size_t patience,
                                 double floor, double threshold)
    : lr_(base_lr), best_(reference_loss), factor_(factor), floor_(floor), threshold_(threshold),
      patience_(patience) {
  require(base_lr >= 0.0, "plateau: base learning rate must be non-negative");
  require(factor > 0.0 && factor < 1.0, "plateau: factor must be in (0, 1)");
  require(patience >= 1, "plateau: patience must be at least 1");
}

double PlateauSchedule::observe(double loss) {
  if (loss < best_ - threshold_) {
    best_ = loss;
    stale_ = 0;
    return lr_;
  }
  if (++stale_ >= patience_) {
    const double next = std::max(lr_ * factor_, floor_);
    if (next < lr_) ++reductions_;
    lr_ = std::min(lr_, next);
    stale_ = 0;
  }
  return lr_;
}

}  // namespace inertia::nn
