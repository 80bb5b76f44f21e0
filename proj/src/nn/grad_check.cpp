#include "inertia/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace inertia::nn {
namespace {

void merge(GradCheckResult& into, const GradCheckResult& r) {
  into.max_rel_error = std::max(into.max_rel_error, r.max_rel_error);
  into.checked += r.checked;
  into.excluded += r.excluded;
}

Buffer projection(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Buffer r(n);
  for (double& v : r) v = u(rng);
  return r;
}

double dot(const Buffer& a, const Buffer& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Runs the check over params + input for anything with forward/backward.
template <typename Fwd, typename Bwd>
GradCheckResult check_all(const std::vector<Param*>& params, Tensor x, std::uint64_t seed,
                          const GradCheckOptions& opts, Fwd&& forward, Bwd&& backward) {
  const Tensor& y0 = forward(x);
  const auto r = projection(y0.size(), seed);
  for (auto* p : params) p->grad.fill(0.0);
  Tensor dy(y0.shape);
  dy.data = r;
  const Tensor dx = backward(dy);

  std::vector<Buffer> analytic;
  for (auto* p : params) analytic.push_back(p->grad.data);

  auto loss = [&] { return dot(forward(x).data, r); };
  GradCheckResult total;
  for (std::size_t i = 0; i < params.size(); ++i)
    merge(total, check_gradient(loss, params[i]->value.data, analytic[i], opts));
  merge(total, check_gradient(loss, x.data, dx.data, opts));
  return total;
}

}  // namespace

GradCheckResult check_gradient(const std::function<double()>& f, std::span<double> x,
                               std::span<const double> analytic, const GradCheckOptions& opts) {
  GradCheckResult res;
  const double h = opts.eps;
  const double f0 = f();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = f();
    x[i] = x0 - h;
    const double fm = f();
    x[i] = x0 + 0.5 * h;
    const double fp2 = f();
    x[i] = x0 - 0.5 * h;
    const double fm2 = f();
    x[i] = x0;
    const double n1 = (fp - fm) / (2.0 * h);
    const double n2 = (fp2 - fm2) / h;
    const double scale = std::max({std::abs(n1), std::abs(n2), opts.abs_floor});
    // One-sided slopes: their gap scales with h on smooth functions but stays fixed at a kink.
    const double gap1 = (fp - f0) / h - (f0 - fm) / h;
    const double gap2 = (fp2 - f0) / (0.5 * h) - (f0 - fm2) / (0.5 * h);
    const bool kink = std::abs(gap1 - 2.0 * gap2) > opts.kink_tol * scale;
    if (kink || std::abs(n1 - n2) > opts.kink_tol * scale) {
      ++res.excluded;
      continue;
    }
    const double a = analytic[i];
    const double rel = std::abs(a - n1) / std::max({std::abs(a), std::abs(n1), opts.abs_floor});
    res.max_rel_error = std::max(res.max_rel_error, rel);
    ++res.checked;
  }
  return res;
}

GradCheckResult grad_check_model(Sequential& model, const Tensor& x, std::uint64_t seed,
                                 const GradCheckOptions& opts) {
  return check_all(
      model.params(), x, seed, opts, [&](const Tensor& in) -> const Tensor& { return model.forward(in); },
      [&](const Tensor& dy) { return model.backward(dy); });
}

GradCheckResult grad_check_layer(Layer& layer, const Tensor& x, std::uint64_t seed, const GradCheckOptions& opts) {
  Tensor y, dx;
  return check_all(
      layer.params(), x, seed, opts,
      [&](const Tensor& in) -> const Tensor& {
        layer.forward(in, y);
        return y;
      },
      [&](const Tensor& dy) {
        layer.backward(dy, dx);
        return dx;
      });
}

}  // namespace inertia::nn
