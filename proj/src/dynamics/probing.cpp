#include "inertia/dynamics/probing.hpp"

#include <cmath>
#include <random>

#include "inertia/common/error.hpp"
#include "inertia/common/rng.hpp"

namespace inertia::dynamics {

std::size_t SimConfig::n_steps() const {
  return static_cast<std::size_t>(std::llround(duration / dt));
}

void SimConfig::validate() const {
  require(dt > 0.0 && dt <= 0.005, "SimConfig: dt must be in (0, 0.005]");
  require(duration >= 2.0, "SimConfig: duration must be at least 2 s");
  require(governor_tc > 0.0, "SimConfig: governor_tc must be positive");
  require(droop_gain >= 0.0, "SimConfig: droop_gain must be non-negative");
  require(rocof_window >= 1 && rocof_window % 2 == 1, "SimConfig: rocof_window must be odd");
  require(ambient_sigma >= 0.0 && ambient_tc > 0.0, "SimConfig: invalid ambient fluctuation");
}

void ProbingSignal::validate() const {
  require(amplitude >= 0.0 && amplitude <= kMaxProbeAmplitude,
          "probe amplitude must be within [0, 0.05] pu");
  require(start >= 0.0, "probe start must be non-negative");
  require(width >= 0.0, "pulse width must be non-negative");
  require(shape != ProbeShape::kPrbs || period > 0.0, "prbs period must be positive");
}

std::vector<double> generate_probing(const ProbingSignal& probe, const SimConfig& cfg) {
  probe.validate();
  cfg.validate();
  const std::size_t n = cfg.n_steps();
  std::vector<double> u(n + 1, 0.0);
  // Small tolerance so that sample times computed as k*dt land on the
  // intended side of a switching instant.
  const double eps = 1e-9 * cfg.dt;

  switch (probe.shape) {
    case ProbeShape::kStep:
      for (std::size_t k = 0; k <= n; ++k)
        if (k * cfg.dt >= probe.start - eps) u[k] = probe.amplitude;
      break;
    case ProbeShape::kPulse:
      for (std::size_t k = 0; k <= n; ++k) {
        const double t = k * cfg.dt;
        if (t >= probe.start - eps && t < probe.start + probe.width - eps) u[k] = probe.amplitude;
      }
      break;
    case ProbeShape::kPrbs: {
      Rng rng(derive_seed(cfg.seed, SeedStream::kProbing));
      std::bernoulli_distribution bit(0.5);
      long current_slot = -1;
      double level = probe.amplitude;
      for (std::size_t k = 0; k <= n; ++k) {
        const double t = k * cfg.dt;
        if (t < probe.start - eps) continue;
        const long slot = static_cast<long>(std::floor((t - probe.start + eps) / probe.period));
        while (current_slot < slot) {
          level = bit(rng) ? probe.amplitude : -probe.amplitude;
          ++current_slot;
        }
        u[k] = level;
      }
      break;
    }
  }
  return u;
}

}  // namespace inertia::dynamics
