#pragma once

#include <vector>

#include "inertia/dynamics/sim_config.hpp"

namespace inertia::dynamics {

enum class ProbeShape { kStep, kPulse, kPrbs };

/// Low-level power injection used to excite the grid. A positive amplitude is
/// an additional load (power drawn) at `bus`.
struct ProbingSignal {
  double amplitude = 0.001;  // pu on system base, 0 <= amplitude <= 0.05
  int bus = 0;               // internal index
  ProbeShape shape = ProbeShape::kStep;
  double width = 0.0;        // s, pulse only
  double period = 0.05;      // s, prbs switching period
  double start = 0.0;        // s

  void validate() const;
};

inline constexpr double kMaxProbeAmplitude = 0.05;

/// Injection value at every simulator sample t_k = k*dt, k = 0..n_steps.
std::vector<double> generate_probing(const ProbingSignal& probe, const SimConfig& cfg);

}  // namespace inertia::dynamics
