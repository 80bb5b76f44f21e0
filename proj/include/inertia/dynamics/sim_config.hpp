#pragma once

#include <cstddef>
#include <cstdint>

namespace inertia::dynamics {

struct SimConfig {
  double dt = 1e-3;           // s
  double duration = 2.0;      // s
  double droop_gain = 20.0;   // pu power / pu speed, machine base (5 % droop)
  double governor_tc = 0.5;   // s
  std::uint64_t seed = 0;
  int rocof_window = 5;       // moving-average width at simulator resolution
  double ambient_sigma = 0.0; // std of ambient load fluctuation, fraction of bus load
  double ambient_tc = 1.0;    // s, correlation time of the ambient fluctuation

  [[nodiscard]] std::size_t n_steps() const;
  void validate() const;

  bool operator==(const SimConfig&) const = default;
};

}  // namespace inertia::dynamics
