#pragma once

#include <span>
#include <vector>

#include "inertia/common/feature.hpp"
#include "inertia/dynamics/simulator.hpp"

namespace inertia::dynamics {

struct PmuChannel {
  int bus = 0;  // internal index
  FeatureId feature = FeatureId::kDeltaOmega;
  std::vector<double> values;
};

/// Synchrophasor-style record: one channel per (bus, feature), all sampled at
/// `rate` starting at `start_time`.
struct PmuRecord {
  std::vector<int> buses;
  double rate = 200.0;  // Hz, within [10, 240] when produced by sample_pmu
  double start_time = 0.0;
  std::vector<PmuChannel> channels;
  double label_h_sys = 0.0;
  double probe_amplitude = 0.0;
  int repairs = 0;              // points replaced by scrub_bad_data
  bool zero_power_noise = false;  // add_noise fell back to full-signal power

  [[nodiscard]] std::size_t n_samples() const {
    return channels.empty() ? 0 : channels.front().values.size();
  }
  [[nodiscard]] double duration() const {
    return n_samples() == 0 ? 0.0 : static_cast<double>(n_samples() - 1) / rate;
  }
  /// Channel lookup; throws InvalidArgument if absent.
  [[nodiscard]] const PmuChannel& channel(int bus, FeatureId f) const;
};

inline constexpr double kMinPmuRate = 10.0;
inline constexpr double kMaxPmuRate = 240.0;

/// Decimates a trace to `rate` (which must divide the simulator rate) and
/// attaches delta-omega, RoCoF and voltage-magnitude deviation channels for
/// each requested bus.
PmuRecord sample_pmu(const SimulationTrace& trace, std::span<const int> buses, double rate);

}  // namespace inertia::dynamics
