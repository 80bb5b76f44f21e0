#include "inertia/dynamics/pmu.hpp"

#include <cmath>
#include <string>

#include "inertia/common/error.hpp"

namespace inertia::dynamics {

const PmuChannel& PmuRecord::channel(int bus, FeatureId f) const {
  for (const auto& c : channels)
    if (c.bus == bus && c.feature == f) return c;
  throw InvalidArgument("record has no channel for bus index " + std::to_string(bus) + " / " +
                        std::string(feature_name(f)));
}

PmuRecord sample_pmu(const SimulationTrace& trace, std::span<const int> buses, double rate) {
  require(!buses.empty(), "sample_pmu: bus set is empty");
  require(rate >= kMinPmuRate && rate <= kMaxPmuRate, "sample_pmu: rate must be within [10, 240] Hz");
  require(trace.dt > 0.0 && trace.n_samples() > 0, "sample_pmu: empty trace");
  const double sim_rate = 1.0 / trace.dt;
  const double ratio = sim_rate / rate;
  const auto factor = static_cast<std::size_t>(std::llround(ratio));
  if (factor < 1 || std::abs(ratio - static_cast<double>(factor)) > 1e-9 * ratio)
    throw InvalidArgument("sample_pmu: rate " + std::to_string(rate) +
                          " Hz does not divide the simulator rate " + std::to_string(sim_rate) + " Hz");

  PmuRecord rec;
  rec.rate = rate;
  rec.start_time = trace.times.front();
  rec.label_h_sys = trace.label_h_sys;
  for (double u : trace.injection) rec.probe_amplitude = std::max(rec.probe_amplitude, std::abs(u));
  const std::size_t n_out = (trace.n_samples() - 1) / factor + 1;

  for (int b : buses) {
    require(b >= 0 && static_cast<std::size_t>(b) < trace.n_buses(), "sample_pmu: bus out of range");
    rec.buses.push_back(b);
    for (auto f : kAllFeatures) {
      PmuChannel ch{b, f, std::vector<double>(n_out)};
      for (std::size_t k = 0; k < n_out; ++k) {
        const std::size_t src = k * factor;
        switch (f) {
          case FeatureId::kDeltaOmega: ch.values[k] = trace.delta_omega[b][src]; break;
          case FeatureId::kRocof: ch.values[k] = trace.rocof[b][src]; break;
          case FeatureId::kVoltMag: ch.values[k] = trace.v_mag[b][src] - trace.v_mag0[b]; break;
        }
      }
      rec.channels.push_back(std::move(ch));
    }
  }
  return rec;
}

}  // namespace inertia::dynamics
