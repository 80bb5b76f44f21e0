#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "inertia/common/feature.hpp"
#include "inertia/dynamics/probing.hpp"
#include "inertia/dynamics/sim_config.hpp"
#include "inertia/grid/power_system.hpp"
#include "inertia/signal/pipeline.hpp"

namespace inertia::signal {

struct SampleMeta {
  double probe_amplitude = 0.0;
  std::uint64_t noise_seed = 0;
  int repairs = 0;
  bool zero_power_noise = false;

  bool operator==(const SampleMeta&) const = default;
};

/// One training example. Values are row-major [bus][feature][step].
struct Sample {
  std::size_t n_buses = 0, n_features = 0, n_steps = 0;
  std::vector<float> values;
  double label = 0.0;  // h_sys in seconds
  SampleMeta meta;

  [[nodiscard]] std::size_t n_channels() const { return n_buses * n_features; }
  [[nodiscard]] float at(std::size_t bus, std::size_t feature, std::size_t step) const {
    return values[(bus * n_features + feature) * n_steps + step];
  }

  bool operator==(const Sample&) const = default;
};

/// Per-channel min/max, channel = bus * n_features + feature.
struct Normalization {
  std::vector<double> lo, hi;

  [[nodiscard]] bool empty() const { return lo.empty(); }
  bool operator==(const Normalization&) const = default;
};

/// Everything needed to regenerate or interpret a dataset. Serialized as the
/// bundle manifest.
struct DatasetInfo {
  int schema_version = 1;
  std::string case_name;
  std::vector<int> bus_index;                    // internal bus indices, channel order
  std::vector<int> bus_id;                       // external ids, same order
  std::vector<std::pair<int, int>> edges;        // observed-bus subgraph, local indices
  std::vector<FeatureId> features;
  double rate = 200.0;
  double t0 = 0.0, t1 = 1.0;
  double snr_db = kNoNoise;
  std::uint64_t seed = 0;
  std::vector<double> sweep_h;
  std::vector<double> sweep_pe;
  int probe_bus_id = 0;
  std::string probe_shape = "step";
  dynamics::SimConfig sim;
  double pmu_rate = 200.0;
  double train_fraction = 0.8;
  bool normalized = false;

  bool operator==(const DatasetInfo&) const = default;
};

struct Dataset {
  DatasetInfo info;
  std::vector<Sample> samples;  // canonical order: h major, P_E minor
  Normalization norm;
  std::vector<std::size_t> train, val;

  [[nodiscard]] std::size_t size() const { return samples.size(); }
  bool operator==(const Dataset&) const = default;
};

/// Simulation protocol for a label sweep.
struct SweepConfig {
  std::vector<double> h_values;
  std::vector<double> pe_values;
  int probe_bus = -1;  // internal index; -1 selects the highest-load bus
  dynamics::ProbeShape probe_shape = dynamics::ProbeShape::kStep;
  double probe_start = 0.0;
  double probe_width = 0.0;
  double probe_period = 0.05;
  dynamics::SimConfig sim;
  std::vector<int> buses;  // internal indices; empty selects all generator buses
  double pmu_rate = 200.0;
  std::uint64_t seed = 0;
};

/// h in {3.0, 3.5, ..., 8.0}.
std::vector<double> default_h_sweep();
/// 100 evenly spaced values over [0.001, 0.01].
std::vector<double> default_pe_sweep();
SweepConfig default_sweep_config();

/// Simulates every (h, P_E) pair and returns PMU records in canonical order.
/// The parallel version distributes pairs over OpenMP threads; the result is
/// identical to the serial reference.
std::vector<PmuRecord> simulate_sweep(const grid::PowerSystem& sys, const SweepConfig& cfg);
std::vector<PmuRecord> simulate_sweep_serial(const grid::PowerSystem& sys, const SweepConfig& cfg);

struct PipelineConfig {
  std::vector<FeatureId> features{FeatureId::kDeltaOmega, FeatureId::kRocof};
  double t0 = 0.0, t1 = 1.0;
  double target_rate = 200.0;
  double snr_db = kNoNoise;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
  bool scrub = true;
};

/// Runs scrub, downsample, noise and windowing on each record, then performs
/// the seeded shuffle/split and normalization. `info` supplies the provenance
/// fields not owned by the pipeline (case, sweep, buses).
Dataset build_dataset(std::span<const PmuRecord> records, const PipelineConfig& cfg, DatasetInfo info);

/// Full protocol: simulate_sweep followed by build_dataset.
Dataset assemble_dataset(const grid::PowerSystem& sys, const SweepConfig& sweep,
                         const PipelineConfig& cfg);

/// Fills the provenance fields of `info` that describe `sweep` on `sys`.
DatasetInfo describe_sweep(const grid::PowerSystem& sys, const SweepConfig& sweep);

/// Splits indices 0..n-1 into train/val after a seeded shuffle.
void split_indices(std::size_t n, double train_fraction, std::uint64_t seed,
                   std::vector<std::size_t>& train, std::vector<std::size_t>& val);

/// Fits per-channel min/max on the training split and rescales every sample.
/// Applying it to an already normalized dataset is the identity; the stored
/// constants keep mapping back to raw units.
Dataset normalize(const Dataset& ds);

/// Applies fitted constants to a sample (no clamping).
void apply_normalization(Sample& s, const Normalization& norm);

/// Keeps only the listed buses (internal indices, must be present).
Dataset restrict_buses(const Dataset& ds, std::span<const int> bus_index);

/// Keeps only the listed features (must be present).
Dataset restrict_features(const Dataset& ds, std::span<const FeatureId> features);

/// Stable 64-bit fingerprint of the normalization constants and tensor shape,
/// used to match checkpoints with bundles.
std::uint64_t normalization_hash(const Dataset& ds);

}  // namespace inertia::signal
