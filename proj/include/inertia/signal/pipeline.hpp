#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "inertia/common/feature.hpp"
#include "inertia/dynamics/pmu.hpp"

namespace inertia::signal {

using dynamics::PmuChannel;
using dynamics::PmuRecord;

/// Pass as `snr_db` to disable noise injection.
inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

struct ScrubOptions {
  double k = 8.0;                 // spike threshold in robust standard deviations
  double max_bad_fraction = 0.2;  // above this a channel is unusable
};

/// Replaces non-finite points and isolated spikes by linear interpolation.
/// Spikes are residuals from a 5-point running median larger than k robust
/// deviations (1.4826 * MAD of the residual), with a floor tied to the
/// channel's own spread so smooth records are left untouched.
/// Throws DataError when a channel has too many bad points.
PmuRecord scrub_bad_data(const PmuRecord& record, const ScrubOptions& opts = {});

/// Moving-average anti-alias filter followed by decimation. Integral factors
/// keep every factor-th filtered sample; otherwise the filtered channel is
/// resampled by linear interpolation onto the target grid.
PmuRecord downsample(const PmuRecord& record, double target_rate);

/// Noise variance giving `snr_db` for a channel of mean-square `power`.
double noise_variance(double power, double snr_db);

/// Adds zero-mean Gaussian noise per channel. Signal power is the variance of
/// the channel; all-constant channels fall back to the raw mean square and
/// set `zero_power_noise`. `snr_db == kNoNoise` returns the input unchanged.
PmuRecord add_noise(const PmuRecord& record, double snr_db, std::uint64_t seed);

/// Slab [bus][feature][step] with n_steps = round((t1 - t0) * rate), times
/// relative to the record start.
struct Window {
  std::size_t n_buses = 0, n_features = 0, n_steps = 0;
  std::vector<double> values;
};

Window extract_window(const PmuRecord& record, std::span<const FeatureId> features, double t0,
                      double t1);

/// Empirical SNR in dB of `noisy` relative to `clean` (variance of clean over
/// mean square of the difference).
double empirical_snr_db(std::span<const double> clean, std::span<const double> noisy);

}  // namespace inertia::signal
