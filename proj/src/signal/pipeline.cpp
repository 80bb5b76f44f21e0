#include "inertia/signal/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "inertia/common/error.hpp"
#include "inertia/common/rng.hpp"

namespace inertia::signal {
namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double m = *mid;
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
  return m;
}

double quantile_of(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// Centered moving average of width w, truncated at the ends.
std::vector<double> moving_average(const std::vector<double>& x, std::size_t w) {
  if (w <= 1) return x;
  const std::size_t n = x.size();
  const std::size_t left = (w - 1) / 2, right = w - 1 - left;
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i >= left ? i - left : 0;
    const std::size_t b = std::min(n - 1, i + right);
    y[i] = (prefix[b + 1] - prefix[a]) / static_cast<double>(b - a + 1);
  }
  return y;
}

std::string channel_label(const PmuChannel& ch) {
  return "bus index " + std::to_string(ch.bus) + " / " + std::string(feature_name(ch.feature));
}

// Returns the number of repaired points.
int scrub_channel(PmuChannel& ch, const ScrubOptions& opts) {
  auto& x = ch.values;
  const std::size_t n = x.size();
  std::vector<char> bad(n, 0);
  std::vector<double> finite;
  finite.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isfinite(x[i]))
      finite.push_back(x[i]);
    else
      bad[i] = 1;
  }

  if (!finite.empty()) {
    std::vector<double> resid(n, 0.0), window;
    std::vector<double> abs_resid;
    for (std::size_t i = 0; i < n; ++i) {
      if (bad[i]) continue;
      window.clear();
      const std::size_t a = i >= 2 ? i - 2 : 0;
      const std::size_t b = std::min(n - 1, i + 2);
      for (std::size_t j = a; j <= b; ++j)
        if (!bad[j]) window.push_back(x[j]);
      resid[i] = x[i] - median_of(window);
      abs_resid.push_back(resid[i]);
    }
    const double med = median_of(abs_resid);
    for (auto& r : abs_resid) r = std::abs(r - med);
    const double robust_sd = 1.4826 * median_of(abs_resid);
    const double spread = quantile_of(finite, 0.95) - quantile_of(finite, 0.05);
    const double threshold = std::max(opts.k * robust_sd, 0.1 * spread);
    for (std::size_t i = 0; i < n; ++i)
      if (!bad[i] && std::abs(resid[i] - med) > threshold) bad[i] = 1;
  }

  const auto n_bad = static_cast<std::size_t>(std::count(bad.begin(), bad.end(), 1));
  if (n_bad == 0) return 0;
  if (static_cast<double>(n_bad) > opts.max_bad_fraction * static_cast<double>(n))
    throw DataError("channel " + channel_label(ch) + " unusable: " + std::to_string(n_bad) + " of " +
                    std::to_string(n) + " points are bad");

  std::size_t prev = n;  // last good index, n = none
  for (std::size_t i = 0; i < n; ++i) {
    if (!bad[i]) {
      prev = i;
      continue;
    }
    std::size_t next = i + 1;
    while (next < n && bad[next]) ++next;
    if (prev == n) {
      x[i] = x[next];
    } else if (next == n) {
      x[i] = x[prev];
    } else {
      const double t = static_cast<double>(i - prev) / static_cast<double>(next - prev);
      x[i] = x[prev] + t * (x[next] - x[prev]);
    }
  }
  return static_cast<int>(n_bad);
}

}  // namespace

PmuRecord scrub_bad_data(const PmuRecord& record, const ScrubOptions& opts) {
  require(record.n_samples() > 0, "scrub_bad_data: empty record");
  require(opts.k > 0.0 && opts.max_bad_fraction >= 0.0 && opts.max_bad_fraction < 1.0,
          "scrub_bad_data: invalid options");
  PmuRecord out = record;
  for (auto& ch : out.channels) out.repairs += scrub_channel(ch, opts);
  return out;
}

PmuRecord downsample(const PmuRecord& record, double target_rate) {
  require(record.n_samples() > 0, "downsample: empty record");
  require(target_rate > 0.0, "downsample: target rate must be positive");
  if (target_rate > record.rate * (1.0 + 1e-12))
    throw InvalidArgument("downsample: target rate " + std::to_string(target_rate) +
                          " Hz exceeds the source rate " + std::to_string(record.rate) + " Hz");
  const double factor = record.rate / target_rate;
  const double rounded = std::round(factor);
  PmuRecord out = record;
  out.rate = target_rate;
  const std::size_t n = record.n_samples();

  if (std::abs(factor - rounded) < 1e-9 * factor) {
    const auto f = static_cast<std::size_t>(rounded);
    if (f == 1) {
      out.rate = record.rate;
      return out;
    }
    const std::size_t n_out = (n - 1) / f + 1;
    for (auto& ch : out.channels) {
      const auto filtered = moving_average(ch.values, f);
      ch.values.resize(n_out);
      for (std::size_t j = 0; j < n_out; ++j) ch.values[j] = filtered[j * f];
    }
    return out;
  }

  auto w = static_cast<std::size_t>(std::floor(factor));
  if (w % 2 == 0) --w;
  const double duration = record.duration();
  const auto n_out = static_cast<std::size_t>(std::floor(duration * target_rate + 1e-9)) + 1;
  for (auto& ch : out.channels) {
    const auto filtered = moving_average(ch.values, w);
    ch.values.resize(n_out);
    for (std::size_t j = 0; j < n_out; ++j) {
      const double pos = static_cast<double>(j) * factor;
      auto i = static_cast<std::size_t>(std::floor(pos));
      if (i >= n - 1) {
        ch.values[j] = filtered[n - 1];
        continue;
      }
      const double t = pos - static_cast<double>(i);
      ch.values[j] = filtered[i] + t * (filtered[i + 1] - filtered[i]);
    }
  }
  return out;
}

double noise_variance(double power, double snr_db) {
  require(power >= 0.0, "noise_variance: negative power");
  require(std::isfinite(snr_db), "noise_variance: SNR must be finite");
  return power / std::pow(10.0, snr_db / 10.0);
}

PmuRecord add_noise(const PmuRecord& record, double snr_db, std::uint64_t seed) {
  if (snr_db == kNoNoise) return record;
  require(std::isfinite(snr_db), "add_noise: SNR must be finite or the no-noise sentinel");
  PmuRecord out = record;
  for (std::size_t c = 0; c < out.channels.size(); ++c) {
    auto& x = out.channels[c].values;
    if (x.empty()) continue;
    const double n = static_cast<double>(x.size());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double power = 0.0;
    for (double v : x) power += (v - mean) * (v - mean);
    power /= n;
    if (power == 0.0) {
      for (double v : x) power += v * v;
      power /= n;
      out.zero_power_noise = true;
    }
    const double sd = std::sqrt(noise_variance(power, snr_db));
    Rng rng(derive_seed(seed, SeedStream::kNoise, c));
    std::normal_distribution<double> normal(0.0, sd);
    if (sd > 0.0)
      for (double& v : x) v += normal(rng);
  }
  return out;
}

Window extract_window(const PmuRecord& record, std::span<const FeatureId> features, double t0,
                      double t1) {
  require(!features.empty(), "extract_window: no features requested");
  const double dur = record.duration();
  if (!(t0 >= 0.0 && t1 > t0 && t1 <= dur + 1e-9))
    throw InvalidArgument("extract_window: window [" + std::to_string(t0) + ", " + std::to_string(t1) +
                          "] is empty or outside the record (duration " + std::to_string(dur) + " s)");
  const auto i0 = static_cast<std::size_t>(std::llround(t0 * record.rate));
  const auto len = static_cast<std::size_t>(std::llround((t1 - t0) * record.rate));
  require(len > 0 && i0 + len <= record.n_samples(), "extract_window: window exceeds the record");

  Window w;
  w.n_buses = record.buses.size();
  w.n_features = features.size();
  w.n_steps = len;
  w.values.resize(w.n_buses * w.n_features * len);
  for (std::size_t b = 0; b < w.n_buses; ++b) {
    for (std::size_t f = 0; f < w.n_features; ++f) {
      const auto& ch = record.channel(record.buses[b], features[f]);
      std::copy_n(ch.values.begin() + static_cast<std::ptrdiff_t>(i0), len,
                  w.values.begin() + static_cast<std::ptrdiff_t>((b * w.n_features + f) * len));
    }
  }
  return w;
}

double empirical_snr_db(std::span<const double> clean, std::span<const double> noisy) {
  require(clean.size() == noisy.size() && !clean.empty(), "empirical_snr_db: size mismatch");
  const double n = static_cast<double>(clean.size());
  const double mean = std::accumulate(clean.begin(), clean.end(), 0.0) / n;
  double sig = 0.0, err = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    sig += (clean[i] - mean) * (clean[i] - mean);
    err += (noisy[i] - clean[i]) * (noisy[i] - clean[i]);
  }
  require(err > 0.0, "empirical_snr_db: no noise present");
  return 10.0 * std::log10(sig / err);
}

}  // namespace inertia::signal
