#include "inertia/signal/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <exception>
#include <numeric>
#include <sstream>

#include "inertia/common/error.hpp"
#include "inertia/common/rng.hpp"
#include "inertia/dynamics/simulator.hpp"

namespace inertia::signal {
namespace {

std::vector<int> resolve_buses(const grid::PowerSystem& sys, const SweepConfig& cfg) {
  std::vector<int> buses = cfg.buses.empty() ? grid::generator_buses(sys) : cfg.buses;
  for (int b : buses)
    require(b >= 0 && static_cast<std::size_t>(b) < sys.n_buses(), "sweep: PMU bus out of range");
  std::vector<int> sorted = buses;
  std::sort(sorted.begin(), sorted.end());
  require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), "sweep: duplicate PMU bus");
  return buses;
}

int resolve_probe_bus(const grid::PowerSystem& sys, const SweepConfig& cfg) {
  const int b = cfg.probe_bus < 0 ? grid::highest_load_bus(sys) : cfg.probe_bus;
  require(static_cast<std::size_t>(b) < sys.n_buses(), "sweep: probe bus out of range");
  return b;
}

const char* shape_name(dynamics::ProbeShape s) {
  switch (s) {
    case dynamics::ProbeShape::kStep: return "step";
    case dynamics::ProbeShape::kPulse: return "pulse";
    case dynamics::ProbeShape::kPrbs: return "prbs";
  }
  return "step";
}

std::string point_label(double h, double pe) {
  std::ostringstream os;
  os.precision(6);
  os << "sweep point (h = " << h << " s, P_E = " << pe << " pu): ";
  return os.str();
}

[[noreturn]] void rethrow_with_context(std::exception_ptr e, const std::string& ctx) {
  try {
    std::rethrow_exception(e);
  } catch (const NumericalError& ex) {
    throw NumericalError(ctx + ex.what());
  } catch (const DataError& ex) {
    throw DataError(ctx + ex.what());
  } catch (const InvalidArgument& ex) {
    throw InvalidArgument(ctx + ex.what());
  } catch (const std::exception& ex) {
    throw NumericalError(ctx + ex.what());
  }
}

struct SweepPlan {
  std::vector<grid::PowerSystem> systems;  // one per h
  std::vector<int> buses;
  dynamics::ProbingSignal probe;
};

SweepPlan plan_sweep(const grid::PowerSystem& sys, const SweepConfig& cfg) {
  require(!cfg.h_values.empty() && !cfg.pe_values.empty(), "sweep: h and P_E lists must be nonempty");
  SweepPlan plan;
  plan.buses = resolve_buses(sys, cfg);
  plan.probe.bus = resolve_probe_bus(sys, cfg);
  plan.probe.shape = cfg.probe_shape;
  plan.probe.start = cfg.probe_start;
  plan.probe.width = cfg.probe_width;
  plan.probe.period = cfg.probe_period;
  for (double pe : cfg.pe_values) {
    plan.probe.amplitude = pe;
    plan.probe.validate();
  }
  cfg.sim.validate();
  for (double h : cfg.h_values) plan.systems.push_back(grid::scale_inertia(sys, h));
  return plan;
}

PmuRecord simulate_point(const SweepPlan& plan, const SweepConfig& cfg, std::size_t idx) {
  const std::size_t npe = cfg.pe_values.size();
  dynamics::ProbingSignal probe = plan.probe;
  probe.amplitude = cfg.pe_values[idx % npe];
  dynamics::SimConfig sim = cfg.sim;
  sim.seed = derive_seed(cfg.seed, SeedStream::kAmbient, idx);
  const auto trace = dynamics::simulate(plan.systems[idx / npe], probe, sim);
  return dynamics::sample_pmu(trace, plan.buses, cfg.pmu_rate);
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::vector<double> default_h_sweep() {
  std::vector<double> h(11);
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = 3.0 + 0.5 * static_cast<double>(i);
  return h;
}

std::vector<double> default_pe_sweep() {
  constexpr std::size_t n = 100;
  constexpr double lo = 0.001, hi = 0.01;
  std::vector<double> pe(n);
  for (std::size_t i = 0; i < n; ++i) pe[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  pe.back() = hi;
  return pe;
}

SweepConfig default_sweep_config() {
  SweepConfig cfg;
  cfg.h_values = default_h_sweep();
  cfg.pe_values = default_pe_sweep();
  return cfg;
}

std::vector<PmuRecord> simulate_sweep_serial(const grid::PowerSystem& sys, const SweepConfig& cfg) {
  const SweepPlan plan = plan_sweep(sys, cfg);
  const std::size_t n = cfg.h_values.size() * cfg.pe_values.size();
  std::vector<PmuRecord> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    try {
      out[i] = simulate_point(plan, cfg, i);
    } catch (...) {
      const std::size_t npe = cfg.pe_values.size();
      rethrow_with_context(std::current_exception(), point_label(cfg.h_values[i / npe], cfg.pe_values[i % npe]));
    }
  }
  return out;
}

std::vector<PmuRecord> simulate_sweep(const grid::PowerSystem& sys, const SweepConfig& cfg) {
  const SweepPlan plan = plan_sweep(sys, cfg);
  const std::size_t n = cfg.h_values.size() * cfg.pe_values.size();
  std::vector<PmuRecord> out(n);
  std::vector<std::exception_ptr> errors(n);
  const auto ni = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < ni; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = simulate_point(plan, cfg, static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i]) {
      const std::size_t npe = cfg.pe_values.size();
      rethrow_with_context(errors[i], point_label(cfg.h_values[i / npe], cfg.pe_values[i % npe]));
    }
  }
  return out;
}

DatasetInfo describe_sweep(const grid::PowerSystem& sys, const SweepConfig& sweep) {
  DatasetInfo info;
  info.case_name = sys.name;
  info.bus_index = resolve_buses(sys, sweep);
  for (int b : info.bus_index) info.bus_id.push_back(sys.buses[b].id);
  for (const auto& br : sys.branches) {
    auto a = std::find(info.bus_index.begin(), info.bus_index.end(), br.from_bus);
    auto b = std::find(info.bus_index.begin(), info.bus_index.end(), br.to_bus);
    if (a == info.bus_index.end() || b == info.bus_index.end()) continue;
    int i = static_cast<int>(a - info.bus_index.begin());
    int j = static_cast<int>(b - info.bus_index.begin());
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    info.edges.emplace_back(i, j);
  }
  std::sort(info.edges.begin(), info.edges.end());
  info.edges.erase(std::unique(info.edges.begin(), info.edges.end()), info.edges.end());
  info.sweep_h = sweep.h_values;
  info.sweep_pe = sweep.pe_values;
  info.probe_bus_id = sys.buses[resolve_probe_bus(sys, sweep)].id;
  info.probe_shape = shape_name(sweep.probe_shape);
  info.sim = sweep.sim;
  info.sim.seed = sweep.seed;
  info.pmu_rate = sweep.pmu_rate;
  return info;
}

void split_indices(std::size_t n, double train_fraction, std::uint64_t seed,
                   std::vector<std::size_t>& train, std::vector<std::size_t>& val) {
  require(train_fraction > 0.0 && train_fraction <= 1.0, "split: train fraction must be in (0, 1]");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(derive_seed(seed, SeedStream::kShuffle));
  std::shuffle(perm.begin(), perm.end(), rng);
  auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, n > 0 ? 1 : 0, n);
  train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  val.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
}

Dataset build_dataset(std::span<const PmuRecord> records, const PipelineConfig& cfg, DatasetInfo info) {
  require(!records.empty(), "build_dataset: no records");
  require(!cfg.features.empty(), "build_dataset: feature list is empty");
  if (info.bus_index.empty()) info.bus_index = records.front().buses;
  for (const auto& r : records)
    require(r.buses == info.bus_index, "build_dataset: records disagree on the PMU bus set");

  info.features = cfg.features;
  info.rate = cfg.target_rate;
  info.t0 = cfg.t0;
  info.t1 = cfg.t1;
  info.snr_db = cfg.snr_db;
  info.seed = cfg.seed;
  info.train_fraction = cfg.train_fraction;
  info.normalized = false;

  Dataset ds;
  ds.info = std::move(info);
  ds.samples.resize(records.size());
  std::vector<std::exception_ptr> errors(records.size());
  const auto n = static_cast<std::ptrdiff_t>(records.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      PmuRecord rec = cfg.scrub ? scrub_bad_data(records[idx]) : records[idx];
      rec = downsample(rec, cfg.target_rate);
      const std::uint64_t noise_seed = derive_seed(cfg.seed, SeedStream::kNoise, idx);
      rec = add_noise(rec, cfg.snr_db, noise_seed);
      const Window w = extract_window(rec, cfg.features, cfg.t0, cfg.t1);
      Sample& s = ds.samples[idx];
      s.n_buses = w.n_buses;
      s.n_features = w.n_features;
      s.n_steps = w.n_steps;
      s.values.assign(w.values.begin(), w.values.end());
      s.label = rec.label_h_sys;
      s.meta = {rec.probe_amplitude, cfg.snr_db == kNoNoise ? 0 : noise_seed, rec.repairs, rec.zero_power_noise};
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  }
  for (std::size_t i = 0; i < records.size(); ++i)
    if (errors[i])
      rethrow_with_context(errors[i], point_label(records[i].label_h_sys, records[i].probe_amplitude));

  split_indices(ds.samples.size(), cfg.train_fraction, cfg.seed, ds.train, ds.val);
  return normalize(ds);
}

Dataset assemble_dataset(const grid::PowerSystem& sys, const SweepConfig& sweep, const PipelineConfig& cfg) {
  DatasetInfo info = describe_sweep(sys, sweep);
  const auto records = simulate_sweep(sys, sweep);
  return build_dataset(records, cfg, std::move(info));
}

Dataset normalize(const Dataset& ds) {
  require(!ds.train.empty(), "normalize: training split is empty");
  require(!ds.samples.empty(), "normalize: dataset is empty");
  const Sample& first = ds.samples.front();
  const std::size_t channels = first.n_channels(), steps = first.n_steps;
  for (const auto& s : ds.samples)
    require(s.n_buses == first.n_buses && s.n_features == first.n_features && s.n_steps == steps,
            "normalize: inconsistent sample shapes");

  std::vector<double> lo(channels, std::numeric_limits<double>::infinity());
  std::vector<double> hi(channels, -std::numeric_limits<double>::infinity());
  for (std::size_t idx : ds.train) {
    require(idx < ds.samples.size(), "normalize: train index out of range");
    const auto& v = ds.samples[idx].values;
    for (std::size_t c = 0; c < channels; ++c) {
      const auto [mn, mx] = std::minmax_element(v.begin() + static_cast<std::ptrdiff_t>(c * steps),
                                                v.begin() + static_cast<std::ptrdiff_t>((c + 1) * steps));
      lo[c] = std::min(lo[c], static_cast<double>(*mn));
      hi[c] = std::max(hi[c], static_cast<double>(*mx));
    }
  }

  Dataset out = ds;
  Normalization fitted{lo, hi};
  for (auto& s : out.samples) apply_normalization(s, fitted);

  if (ds.norm.empty()) {
    out.norm = fitted;
  } else {
    require(ds.norm.lo.size() == channels, "normalize: stored constants do not match the channels");
    for (std::size_t c = 0; c < channels; ++c) {
      const double span = ds.norm.hi[c] - ds.norm.lo[c];
      out.norm.lo[c] = ds.norm.lo[c] + lo[c] * span;
      out.norm.hi[c] = ds.norm.lo[c] + hi[c] * span;
    }
  }
  out.info.normalized = true;
  return out;
}

void apply_normalization(Sample& s, const Normalization& norm) {
  const std::size_t channels = s.n_channels();
  require(norm.lo.size() == channels && norm.hi.size() == channels,
          "apply_normalization: constants do not match the sample's channels");
  for (std::size_t c = 0; c < channels; ++c) {
    const double lo = norm.lo[c], span = norm.hi[c] - norm.lo[c];
    float* v = s.values.data() + c * s.n_steps;
    for (std::size_t t = 0; t < s.n_steps; ++t)
      v[t] = span > 0.0 ? static_cast<float>((static_cast<double>(v[t]) - lo) / span) : 0.5F;
  }
}

Dataset restrict_buses(const Dataset& ds, std::span<const int> bus_index) {
  require(!bus_index.empty(), "restrict_buses: bus list is empty");
  std::vector<std::size_t> local;
  for (int b : bus_index) {
    auto it = std::find(ds.info.bus_index.begin(), ds.info.bus_index.end(), b);
    if (it == ds.info.bus_index.end())
      throw DataError("restrict_buses: bus index " + std::to_string(b) + " is not present in the dataset");
    local.push_back(static_cast<std::size_t>(it - ds.info.bus_index.begin()));
  }
  Dataset out;
  out.info = ds.info;
  out.train = ds.train;
  out.val = ds.val;
  out.info.bus_index.clear();
  out.info.bus_id.clear();
  out.info.edges.clear();
  for (std::size_t l : local) {
    out.info.bus_index.push_back(ds.info.bus_index[l]);
    if (l < ds.info.bus_id.size()) out.info.bus_id.push_back(ds.info.bus_id[l]);
  }
  for (auto [a, b] : ds.info.edges) {
    auto ia = std::find(local.begin(), local.end(), static_cast<std::size_t>(a));
    auto ib = std::find(local.begin(), local.end(), static_cast<std::size_t>(b));
    if (ia == local.end() || ib == local.end()) continue;
    int i = static_cast<int>(ia - local.begin()), j = static_cast<int>(ib - local.begin());
    out.info.edges.emplace_back(std::min(i, j), std::max(i, j));
  }
  std::sort(out.info.edges.begin(), out.info.edges.end());

  const std::size_t nf = ds.info.features.size();
  for (const auto& s : ds.samples) {
    Sample r = s;
    r.n_buses = local.size();
    r.values.clear();
    for (std::size_t l : local)
      r.values.insert(r.values.end(), s.values.begin() + static_cast<std::ptrdiff_t>(l * nf * s.n_steps),
                      s.values.begin() + static_cast<std::ptrdiff_t>((l + 1) * nf * s.n_steps));
    out.samples.push_back(std::move(r));
  }
  if (!ds.norm.empty()) {
    for (std::size_t l : local)
      for (std::size_t f = 0; f < nf; ++f) {
        out.norm.lo.push_back(ds.norm.lo[l * nf + f]);
        out.norm.hi.push_back(ds.norm.hi[l * nf + f]);
      }
  }
  return out;
}

Dataset restrict_features(const Dataset& ds, std::span<const FeatureId> features) {
  require(!features.empty(), "restrict_features: feature list is empty");
  std::vector<std::size_t> local;
  for (auto f : features) {
    auto it = std::find(ds.info.features.begin(), ds.info.features.end(), f);
    if (it == ds.info.features.end())
      throw DataError("restrict_features: feature " + std::string(feature_name(f)) + " is not present");
    local.push_back(static_cast<std::size_t>(it - ds.info.features.begin()));
  }
  Dataset out;
  out.info = ds.info;
  out.info.features.assign(features.begin(), features.end());
  out.train = ds.train;
  out.val = ds.val;
  const std::size_t nf = ds.info.features.size();
  for (const auto& s : ds.samples) {
    Sample r = s;
    r.n_features = local.size();
    r.values.clear();
    for (std::size_t b = 0; b < s.n_buses; ++b)
      for (std::size_t l : local) {
        const auto off = static_cast<std::ptrdiff_t>((b * nf + l) * s.n_steps);
        r.values.insert(r.values.end(), s.values.begin() + off,
                        s.values.begin() + off + static_cast<std::ptrdiff_t>(s.n_steps));
      }
    out.samples.push_back(std::move(r));
  }
  if (!ds.norm.empty()) {
    const std::size_t nb = ds.samples.empty() ? ds.info.bus_index.size() : ds.samples.front().n_buses;
    for (std::size_t b = 0; b < nb; ++b)
      for (std::size_t l : local) {
        out.norm.lo.push_back(ds.norm.lo[b * nf + l]);
        out.norm.hi.push_back(ds.norm.hi[b * nf + l]);
      }
  }
  return out;
}

std::uint64_t normalization_hash(const Dataset& ds) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const std::uint64_t shape[3] = {
      ds.samples.empty() ? 0 : ds.samples.front().n_buses,
      ds.samples.empty() ? 0 : ds.samples.front().n_features,
      ds.samples.empty() ? 0 : ds.samples.front().n_steps,
  };
  h = fnv1a(h, shape, sizeof(shape));
  for (auto f : ds.info.features) {
    const int v = static_cast<int>(f);
    h = fnv1a(h, &v, sizeof(v));
  }
  for (int b : ds.info.bus_id) h = fnv1a(h, &b, sizeof(b));
  h = fnv1a(h, ds.norm.lo.data(), ds.norm.lo.size() * sizeof(double));
  h = fnv1a(h, ds.norm.hi.data(), ds.norm.hi.size() * sizeof(double));
  return h;
}

}  // namespace inertia::signal
