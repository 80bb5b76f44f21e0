#include "inertia/signal/bundle_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "inertia/common/crc32.hpp"
#include "inertia/common/error.hpp"

namespace inertia::signal {
namespace {

constexpr const char* kManifestHeader = "inertia-dataset-manifest";

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

double parse_double(const std::string& s) {
  if (s == "inf" || s == "none") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw DataError("manifest: bad number '" + s + "'");
  return v;
}

template <typename T>
T parse_int(const std::string& s) {
  T v{};
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw DataError("manifest: bad integer '" + s + "'");
  return v;
}

template <typename T, typename F>
void write_list(std::ostream& os, const char* key, const std::vector<T>& v, F&& f) {
  os << key;
  for (const auto& x : v) os << ' ' << f(x);
  os << '\n';
}

std::vector<std::string> tokens(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> t;
  for (std::string w; is >> w;) t.push_back(w);
  return t;
}

// Little-endian primitives.
void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFFU));
}
void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFFU));
}
std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}
std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::uint32_t crc_of(const std::string& buf, std::size_t from) {
  return crc32({reinterpret_cast<const std::uint8_t*>(buf.data()) + from, buf.size() - from});
}

}  // namespace

void write_manifest(std::ostream& os, const Dataset& ds) {
  const auto& in = ds.info;
  os << kManifestHeader << '\n';
  os << "schema_version " << in.schema_version << '\n';
  os << "case_name " << (in.case_name.empty() ? "-" : in.case_name) << '\n';
  os << "n_samples " << ds.samples.size() << '\n';
  write_list(os, "bus_index", in.bus_index, [](int v) { return std::to_string(v); });
  write_list(os, "bus_id", in.bus_id, [](int v) { return std::to_string(v); });
  write_list(os, "edges", in.edges,
             [](const std::pair<int, int>& e) { return std::to_string(e.first) + "-" + std::to_string(e.second); });
  os << "features " << feature_list_string(in.features) << '\n';
  os << "rate " << fmt(in.rate) << '\n';
  os << "window " << fmt(in.t0) << ' ' << fmt(in.t1) << '\n';
  os << "snr_db " << (in.snr_db == kNoNoise ? std::string("none") : fmt(in.snr_db)) << '\n';
  os << "seed " << in.seed << '\n';
  write_list(os, "sweep_h", in.sweep_h, fmt);
  write_list(os, "sweep_pe", in.sweep_pe, fmt);
  if (in.sweep_pe.size() > 1)
    os << "sweep_pe_step " << fmt((in.sweep_pe.back() - in.sweep_pe.front()) / static_cast<double>(in.sweep_pe.size() - 1))
       << '\n';
  os << "probe_bus_id " << in.probe_bus_id << '\n';
  os << "probe_shape " << in.probe_shape << '\n';
  os << "sim_dt " << fmt(in.sim.dt) << '\n';
  os << "sim_duration " << fmt(in.sim.duration) << '\n';
  os << "sim_droop_gain " << fmt(in.sim.droop_gain) << '\n';
  os << "sim_governor_tc " << fmt(in.sim.governor_tc) << '\n';
  os << "sim_seed " << in.sim.seed << '\n';
  os << "sim_rocof_window " << in.sim.rocof_window << '\n';
  os << "sim_ambient_sigma " << fmt(in.sim.ambient_sigma) << '\n';
  os << "sim_ambient_tc " << fmt(in.sim.ambient_tc) << '\n';
  os << "pmu_rate " << fmt(in.pmu_rate) << '\n';
  os << "train_fraction " << fmt(in.train_fraction) << '\n';
  os << "normalized " << (in.normalized ? 1 : 0) << '\n';
  write_list(os, "norm_lo", ds.norm.lo, fmt);
  write_list(os, "norm_hi", ds.norm.hi, fmt);
  write_list(os, "train", ds.train, [](std::size_t v) { return std::to_string(v); });
  write_list(os, "val", ds.val, [](std::size_t v) { return std::to_string(v); });
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const auto& m = ds.samples[i].meta;
    os << "sample " << i << ' ' << fmt(m.probe_amplitude) << ' ' << m.noise_seed << ' ' << m.repairs << ' '
       << (m.zero_power_noise ? 1 : 0) << '\n';
  }
}

void read_manifest(std::istream& is, Dataset& ds) {
  std::string line;
  if (!std::getline(is, line) || line != kManifestHeader) throw DataError("manifest: missing header");
  DatasetInfo in;
  std::size_t n_samples = 0;
  bool have_n = false;
  std::vector<SampleMeta> meta;
  std::vector<char> seen_meta;
  Normalization norm;
  std::vector<std::size_t> train, val;

  auto doubles = [](const std::vector<std::string>& t) {
    std::vector<double> v;
    for (std::size_t i = 1; i < t.size(); ++i) v.push_back(parse_double(t[i]));
    return v;
  };
  auto ints = [](const std::vector<std::string>& t) {
    std::vector<int> v;
    for (std::size_t i = 1; i < t.size(); ++i) v.push_back(parse_int<int>(t[i]));
    return v;
  };
  auto sizes = [](const std::vector<std::string>& t) {
    std::vector<std::size_t> v;
    for (std::size_t i = 1; i < t.size(); ++i) v.push_back(parse_int<std::size_t>(t[i]));
    return v;
  };
  auto one = [](const std::vector<std::string>& t) -> const std::string& {
    if (t.size() != 2) throw DataError("manifest: key '" + t[0] + "' expects one value");
    return t[1];
  };

  while (std::getline(is, line)) {
    const auto t = tokens(line);
    if (t.empty()) continue;
    const std::string& key = t[0];
    if (key == "schema_version") {
      in.schema_version = parse_int<int>(one(t));
      if (in.schema_version != 1)
        throw DataError("manifest: unsupported schema version " + std::to_string(in.schema_version));
    } else if (key == "case_name") {
      if (t.size() < 2) throw DataError("manifest: case_name expects a value");
      const std::string rest = line.substr(line.find(' ') + 1);
      in.case_name = rest == "-" ? "" : rest;
    } else if (key == "n_samples") {
      n_samples = parse_int<std::size_t>(one(t));
      have_n = true;
      meta.assign(n_samples, {});
      seen_meta.assign(n_samples, 0);
    } else if (key == "bus_index") {
      in.bus_index = ints(t);
    } else if (key == "bus_id") {
      in.bus_id = ints(t);
    } else if (key == "edges") {
      for (std::size_t i = 1; i < t.size(); ++i) {
        const auto dash = t[i].find('-');
        if (dash == std::string::npos) throw DataError("manifest: bad edge '" + t[i] + "'");
        in.edges.emplace_back(parse_int<int>(t[i].substr(0, dash)), parse_int<int>(t[i].substr(dash + 1)));
      }
    } else if (key == "features") {
      try {
        in.features = parse_feature_list(one(t));
      } catch (const InvalidArgument& e) {
        throw DataError(std::string("manifest: ") + e.what());
      }
    } else if (key == "rate") {
      in.rate = parse_double(one(t));
    } else if (key == "window") {
      if (t.size() != 3) throw DataError("manifest: window expects two values");
      in.t0 = parse_double(t[1]);
      in.t1 = parse_double(t[2]);
    } else if (key == "snr_db") {
      in.snr_db = parse_double(one(t));
    } else if (key == "seed") {
      in.seed = parse_int<std::uint64_t>(one(t));
    } else if (key == "sweep_h") {
      in.sweep_h = doubles(t);
    } else if (key == "sweep_pe") {
      in.sweep_pe = doubles(t);
    } else if (key == "sweep_pe_step") {
      // derived from sweep_pe
    } else if (key == "probe_bus_id") {
      in.probe_bus_id = parse_int<int>(one(t));
    } else if (key == "probe_shape") {
      in.probe_shape = one(t);
    } else if (key == "sim_dt") {
      in.sim.dt = parse_double(one(t));
    } else if (key == "sim_duration") {
      in.sim.duration = parse_double(one(t));
    } else if (key == "sim_droop_gain") {
      in.sim.droop_gain = parse_double(one(t));
    } else if (key == "sim_governor_tc") {
      in.sim.governor_tc = parse_double(one(t));
    } else if (key == "sim_seed") {
      in.sim.seed = parse_int<std::uint64_t>(one(t));
    } else if (key == "sim_rocof_window") {
      in.sim.rocof_window = parse_int<int>(one(t));
    } else if (key == "sim_ambient_sigma") {
      in.sim.ambient_sigma = parse_double(one(t));
    } else if (key == "sim_ambient_tc") {
      in.sim.ambient_tc = parse_double(one(t));
    } else if (key == "pmu_rate") {
      in.pmu_rate = parse_double(one(t));
    } else if (key == "train_fraction") {
      in.train_fraction = parse_double(one(t));
    } else if (key == "normalized") {
      in.normalized = parse_int<int>(one(t)) != 0;
    } else if (key == "norm_lo") {
      norm.lo = doubles(t);
    } else if (key == "norm_hi") {
      norm.hi = doubles(t);
    } else if (key == "train") {
      train = sizes(t);
    } else if (key == "val") {
      val = sizes(t);
    } else if (key == "sample") {
      if (!have_n) throw DataError("manifest: sample entry before n_samples");
      if (t.size() != 6) throw DataError("manifest: malformed sample entry");
      const auto i = parse_int<std::size_t>(t[1]);
      if (i >= n_samples) throw DataError("manifest: sample index out of range");
      meta[i] = {parse_double(t[2]), parse_int<std::uint64_t>(t[3]), parse_int<int>(t[4]), t[5] == "1"};
      seen_meta[i] = 1;
    } else {
      throw DataError("manifest: unknown key '" + key + "'");
    }
  }
  if (!have_n) throw DataError("manifest: n_samples missing");
  if (std::count(seen_meta.begin(), seen_meta.end(), 0) != 0) throw DataError("manifest: sample metadata incomplete");
  if (norm.lo.size() != norm.hi.size()) throw DataError("manifest: normalization vectors differ in length");
  if (in.bus_id.size() != in.bus_index.size()) throw DataError("manifest: bus_id and bus_index differ in length");
  std::vector<char> used(n_samples, 0);
  for (auto* split : {&train, &val})
    for (std::size_t i : *split) {
      if (i >= n_samples || used[i]) throw DataError("manifest: split indices overlap or are out of range");
      used[i] = 1;
    }
  if (train.size() + val.size() != n_samples) throw DataError("manifest: split does not cover every sample");

  ds.info = std::move(in);
  ds.norm = std::move(norm);
  ds.train = std::move(train);
  ds.val = std::move(val);
  ds.samples.assign(n_samples, {});
  for (std::size_t i = 0; i < n_samples; ++i) ds.samples[i].meta = meta[i];
}

void write_samples(std::ostream& os, const Dataset& ds) {
  std::string head(kSamplesMagic, sizeof(kSamplesMagic));
  put_u32(head, kSamplesVersion);
  put_u64(head, ds.samples.size());
  os.write(head.data(), static_cast<std::streamsize>(head.size()));
  std::string rec;
  for (const auto& s : ds.samples) {
    require(s.values.size() == s.n_buses * s.n_features * s.n_steps, "write_samples: sample shape mismatch");
    rec.clear();
    put_u64(rec, std::bit_cast<std::uint64_t>(s.label));
    put_u32(rec, static_cast<std::uint32_t>(s.n_buses));
    put_u32(rec, static_cast<std::uint32_t>(s.n_features));
    put_u32(rec, static_cast<std::uint32_t>(s.n_steps));
    for (float v : s.values) put_u32(rec, std::bit_cast<std::uint32_t>(v));
    put_u32(rec, crc_of(rec, 0));
    os.write(rec.data(), static_cast<std::streamsize>(rec.size()));
  }
  if (!os) throw DataError("write_samples: write failed");
}

void read_samples(std::istream& is, Dataset& ds) {
  const std::string buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
  if (buf.size() < sizeof(kSamplesMagic) || buf.compare(0, sizeof(kSamplesMagic), kSamplesMagic, sizeof(kSamplesMagic)) != 0)
    throw DataError("samples.bin: magic mismatch (not an INRTDS01 file)");
  std::size_t off = sizeof(kSamplesMagic);
  if (buf.size() < off + 12) throw DataError("samples.bin: truncated header");
  const std::uint32_t version = get_u32(p + off);
  if (version != kSamplesVersion) throw DataError("samples.bin: unsupported version " + std::to_string(version));
  const std::uint64_t count = get_u64(p + off + 4);
  off += 12;
  if (ds.samples.size() != count)
    throw DataError("samples.bin: holds " + std::to_string(count) + " records, manifest expects " +
                    std::to_string(ds.samples.size()));
  for (std::uint64_t r = 0; r < count; ++r) {
    const std::size_t start = off;
    if (buf.size() < off + 20) throw DataError("samples.bin: truncated at record " + std::to_string(r));
    Sample& s = ds.samples[r];
    s.label = std::bit_cast<double>(get_u64(p + off));
    s.n_buses = get_u32(p + off + 8);
    s.n_features = get_u32(p + off + 12);
    s.n_steps = get_u32(p + off + 16);
    off += 20;
    const std::uint64_t n = static_cast<std::uint64_t>(s.n_buses) * s.n_features * s.n_steps;
    if ((buf.size() - off) / 4 < n + 1) throw DataError("samples.bin: truncated at record " + std::to_string(r));
    s.values.resize(n);
    for (std::size_t i = 0; i < n; ++i, off += 4) s.values[i] = std::bit_cast<float>(get_u32(p + off));
    const std::uint32_t stored = get_u32(p + off);
    const std::uint32_t actual =
        crc32({reinterpret_cast<const std::uint8_t*>(buf.data()) + start, off - start});
    off += 4;
    if (stored != actual) throw DataError("samples.bin: checksum failure at record " + std::to_string(r));
  }
  if (off != buf.size()) throw DataError("samples.bin: trailing bytes after the last record");
}

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir / "manifest", std::ios::binary);
    if (!os) throw DataError("cannot write " + (dir / "manifest").string());
    write_manifest(os, ds);
    if (!os) throw DataError("write failed: " + (dir / "manifest").string());
  }
  std::ofstream os(dir / "samples.bin", std::ios::binary);
  if (!os) throw DataError("cannot write " + (dir / "samples.bin").string());
  write_samples(os, ds);
}

Dataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream man(dir / "manifest", std::ios::binary);
  if (!man) throw DataError("cannot read " + (dir / "manifest").string());
  Dataset ds;
  read_manifest(man, ds);
  std::ifstream bin(dir / "samples.bin", std::ios::binary);
  if (!bin) throw DataError("cannot read " + (dir / "samples.bin").string());
  read_samples(bin, ds);
  return ds;
}

void export_sample_csv(std::ostream& os, const Dataset& ds, std::size_t index) {
  require(index < ds.samples.size(), "export_sample_csv: sample index out of range");
  const Sample& s = ds.samples[index];
  os << "time,bus,feature,value\n";
  for (std::size_t b = 0; b < s.n_buses; ++b) {
    const int bus = b < ds.info.bus_id.size() ? ds.info.bus_id[b] : static_cast<int>(b);
    for (std::size_t f = 0; f < s.n_features; ++f) {
      const auto name = f < ds.info.features.size() ? feature_name(ds.info.features[f]) : "?";
      for (std::size_t k = 0; k < s.n_steps; ++k)
        os << fmt(ds.info.t0 + static_cast<double>(k) / ds.info.rate) << ',' << bus << ',' << name << ','
           << fmt(static_cast<double>(s.at(b, f, k))) << '\n';
    }
  }
}

}  // namespace inertia::signal
