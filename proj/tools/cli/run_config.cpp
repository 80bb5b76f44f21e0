#include "run_config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "inertia/common/error.hpp"
#include "inertia/dynamics/probing.hpp"
#include "inertia/grid/case_file.hpp"
#include "inertia/grid/ieee24.hpp"

namespace inertia::cli {
namespace {

using nlohmann::json;

/// Reads typed fields out of one JSON object and rejects leftovers.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw InvalidArgument("config: " + where() + " must be an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw InvalidArgument("config: unknown key '" + prefix() + k + "'");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw InvalidArgument("config: bad value for '" + prefix() + key + "': " + e.what());
    }
  }

  template <typename F>
  void with(const char* key, F&& f) {
    seen_.insert(key);
    if (j_.contains(key)) f(j_.at(key), prefix() + key);
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  [[nodiscard]] std::string prefix() const { return path_.empty() ? "" : path_ + "."; }

 private:
  [[nodiscard]] std::string where() const { return path_.empty() ? "top level" : "'" + path_ + "'"; }
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<FeatureId> features_from(const json& v, const std::string& key) {
  try {
    if (v.is_string()) return parse_feature_list(v.get<std::string>());
    std::string joined;
    for (const auto& f : v) joined += (joined.empty() ? "" : ",") + f.get<std::string>();
    return parse_feature_list(joined);
  } catch (const json::exception& e) {
    throw InvalidArgument("config: '" + key + "' must be a list of feature names: " + e.what());
  }
}

json features_json(const std::vector<FeatureId>& fs) {
  json a = json::array();
  for (auto f : fs) a.push_back(std::string(feature_name(f)));
  return a;
}

std::string zgib_mode_name(opp::ZgibMode m) {
  return m == opp::ZgibMode::kNeighborPairs ? "neighbor_pairs" : "non_zgib_pairs";
}

dynamics::ProbeShape probe_shape(const std::string& s) {
  if (s == "step") return dynamics::ProbeShape::kStep;
  if (s == "pulse") return dynamics::ProbeShape::kPulse;
  if (s == "prbs") return dynamics::ProbeShape::kPrbs;
  throw InvalidArgument("config: probe_shape must be step, pulse or prbs, got '" + s + "'");
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  if (n > 1) v.back() = hi;
  return v;
}

}  // namespace

void apply_json(RunConfig& c, const json& j) {
  Section top(j, "");
  top.get("case", c.case_name);
  top.get("seed", c.seed);
  top.get("out", c.out);
  if (const json* s = top.child("sweep")) {
    Section sw(*s, "sweep");
    sw.get("h_start", c.sweep.h_start);
    sw.get("h_step", c.sweep.h_step);
    sw.get("h_count", c.sweep.h_count);
    sw.get("pe_min", c.sweep.pe_min);
    sw.get("pe_max", c.sweep.pe_max);
    sw.get("pe_count", c.sweep.pe_count);
    sw.get("probe_bus", c.sweep.probe_bus);
    sw.get("probe_shape", c.sweep.probe_shape);
    sw.get("probe_start", c.sweep.probe_start);
    sw.get("probe_width", c.sweep.probe_width);
    sw.get("probe_period", c.sweep.probe_period);
    sw.get("buses", c.sweep.buses);
    sw.get("pmu_rate", c.sweep.pmu_rate);
  }
  if (const json* s = top.child("sim")) {
    Section sm(*s, "sim");
    sm.get("dt", c.sim.dt);
    sm.get("duration", c.sim.duration);
    sm.get("droop_gain", c.sim.droop_gain);
    sm.get("governor_tc", c.sim.governor_tc);
    sm.get("rocof_window", c.sim.rocof_window);
    sm.get("ambient_sigma", c.sim.ambient_sigma);
    sm.get("ambient_tc", c.sim.ambient_tc);
  }
  if (const json* s = top.child("dataset")) {
    Section d(*s, "dataset");
    d.with("features", [&](const json& v, const std::string& k) { c.data.features = features_from(v, k); });
    d.with("window", [&](const json& v, const std::string& k) {
      if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw InvalidArgument("config: '" + k + "' must be [t0, t1]");
      c.data.t0 = v[0].get<double>();
      c.data.t1 = v[1].get<double>();
    });
    d.with("snr_db", [&](const json& v, const std::string& k) {
      if (v.is_null()) c.data.snr_db = signal::kNoNoise;
      else if (v.is_number()) c.data.snr_db = v.get<double>();
      else throw InvalidArgument("config: '" + k + "' must be a number or null");
    });
    d.get("target_rate", c.data.target_rate);
    d.get("train_fraction", c.data.train_fraction);
    d.get("scrub", c.data.scrub);
  }
  if (const json* s = top.child("model")) {
    Section m(*s, "model");
    m.with("family", [&](const json& v, const std::string&) { c.family = estimators::parse_family(v.get<std::string>()); });
    m.with("cell", [&](const json& v, const std::string& k) {
      const auto name = v.get<std::string>();
      if (name == "lstm") c.cell = nn::CellType::kLstm;
      else if (name == "mgu") c.cell = nn::CellType::kMinimalGated;
      else throw InvalidArgument("config: '" + k + "' must be lstm or mgu");
    });
  }
  if (const json* s = top.child("train")) {
    Section t(*s, "train");
    t.get("epochs", c.train.epochs);
    t.get("batch_size", c.train.batch_size);
    t.get("lr", c.train.lr);
    t.get("momentum", c.train.momentum);
    t.get("lr_factor", c.train.lr_factor);
    t.get("lr_patience", c.train.lr_patience);
    t.get("lr_floor", c.train.lr_floor);
    t.get("early_stop", c.train.early_stop);
    t.get("divergence_factor", c.train.divergence_factor);
    t.get("divergence_epochs", c.train.divergence_epochs);
    t.get("output_bias_mean", c.train.output_bias_mean);
    t.get("restore_best", c.train.restore_best);
    t.with("backend", [&](const json& v, const std::string& k) {
      const auto name = v.get<std::string>();
      if (name == "fast") c.train.backend = nn::Backend::kFast;
      else if (name == "reference") c.train.backend = nn::Backend::kReference;
      else throw InvalidArgument("config: '" + k + "' must be fast or reference");
    });
  }
  if (const json* s = top.child("eval")) {
    Section e(*s, "eval");
    e.get("mu", c.mu);
  }
  if (const json* s = top.child("opp")) {
    Section o(*s, "opp");
    o.get("budgets", c.opp.budgets);
    o.get("zgib", c.opp.zgib);
    o.with("zgib_mode", [&](const json& v, const std::string& k) {
      const auto name = v.get<std::string>();
      if (name == "neighbor_pairs") c.opp.zgib_mode = opp::ZgibMode::kNeighborPairs;
      else if (name == "non_zgib_pairs") c.opp.zgib_mode = opp::ZgibMode::kNonZgibPairsOnly;
      else throw InvalidArgument("config: '" + k + "' must be neighbor_pairs or non_zgib_pairs");
    });
    o.with("objective", [&](const json& v, const std::string& k) {
      const auto name = v.get<std::string>();
      if (name == "max") c.opp.objective = opp::Objective::kMaxObservability;
      else if (name == "full") c.opp.objective = opp::Objective::kMinPmusFull;
      else throw InvalidArgument("config: '" + k + "' must be max or full");
    });
  }
  if (const json* s = top.child("featselect")) {
    Section f(*s, "featselect");
    f.with("candidates", [&](const json& v, const std::string& k) { c.featselect.candidates = features_from(v, k); });
    f.get("repeats", c.featselect.repeats);
  }
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("config: cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidArgument("config: " + path + " is not valid JSON: " + e.what());
  }
  RunConfig cfg;
  apply_json(cfg, j);
  return cfg;
}

json to_json(const RunConfig& c) {
  json j;
  j["case"] = c.case_name;
  j["seed"] = c.seed;
  j["out"] = c.out;
  j["sweep"] = {{"h_start", c.sweep.h_start},         {"h_step", c.sweep.h_step},
                {"h_count", c.sweep.h_count},         {"pe_min", c.sweep.pe_min},
                {"pe_max", c.sweep.pe_max},           {"pe_count", c.sweep.pe_count},
                {"probe_bus", c.sweep.probe_bus},     {"probe_shape", c.sweep.probe_shape},
                {"probe_start", c.sweep.probe_start}, {"probe_width", c.sweep.probe_width},
                {"probe_period", c.sweep.probe_period}, {"buses", c.sweep.buses},
                {"pmu_rate", c.sweep.pmu_rate}};
  j["sim"] = {{"dt", c.sim.dt},
              {"duration", c.sim.duration},
              {"droop_gain", c.sim.droop_gain},
              {"governor_tc", c.sim.governor_tc},
              {"rocof_window", c.sim.rocof_window},
              {"ambient_sigma", c.sim.ambient_sigma},
              {"ambient_tc", c.sim.ambient_tc}};
  j["dataset"] = {{"features", features_json(c.data.features)},
                  {"window", {c.data.t0, c.data.t1}},
                  {"snr_db", std::isinf(c.data.snr_db) ? json(nullptr) : json(c.data.snr_db)},
                  {"target_rate", c.data.target_rate},
                  {"train_fraction", c.data.train_fraction},
                  {"scrub", c.data.scrub}};
  j["model"] = {{"family", std::string(estimators::family_name(c.family))},
                {"cell", c.cell == nn::CellType::kLstm ? "lstm" : "mgu"}};
  j["train"] = {{"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"lr", c.train.lr},
                {"momentum", c.train.momentum},
                {"lr_factor", c.train.lr_factor},
                {"lr_patience", c.train.lr_patience},
                {"lr_floor", c.train.lr_floor},
                {"early_stop", c.train.early_stop},
                {"divergence_factor", c.train.divergence_factor},
                {"divergence_epochs", c.train.divergence_epochs},
                {"output_bias_mean", c.train.output_bias_mean},
                {"restore_best", c.train.restore_best},
                {"backend", c.train.backend == nn::Backend::kFast ? "fast" : "reference"}};
  j["eval"] = {{"mu", c.mu}};
  j["opp"] = {{"budgets", c.opp.budgets},
              {"zgib", c.opp.zgib},
              {"zgib_mode", zgib_mode_name(c.opp.zgib_mode)},
              {"objective", c.opp.objective == opp::Objective::kMaxObservability ? "max" : "full"}};
  j["featselect"] = {{"candidates", features_json(c.featselect.candidates)}, {"repeats", c.featselect.repeats}};
  return j;
}

void validate(const RunConfig& c) {
  require(!c.case_name.empty(), "config: case must not be empty");
  require(!c.out.empty(), "config: out must not be empty");
  require(c.sweep.h_count > 0 && c.sweep.pe_count > 0, "config: sweep counts must be positive");
  require(c.sweep.h_start > 0 && (c.sweep.h_count == 1 || c.sweep.h_step > 0), "config: inertia sweep must be positive and increasing");
  require(c.sweep.pe_min >= 0 && c.sweep.pe_max >= c.sweep.pe_min && c.sweep.pe_max <= dynamics::kMaxProbeAmplitude,
          "config: probe amplitudes must satisfy 0 <= pe_min <= pe_max <= 0.05");
  probe_shape(c.sweep.probe_shape);
  require(c.sweep.pmu_rate > 0, "config: pmu_rate must be positive");
  require(!c.data.features.empty(), "config: at least one feature is required");
  require(c.data.t1 > c.data.t0 && c.data.t0 >= 0, "config: window must satisfy 0 <= t0 < t1");
  require(c.data.t1 <= c.sim.duration, "config: window ends after the simulated duration");
  require(c.data.target_rate > 0 && c.data.target_rate <= c.sweep.pmu_rate, "config: target_rate must be in (0, pmu_rate]");
  require(c.data.train_fraction > 0 && c.data.train_fraction < 1, "config: train_fraction must be in (0, 1)");
  require(c.mu > 0, "config: eval.mu must be positive");
  require(c.train.batch_size > 0, "config: batch_size must be positive");
  require(c.train.lr >= 0, "config: lr must be nonnegative");
  require(c.train.momentum >= 0 && c.train.momentum < 1, "config: momentum must be in [0, 1)");
  for (auto b : c.opp.budgets) require(b >= 1, "config: OPP budgets must be at least 1");
  require(!c.featselect.candidates.empty() && c.featselect.repeats > 0, "config: featselect needs candidates and repeats > 0");
}

grid::PowerSystem load_case(const RunConfig& c) {
  if (c.case_name == "ieee24") return grid::build_ieee24();
  return grid::read_case_file(c.case_name);
}

signal::SweepConfig sweep_config(const RunConfig& c, const grid::PowerSystem& sys) {
  signal::SweepConfig s;
  s.h_values.resize(c.sweep.h_count);
  for (std::size_t i = 0; i < s.h_values.size(); ++i)
    s.h_values[i] = c.sweep.h_start + c.sweep.h_step * static_cast<double>(i);
  s.pe_values = linspace(c.sweep.pe_min, c.sweep.pe_max, c.sweep.pe_count);
  s.probe_bus = c.sweep.probe_bus == 0 ? -1 : grid::bus_index(sys, c.sweep.probe_bus);
  s.probe_shape = probe_shape(c.sweep.probe_shape);
  s.probe_start = c.sweep.probe_start;
  s.probe_width = c.sweep.probe_width;
  s.probe_period = c.sweep.probe_period;
  s.sim = c.sim;
  s.pmu_rate = c.sweep.pmu_rate;
  s.seed = c.seed;
  if (c.sweep.buses == "all") {
    for (std::size_t i = 0; i < sys.buses.size(); ++i) s.buses.push_back(static_cast<int>(i));
  } else if (c.sweep.buses != "generators") {
    std::istringstream is(c.sweep.buses);
    std::string tok;
    while (std::getline(is, tok, ',')) {
      try {
        s.buses.push_back(grid::bus_index(sys, std::stoi(tok)));
      } catch (const std::logic_error&) {
        throw InvalidArgument("config: sweep.buses entry '" + tok + "' is not a bus id of the case");
      }
    }
  }
  return s;
}

signal::PipelineConfig pipeline_config(const RunConfig& c) {
  signal::PipelineConfig p;
  p.features = c.data.features;
  p.t0 = c.data.t0;
  p.t1 = c.data.t1;
  p.target_rate = c.data.target_rate;
  p.snr_db = c.data.snr_db;
  p.seed = c.seed;
  p.train_fraction = c.data.train_fraction;
  p.scrub = c.data.scrub;
  return p;
}

estimators::TrainConfig train_config(const RunConfig& c) {
  auto t = c.train;
  t.seed = c.seed;
  t.mu = c.mu;
  return t;
}

opp::OppOptions opp_options(const RunConfig& c) {
  opp::OppOptions o;
  o.zgib = c.opp.zgib;
  o.zgib_mode = c.opp.zgib_mode;
  o.objective = c.opp.objective;
  return o;
}

std::pair<double, double> parse_window(const std::string& s) {
  const auto colon = s.find(':');
  require(colon != std::string::npos, "--window expects t0:t1, got '" + s + "'");
  try {
    std::size_t p0 = 0, p1 = 0;
    const double a = std::stod(s.substr(0, colon), &p0);
    const double b = std::stod(s.substr(colon + 1), &p1);
    require(p0 == colon && p1 == s.size() - colon - 1, "--window expects t0:t1, got '" + s + "'");
    return {a, b};
  } catch (const std::logic_error&) {
    throw InvalidArgument("--window expects t0:t1, got '" + s + "'");
  }
}

double parse_snr(const std::string& s) {
  if (s == "none" || s == "inf" || s == "clean") return signal::kNoNoise;
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    require(pos == s.size(), "--snr expects a number of dB or 'none'");
    return v;
  } catch (const std::logic_error&) {
    throw InvalidArgument("--snr expects a number of dB or 'none', got '" + s + "'");
  }
}

}  // namespace inertia::cli
