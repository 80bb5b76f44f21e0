#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "inertia/common/feature.hpp"
#include "inertia/dynamics/sim_config.hpp"
#include "inertia/estimators/model.hpp"
#include "inertia/estimators/train.hpp"
#include "inertia/grid/power_system.hpp"
#include "inertia/opp/placement.hpp"
#include "inertia/signal/dataset.hpp"

namespace inertia::cli {

/// Every tunable of a run. Defaults reproduce the reference protocol; a JSON
/// file may override any subset, and command-line flags override the file.
struct RunConfig {
  std::string case_name = "ieee24";  // built-in name or path to a case file
  std::uint64_t seed = 0;
  std::string out = "out";

  struct Sweep {
    double h_start = 3.0, h_step = 0.5;
    std::size_t h_count = 11;
    double pe_min = 0.001, pe_max = 0.01;
    std::size_t pe_count = 100;
    int probe_bus = 0;  // external id; 0 picks the bus with the largest load
    std::string probe_shape = "step";
    double probe_start = 0.0, probe_width = 0.0, probe_period = 0.05;
    std::string buses = "generators";  // "generators", "all" or comma-separated external ids
    double pmu_rate = 200.0;
  } sweep;

  dynamics::SimConfig sim;

  struct Data {
    std::vector<FeatureId> features{FeatureId::kDeltaOmega, FeatureId::kRocof};
    double t0 = 0.0, t1 = 1.0;
    double snr_db = signal::kNoNoise;
    double target_rate = 200.0;
    double train_fraction = 0.8;
    bool scrub = true;
  } data;

  estimators::Family family = estimators::Family::kLrcn;
  nn::CellType cell = nn::CellType::kLstm;
  estimators::TrainConfig train;
  double mu = 0.5;

  struct Opp {
    std::vector<std::size_t> budgets{2, 3, 4, 5};
    bool zgib = true;
    opp::ZgibMode zgib_mode = opp::ZgibMode::kNeighborPairs;
    opp::Objective objective = opp::Objective::kMaxObservability;
  } opp;

  struct FeatSelect {
    std::vector<FeatureId> candidates{FeatureId::kDeltaOmega, FeatureId::kRocof, FeatureId::kVoltMag};
    std::size_t repeats = 1;
  } featselect;
};

/// Applies the keys present in `j` on top of `cfg`. Unknown keys and type
/// mismatches throw InvalidArgument naming the offending path.
void apply_json(RunConfig& cfg, const nlohmann::json& j);
RunConfig load_config_file(const std::string& path);

nlohmann::json to_json(const RunConfig& cfg);

/// Cross-field checks; throws InvalidArgument.
void validate(const RunConfig& cfg);

grid::PowerSystem load_case(const RunConfig& cfg);
signal::SweepConfig sweep_config(const RunConfig& cfg, const grid::PowerSystem& sys);
signal::PipelineConfig pipeline_config(const RunConfig& cfg);
estimators::TrainConfig train_config(const RunConfig& cfg);
opp::OppOptions opp_options(const RunConfig& cfg);

/// "t0:t1" in seconds.
std::pair<double, double> parse_window(const std::string& s);
/// "none", "inf" or a number of decibels.
double parse_snr(const std::string& s);

}  // namespace inertia::cli
