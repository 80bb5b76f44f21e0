#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "inertia/common/feature.hpp"
#include "inertia/estimators/metrics.hpp"
#include "inertia/estimators/train.hpp"

namespace inertia::featselect {

/// Builds a dataset containing only the given features.
using DatasetFactory = std::function<signal::Dataset(const std::vector<FeatureId>&)>;

/// Scores a feature subset; throwing marks the subset as failed.
using Scorer = std::function<estimators::Metrics(const std::vector<FeatureId>&)>;

struct TraceEntry {
  std::size_t round = 0;  // 1-based
  std::vector<FeatureId> subset;
  FeatureId added = FeatureId::kDeltaOmega;
  std::optional<estimators::Metrics> metrics;  // empty when training failed
  std::string error;
  bool selected = false;
};

struct SelectionResult {
  std::vector<TraceEntry> trace;
  std::vector<FeatureId> chosen;  // in order of selection
  std::optional<estimators::Metrics> chosen_metrics;
  std::string family;
};

/// Greedy forward search. Each round scores every unused candidate added to
/// the current set and keeps the best (ACC, then lower MSE, then enum order)
/// if its ACC strictly exceeds the current one. Throws when every subset in a
/// round fails.
SelectionResult greedy_forward(std::vector<FeatureId> candidates, const Scorer& scorer, std::string family = {});

struct ScoreOptions {
  estimators::Family family = estimators::Family::kLrcn;
  estimators::TrainConfig train;
  double mu = 0.5;
  std::uint64_t seed = 0;
  std::size_t repeats = 1;  // average over this many seeds
};

/// Trains a fresh model on the subset's dataset and returns validation metrics.
estimators::Metrics score_subset(const std::vector<FeatureId>& subset, const DatasetFactory& factory,
                                 const ScoreOptions& opts);

/// Factory that restricts a full dataset to the requested features.
DatasetFactory restrict_factory(const signal::Dataset& full);

Scorer training_scorer(DatasetFactory factory, ScoreOptions opts);

/// round,candidate_added,subset,acc,mse,r2,selected
void write_trace_csv(std::ostream& os, const SelectionResult& r);

}  // namespace inertia::featselect
