#include "inertia/featselect/greedy.hpp"

#include <algorithm>
#include <charconv>
#include <ostream>

#include "inertia/common/error.hpp"
#include "inertia/common/rng.hpp"

namespace inertia::featselect {
namespace {

std::string fmt(double v) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

bool better(const estimators::Metrics& a, FeatureId fa, const estimators::Metrics& b, FeatureId fb) {
  if (a.acc != b.acc) return a.acc > b.acc;
  if (a.mse != b.mse) return a.mse < b.mse;
  return static_cast<int>(fa) < static_cast<int>(fb);
}

}  // namespace

SelectionResult greedy_forward(std::vector<FeatureId> candidates, const Scorer& scorer, std::string family) {
  require(!candidates.empty(), "greedy_forward: no candidate features");
  std::sort(candidates.begin(), candidates.end());
  require(std::adjacent_find(candidates.begin(), candidates.end()) == candidates.end(),
          "greedy_forward: duplicate candidates");

  SelectionResult res;
  res.family = std::move(family);
  std::vector<FeatureId> remaining = candidates;
  double current_acc = 0.0;

  for (std::size_t round = 1; !remaining.empty(); ++round) {
    const std::size_t first = res.trace.size();
    std::optional<std::size_t> best;
    for (FeatureId f : remaining) {
      TraceEntry e;
      e.round = round;
      e.added = f;
      e.subset = res.chosen;
      e.subset.push_back(f);
      std::sort(e.subset.begin(), e.subset.end());
      try {
        e.metrics = scorer(e.subset);
      } catch (const std::exception& ex) {
        e.error = ex.what();
      }
      res.trace.push_back(std::move(e));
      const auto& cur = res.trace.back();
      if (cur.metrics && (!best || better(*cur.metrics, cur.added, *res.trace[*best].metrics, res.trace[*best].added)))
        best = res.trace.size() - 1;
    }
    if (!best) {
      std::string msg = "greedy_forward: every subset failed in round " + std::to_string(round);
      for (std::size_t i = first; i < res.trace.size(); ++i)
        msg += "; " + feature_list_string(res.trace[i].subset) + ": " + res.trace[i].error;
      throw NumericalError(msg);
    }
    auto& pick = res.trace[*best];
    if (!(pick.metrics->acc > current_acc)) break;
    pick.selected = true;
    current_acc = pick.metrics->acc;
    res.chosen.push_back(pick.added);
    res.chosen_metrics = pick.metrics;
    remaining.erase(std::find(remaining.begin(), remaining.end(), pick.added));
  }
  return res;
}

estimators::Metrics score_subset(const std::vector<FeatureId>& subset, const DatasetFactory& factory,
                                 const ScoreOptions& opts) {
  require(!subset.empty(), "score_subset: empty subset");
  require(opts.repeats > 0, "score_subset: repeats must be positive");
  const signal::Dataset ds = factory(subset);
  estimators::Metrics sum;
  bool have_r2 = true;
  double r2 = 0.0;
  for (std::size_t k = 0; k < opts.repeats; ++k) {
    const std::uint64_t seed = k == 0 ? opts.seed : derive_seed(opts.seed, SeedStream::kFeatureSelect, k);
    auto cfg = opts.train;
    cfg.seed = seed;
    cfg.mu = opts.mu;
    auto tm = estimators::train(estimators::default_spec(opts.family, ds, seed), ds, cfg);
    sum.acc += tm.best.acc;
    sum.mse += tm.best.mse;
    sum.n = tm.best.n;
    if (tm.best.r2) r2 += *tm.best.r2;
    else have_r2 = false;
  }
  const auto n = static_cast<double>(opts.repeats);
  sum.acc /= n;
  sum.mse /= n;
  if (have_r2) sum.r2 = r2 / n;
  return sum;
}

DatasetFactory restrict_factory(const signal::Dataset& full) {
  return [&full](const std::vector<FeatureId>& fs) { return signal::restrict_features(full, fs); };
}

Scorer training_scorer(DatasetFactory factory, ScoreOptions opts) {
  return [factory = std::move(factory), opts](const std::vector<FeatureId>& subset) {
    return score_subset(subset, factory, opts);
  };
}

void write_trace_csv(std::ostream& os, const SelectionResult& r) {
  os << "round,candidate_added,subset,acc,mse,r2,selected\n";
  for (const auto& e : r.trace) {
    os << e.round << ',' << feature_name(e.added) << ",\"" << feature_list_string(e.subset) << "\",";
    if (e.metrics)
      os << fmt(e.metrics->acc) << ',' << fmt(e.metrics->mse) << ',' << (e.metrics->r2 ? fmt(*e.metrics->r2) : "");
    else
      os << ",,";
    os << ',' << (e.selected ? 1 : 0) << '\n';
  }
}

}  // namespace inertia::featselect
