#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include <unistd.h>

#include "inertia/common/error.hpp"
#include "inertia/estimators/train.hpp"
#include "inertia/featselect/greedy.hpp"
#include "inertia/nn/checkpoint.hpp"
#include "inertia/opp/placement.hpp"
#include "inertia/signal/bundle_io.hpp"
#include "report.hpp"

namespace inertia::cli {
namespace {

using estimators::Metrics;

std::string r2_text(const Metrics& m) { return m.r2 ? num(*m.r2) : ""; }

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * v);
  return buf;
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::vector<std::size_t> split_indices(const signal::Dataset& ds, const std::string& split) {
  if (split == "val") return ds.val;
  if (split == "train") return ds.train;
  if (split == "all") {
    std::vector<std::size_t> all(ds.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }
  throw InvalidArgument("--split must be train, val or all");
}

/// Restricts a bundle to the features a model was trained on.
signal::Dataset select_features(const signal::Dataset& ds, const std::vector<FeatureId>& fs) {
  if (ds.info.features == fs) return ds;
  for (auto f : fs)
    if (std::find(ds.info.features.begin(), ds.info.features.end(), f) == ds.info.features.end())
      throw DataError("bundle has features " + feature_list_string(ds.info.features) + " but " +
                      feature_list_string(fs) + " are required");
  return signal::restrict_features(ds, fs);
}

struct Model {
  estimators::LoadedModel lm;
  std::vector<FeatureId> features;
};

Model load_model(const fs::path& path) {
  const auto ck = nn::load_checkpoint(path);
  Model m{estimators::from_checkpoint(ck), parse_feature_list(ck.get("features"))};
  return m;
}

std::string bundle_label(const signal::Dataset& ds) {
  return std::isinf(ds.info.snr_db) ? "clean" : "snr" + num(ds.info.snr_db) + "dB";
}

}  // namespace

OutputLock::OutputLock(const fs::path& dir) : path_(dir / ".inertia.lock") {
  fs::create_directories(dir);
  std::FILE* f = std::fopen(path_.c_str(), "wx");
  if (!f)
    throw InvalidArgument("output directory " + dir.string() + " is in use by another run (remove " +
                          path_.string() + " if it is stale)");
  std::fprintf(f, "%ld\n", static_cast<long>(::getpid()));
  std::fclose(f);
}

OutputLock::~OutputLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

void echo_config(const RunConfig& cfg, const std::string& command) {
  write_text(fs::path(cfg.out) / "config" / (command + ".json"), to_json(cfg).dump(2) + "\n");
}

fs::path default_bundle(const RunConfig& cfg) { return fs::path(cfg.out) / "bundle"; }

fs::path default_checkpoint(const RunConfig& cfg) {
  return fs::path(cfg.out) / std::string(estimators::family_name(cfg.family)) / "model.ckpt";
}

void cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  const auto t_start = std::chrono::steady_clock::now();
  const auto sys = load_case(cfg);
  const auto sweep = sweep_config(cfg, sys);
  const auto ds = signal::assemble_dataset(sys, sweep, pipeline_config(cfg));
  const auto dir = default_bundle(cfg);
  signal::save_dataset(ds, dir);

  int repairs = 0, zero_power = 0;
  for (const auto& s : ds.samples) {
    repairs += s.meta.repairs;
    zero_power += s.meta.zero_power_noise ? 1 : 0;
  }
  std::ostringstream ids;
  for (std::size_t i = 0; i < ds.info.bus_id.size(); ++i) ids << (i ? "," : "") << ds.info.bus_id[i];
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  log << "case            " << ds.info.case_name << "\n"
      << "samples         " << ds.size() << " (" << sweep.h_values.size() << " inertia x " << sweep.pe_values.size()
      << " probe amplitudes)\n"
      << "h range         " << sweep.h_values.front() << " .. " << sweep.h_values.back() << " s\n"
      << "P_E range       " << sweep.pe_values.front() << " .. " << sweep.pe_values.back() << " pu\n"
      << "probe bus       " << ds.info.probe_bus_id << " (" << ds.info.probe_shape << ")\n"
      << "measured buses  " << ids.str() << "\n"
      << "features        " << feature_list_string(ds.info.features) << "\n"
      << "window          " << ds.info.t0 << " .. " << ds.info.t1 << " s at " << ds.info.rate << " Hz\n"
      << "snr             " << (std::isinf(ds.info.snr_db) ? std::string("none") : num(ds.info.snr_db) + " dB") << "\n"
      << "split           " << ds.train.size() << " train / " << ds.val.size() << " val\n"
      << "repaired points " << repairs << ", zero-power channels " << zero_power << "\n"
      << "bundle          " << dir.string() << "\n"
      << "elapsed         " << short_num(secs) << " s\n";
}

void cmd_train(const RunConfig& cfg, const fs::path& bundle, std::ostream& log) {
  const auto ds = select_features(signal::load_dataset(bundle), cfg.data.features);
  auto spec = estimators::default_spec(cfg.family, ds, cfg.seed);
  spec.cell = cfg.cell;
  const auto tc = train_config(cfg);
  log << "training " << estimators::family_name(cfg.family) << " on " << ds.train.size() << " samples ("
      << feature_list_string(ds.info.features) << "), up to " << tc.epochs << " epochs\n";
  const auto t_start = std::chrono::steady_clock::now();
  auto tm = estimators::train(spec, ds, tc);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

  const auto dir = fs::path(cfg.out) / std::string(estimators::family_name(cfg.family));
  auto ck = estimators::to_checkpoint(tm);
  ck.set("features", feature_list_string(ds.info.features));
  ck.set("bundle_snr_db", std::isinf(ds.info.snr_db) ? "none" : num(ds.info.snr_db));
  nn::save_checkpoint(ck, dir / "model.ckpt");

  std::ostringstream hist;
  estimators::write_history_csv(hist, tm.history);
  write_text(dir / "history.csv", hist.str());

  Series tr{"train MSE", {}, {}, "#1f77b4"}, va{"validation MSE", {}, {}, "#d62728"};
  for (const auto& r : tm.history) {
    tr.x.push_back(static_cast<double>(r.epoch));
    tr.y.push_back(r.train_mse);
    va.x.push_back(static_cast<double>(r.epoch));
    va.y.push_back(r.val_mse);
  }
  const Series both[] = {tr, va};
  write_text(dir / "learning_curve.svg",
             line_chart_svg(both, {std::string(estimators::family_name(cfg.family)) + " learning curve", "epoch",
                                   "MSE (s^2, log scale)", true}));

  log << "epochs run      " << tm.history.size() << "\n"
      << "initial val MSE " << short_num(tm.initial_val_mse) << "\n"
      << "best epoch      " << tm.best_epoch << "\n"
      << "val ACC         " << pct(tm.best.acc) << " (mu = " << cfg.mu << " s)\n"
      << "val MSE         " << short_num(tm.best.mse) << "\n"
      << "val R2          " << (tm.best.r2 ? short_num(*tm.best.r2) : std::string("n/a")) << "\n"
      << "skipped batches " << tm.skipped_batches << "\n"
      << "elapsed         " << short_num(secs) << " s\n"
      << "checkpoint      " << (dir / "model.ckpt").string() << "\n";
}

void cmd_evaluate(const RunConfig& cfg, const fs::path& checkpoint, const fs::path& bundle, const std::string& split,
                  std::ostream& log) {
  auto m = load_model(checkpoint);
  const auto ds = select_features(signal::load_dataset(bundle), m.features);
  estimators::check_compatible(m.lm, ds);
  const auto idx = split_indices(ds, split);
  require(!idx.empty(), "evaluate: the " + split + " split is empty");
  const auto y_hat = estimators::predict(m.lm.model, ds, idx);
  const auto y = estimators::labels(ds, idx);
  const auto met = estimators::compute_metrics(y, y_hat, cfg.mu);

  const auto dir = fs::path(cfg.out) / std::string(estimators::family_name(m.lm.spec.family)) / ("eval_" + split);
  std::ostringstream metrics, preds, hist;
  metrics << "family,split,n,mu,acc,mse,r2,recorded_acc,recorded_mse\n"
          << estimators::family_name(m.lm.spec.family) << ',' << split << ',' << met.n << ',' << num(cfg.mu) << ','
          << num(met.acc) << ',' << num(met.mse) << ',' << r2_text(met) << ','
          << (m.lm.best ? num(m.lm.best->acc) : "") << ',' << (m.lm.best ? num(m.lm.best->mse) : "") << '\n';
  preds << "index,y,y_hat,abs_err\n";
  std::vector<double> err(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    err[i] = std::abs(y[i] - y_hat[i]);
    preds << idx[i] << ',' << num(y[i]) << ',' << num(y_hat[i]) << ',' << num(err[i]) << '\n';
  }
  const auto h = histogram(err, 20);
  hist << "bin_lo,bin_hi,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i)
    hist << num(h.edges[i]) << ',' << num(h.edges[i + 1]) << ',' << h.counts[i] << '\n';
  write_text(dir / "metrics.csv", metrics.str());
  write_text(dir / "predictions.csv", preds.str());
  write_text(dir / "error_histogram.csv", hist.str());
  write_text(dir / "scatter.svg", scatter_svg(y, y_hat, {"Predicted vs true inertia", "true H (s)", "predicted H (s)"}));
  write_text(dir / "error_histogram.svg", histogram_svg(h, {"Absolute error", "|H - H_hat| (s)", "count"}));

  log << text_table({"family", "split", "n", "ACC", "MSE", "R2"},
                    {{std::string(estimators::family_name(m.lm.spec.family)), split, std::to_string(met.n), pct(met.acc),
                      short_num(met.mse), met.r2 ? short_num(*met.r2) : "n/a"}})
      << "reports written to " << dir.string() << "\n";
}

void cmd_compare(const RunConfig& cfg, const std::vector<fs::path>& checkpoints, const std::vector<fs::path>& bundles,
                 std::ostream& log) {
  require(checkpoints.size() >= 2, "compare: at least two checkpoints are required");
  require(!bundles.empty(), "compare: at least one bundle is required");
  std::vector<signal::Dataset> data;
  for (const auto& b : bundles) data.push_back(signal::load_dataset(b));

  struct Row {
    std::string family, label, checkpoint;
    Metrics m;
  };
  std::vector<Row> rows;
  std::vector<std::string> labels_order;
  for (const auto& path : checkpoints) {
    auto m = load_model(path);
    std::optional<std::size_t> match;
    std::string reasons;
    for (std::size_t b = 0; b < data.size() && !match; ++b) {
      try {
        const auto ds = select_features(data[b], m.features);
        estimators::check_compatible(m.lm, ds);
        match = b;
        const auto met = estimators::evaluate(m.lm.model, ds, ds.val, cfg.mu);
        std::string label = bundle_label(ds);
        if (data[b].info.features != m.features) label += "+" + feature_list_string(m.features);
        const auto shown = fs::absolute(path).lexically_proximate(fs::absolute(cfg.out)).generic_string();
        rows.push_back({std::string(estimators::family_name(m.lm.spec.family)), label, shown, met});
        if (std::find(labels_order.begin(), labels_order.end(), label) == labels_order.end())
          labels_order.push_back(label);
      } catch (const DataError& e) {
        reasons += "\n  " + bundles[b].string() + ": " + e.what();
      }
    }
    if (!match) throw DataError("compare: checkpoint " + path.string() + " matches none of the bundles:" + reasons);
  }

  std::ostringstream csv;
  csv << "family,bundle,acc,r2,mse,checkpoint\n";
  std::vector<std::vector<std::string>> table;
  for (const auto& r : rows) {
    csv << r.family << ',' << r.label << ',' << num(r.m.acc) << ',' << r2_text(r.m) << ',' << num(r.m.mse) << ','
        << r.checkpoint << '\n';
    table.push_back({r.family, r.label, pct(r.m.acc), r.m.r2 ? short_num(*r.m.r2) : "n/a", short_num(r.m.mse)});
  }
  // ACC pivot: one row per family, one column per bundle label.
  std::map<std::string, std::map<std::string, double>> pivot;
  std::vector<std::string> fam_order;
  for (const auto& r : rows) {
    if (!pivot.count(r.family)) fam_order.push_back(r.family);
    pivot[r.family][r.label] = r.m.acc;
  }
  std::ostringstream pcsv;
  pcsv << "family";
  for (const auto& l : labels_order) pcsv << ',' << l;
  pcsv << '\n';
  for (const auto& f : fam_order) {
    pcsv << f;
    for (const auto& l : labels_order) pcsv << ',' << (pivot[f].count(l) ? num(pivot[f][l]) : "");
    pcsv << '\n';
  }
  const auto dir = fs::path(cfg.out) / "compare";
  write_text(dir / "comparison.csv", csv.str());
  write_text(dir / "acc_by_bundle.csv", pcsv.str());
  log << text_table({"family", "bundle", "ACC", "R2", "MSE"}, table) << "tables written to " << dir.string() << "\n";
}

void cmd_opp(const RunConfig& cfg, const std::optional<fs::path>& restrict_bundle, std::ostream& log) {
  const auto sys = load_case(cfg);
  const auto g = opp::graph_from_system(sys);
  const auto opts = opp_options(cfg);
  const auto zg = opp::detect_zgib(g, opts.zgib_mode);
  std::optional<signal::Dataset> source;
  if (restrict_bundle) source = signal::load_dataset(*restrict_bundle);

  std::vector<std::size_t> budgets = cfg.opp.budgets;
  if (opts.objective == opp::Objective::kMinPmusFull) budgets = {0};
  const auto dir = fs::path(cfg.out) / "opp";
  std::ostringstream csv;
  csv << "budget,buses,score,n_buses,fully_observable\n";
  std::vector<std::vector<std::string>> table;
  for (std::size_t k : budgets) {
    const auto p = opp::solve_opp(g, k, opts);
    std::string ids;
    for (int b : p.buses) ids += (ids.empty() ? "" : " ") + std::to_string(g.bus_id[b]);
    const std::string kname = k == 0 ? "min" : std::to_string(k);
    csv << kname << ",\"" << ids << "\"," << p.report.score << ',' << g.n << ',' << (p.report.fully_observable ? 1 : 0)
        << '\n';
    table.push_back({kname, ids, std::to_string(p.report.score) + "/" + std::to_string(g.n),
                     p.report.fully_observable ? "yes" : "no"});

    std::ostringstream obs;
    obs << "bus,pmu,observed,zgib\n";
    for (std::size_t i = 0; i < g.n; ++i)
      obs << g.bus_id[i] << ',' << int(p.x[i]) << ',' << int(p.report.o[i]) << ','
          << (g.has_generator[i] ? 0 : 1) << '\n';
    write_text(dir / ("observability_" + kname + ".csv"), obs.str());

    if (source) {
      const auto restricted = signal::restrict_buses(*source, p.buses);
      const auto out = dir / ("bundle_" + kname);
      signal::save_dataset(restricted, out);
      table.back().push_back(out.string());
    }
  }
  write_text(dir / "placements.csv", csv.str());
  std::vector<std::string> header{"budget", "PMU buses", "observed", "full"};
  if (source) header.push_back("restricted bundle");
  log << "ZGIB " << (opts.zgib ? "on" : "off") << " (" << zg.buses.size() << " zero-generation buses)\n"
      << text_table(header, table);
}

void cmd_featselect(const RunConfig& cfg, const fs::path& bundle, std::ostream& log) {
  const auto full = signal::load_dataset(bundle);
  featselect::ScoreOptions so;
  so.family = cfg.family;
  so.train = train_config(cfg);
  so.mu = cfg.mu;
  so.seed = cfg.seed;
  so.repeats = cfg.featselect.repeats;
  for (auto f : cfg.featselect.candidates)
    if (std::find(full.info.features.begin(), full.info.features.end(), f) == full.info.features.end())
      throw DataError("featselect: bundle lacks candidate feature " + std::string(feature_name(f)));
  const auto scorer = [&](const std::vector<FeatureId>& subset) {
    log << "  scoring " << feature_list_string(subset) << " ..." << std::flush;
    const auto m = featselect::score_subset(subset, featselect::restrict_factory(full), so);
    log << " ACC " << pct(m.acc) << ", MSE " << short_num(m.mse) << "\n";
    return m;
  };
  const auto res = featselect::greedy_forward(cfg.featselect.candidates, scorer,
                                              std::string(estimators::family_name(cfg.family)));
  std::ostringstream csv;
  featselect::write_trace_csv(csv, res);
  const auto dir = fs::path(cfg.out) / "featselect";
  write_text(dir / "trace.csv", csv.str());
  std::vector<std::vector<std::string>> table;
  for (const auto& e : res.trace)
    table.push_back({std::to_string(e.round), feature_list_string(e.subset),
                     e.metrics ? pct(e.metrics->acc) : "failed: " + e.error,
                     e.metrics ? short_num(e.metrics->mse) : "", e.selected ? "*" : ""});
  log << text_table({"round", "subset", "ACC", "MSE", "kept"}, table)
      << "selected: " << (res.chosen.empty() ? std::string("(none)") : feature_list_string(res.chosen)) << "\n";
}

}  // namespace inertia::cli
