#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cli/commands.hpp"
#include "cli/run_config.hpp"
#include "inertia/common/error.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct Flags {
  std::string config, case_name, snr, window, features, family, out, mu, objective, zgib_mode, cell, backend;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<double> lr, momentum;
  std::vector<std::size_t> budgets;
  std::optional<bool> zgib;
  bool print_config = false;
};

inertia::cli::RunConfig resolve(const Flags& f) {
  using namespace inertia;
  cli::RunConfig c = f.config.empty() ? cli::RunConfig{} : cli::load_config_file(f.config);
  if (!f.case_name.empty()) c.case_name = f.case_name;
  if (f.seed) c.seed = *f.seed;
  if (!f.snr.empty()) c.data.snr_db = cli::parse_snr(f.snr);
  if (!f.window.empty()) std::tie(c.data.t0, c.data.t1) = cli::parse_window(f.window);
  if (!f.features.empty()) c.data.features = parse_feature_list(f.features);
  if (!f.family.empty()) c.family = estimators::parse_family(f.family);
  if (!f.out.empty()) c.out = f.out;
  if (!f.mu.empty()) {
    try {
      c.mu = std::stod(f.mu);
    } catch (const std::logic_error&) {
      throw InvalidArgument("--mu expects a number of seconds or 'inf'");
    }
  }
  if (f.epochs) c.train.epochs = *f.epochs;
  if (f.lr) c.train.lr = *f.lr;
  if (f.momentum) c.train.momentum = *f.momentum;
  if (!f.budgets.empty()) c.opp.budgets = f.budgets;
  if (f.zgib) c.opp.zgib = *f.zgib;
  nlohmann::json patch = nlohmann::json::object();
  if (!f.objective.empty()) patch["opp"]["objective"] = f.objective;
  if (!f.zgib_mode.empty()) patch["opp"]["zgib_mode"] = f.zgib_mode;
  if (!f.cell.empty()) patch["model"]["cell"] = f.cell;
  if (!f.backend.empty()) patch["train"]["backend"] = f.backend;
  cli::apply_json(c, patch);
  cli::validate(c);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  namespace fs = std::filesystem;
  using namespace inertia;

  CLI::App app{"Inertia estimation from ambient PMU measurements: simulate, train, evaluate, compare, opp, featselect"};
  app.fallthrough();
  app.require_subcommand(0, 1);
  Flags f;
  app.add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_flag("--print-config", f.print_config, "Print the resolved configuration and exit");
  app.add_option("--case", f.case_name, "Built-in case name (ieee24) or case file path");
  app.add_option("--seed", f.seed, "Global seed");
  app.add_option("--snr", f.snr, "Measurement SNR in dB, or 'none'");
  app.add_option("--window", f.window, "Time window t0:t1 in seconds");
  app.add_option("--features", f.features, "Comma-separated features: domega,rocof,v");
  app.add_option("--family", f.family, "Model family: dnn, cnn, lrcn, gcn");
  app.add_option("--out", f.out, "Output directory");
  app.add_option("--epochs", f.epochs, "Maximum training epochs");
  app.add_option("--lr", f.lr, "Base learning rate");
  app.add_option("--momentum", f.momentum, "Heavy-ball momentum (0 = plain gradient descent)");
  app.add_option("--mu", f.mu, "ACC tolerance in seconds ('inf' accepted)");
  app.add_option("--budget", f.budgets, "PMU budgets for opp (repeatable or comma-separated)")->delimiter(',');
  app.add_flag("--zgib,!--no-zgib", f.zgib, "Use zero-generation-injection virtual connections in opp");
  app.add_option("--objective", f.objective, "opp objective: max or full");
  app.add_option("--zgib-mode", f.zgib_mode, "neighbor_pairs or non_zgib_pairs");
  app.add_option("--cell", f.cell, "Recurrent cell: lstm or mgu");
  app.add_option("--backend", f.backend, "Kernel backend: fast or reference");

  std::string bundle, checkpoint, split = "val";
  std::vector<std::string> checkpoints, bundles;
  std::optional<std::string> restrict_bundle;

  auto* sim = app.add_subcommand("simulate", "Simulate the inertia sweep and write a dataset bundle");
  auto* train = app.add_subcommand("train", "Train one model family on a bundle");
  train->add_option("--bundle", bundle, "Dataset bundle directory (default <out>/bundle)");
  auto* eval = app.add_subcommand("evaluate", "Evaluate a checkpoint and write prediction reports");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint (default <out>/<family>/model.ckpt)");
  eval->add_option("--bundle", bundle, "Dataset bundle directory (default <out>/bundle)");
  eval->add_option("--split", split, "train, val or all");
  auto* cmp = app.add_subcommand("compare", "Tabulate several checkpoints");
  cmp->add_option("--checkpoint", checkpoints, "Checkpoint (repeat)")->required();
  cmp->add_option("--bundle", bundles, "Bundle(s) to evaluate on (repeat; default <out>/bundle)");
  auto* oppc = app.add_subcommand("opp", "Optimal PMU placement table");
  oppc->add_option("--restrict-bundle", restrict_bundle, "Write per-budget bundles restricted to the chosen buses");
  auto* fsel = app.add_subcommand("featselect", "Greedy forward feature selection");
  fsel->add_option("--bundle", bundle, "Bundle containing every candidate feature (default <out>/bundle)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    const auto cfg = resolve(f);
    if (f.print_config) {
      std::cout << cli::to_json(cfg).dump(2) << "\n";
      return kExitOk;
    }
    if (app.get_subcommands().empty()) {
      std::cerr << app.help();
      return kExitUsage;
    }
    auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    cli::OutputLock lock(cfg.out);
    cli::echo_config(cfg, name);
    const fs::path bundle_path = bundle.empty() ? cli::default_bundle(cfg) : fs::path(bundle);
    if (sub == sim) {
      cli::cmd_simulate(cfg, std::cout);
    } else if (sub == train) {
      cli::cmd_train(cfg, bundle_path, std::cout);
    } else if (sub == eval) {
      cli::cmd_evaluate(cfg, checkpoint.empty() ? cli::default_checkpoint(cfg) : fs::path(checkpoint), bundle_path,
                        split, std::cout);
    } else if (sub == cmp) {
      std::vector<fs::path> cks(checkpoints.begin(), checkpoints.end()), bs(bundles.begin(), bundles.end());
      if (bs.empty()) bs.push_back(cli::default_bundle(cfg));
      cli::cmd_compare(cfg, cks, bs, std::cout);
    } else if (sub == oppc) {
      std::optional<fs::path> rb;
      if (restrict_bundle) rb = fs::path(*restrict_bundle);
      cli::cmd_opp(cfg, rb, std::cout);
    } else if (sub == fsel) {
      cli::cmd_featselect(cfg, bundle_path, std::cout);
    }
    return kExitOk;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
