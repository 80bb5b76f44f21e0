#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include "cli/commands.hpp"
#include "cli/report.hpp"
#include "cli/run_config.hpp"
#include "doctest.h"
#include "inertia/common/error.hpp"

using namespace inertia;
using namespace inertia::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("inertia_cli_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config overrides and validation") {
  RunConfig cfg;
  CHECK_NOTHROW(validate(cfg));
  apply_json(cfg, nlohmann::json::parse(R"({"seed": 7, "model": {"family": "gcn"}, "train": {"lr": 0.003},
                                              "dataset": {"window": [0.5, 1.5], "snr_db": 45}})"));
  CHECK(cfg.seed == 7);
  CHECK(cfg.family == estimators::Family::kGcn);
  CHECK(cfg.train.lr == 0.003);
  CHECK(cfg.data.t0 == 0.5);
  CHECK(cfg.data.t1 == 1.5);
  CHECK(cfg.data.snr_db == 45.0);
  CHECK(cfg.train.epochs == RunConfig{}.train.epochs);

  apply_json(cfg, nlohmann::json::parse(R"({"dataset": {"snr_db": null}})"));
  CHECK(cfg.data.snr_db == signal::kNoNoise);

  RunConfig bad;
  CHECK_THROWS_WITH_AS(apply_json(bad, nlohmann::json::parse(R"({"train": {"lrate": 1}})")),
                       doctest::Contains("lrate"), InvalidArgument);
  CHECK_THROWS_AS(apply_json(bad, nlohmann::json::parse(R"({"bogus": 1})")), InvalidArgument);
  CHECK_THROWS_AS(apply_json(bad, nlohmann::json::parse(R"({"seed": "x"})")), InvalidArgument);
  CHECK_THROWS_AS(apply_json(bad, nlohmann::json::parse(R"({"model": {"family": "rnn"}})")), InvalidArgument);

  RunConfig window;
  window.data.t0 = 1.0;
  window.data.t1 = 0.5;
  CHECK_THROWS_AS(validate(window), InvalidArgument);
}

TEST_CASE("config json round trip") {
  RunConfig a;
  a.seed = 11;
  a.family = estimators::Family::kCnn;
  a.data.features = {FeatureId::kRocof, FeatureId::kVoltMag};
  a.opp.budgets = {3, 4};
  a.opp.zgib_mode = opp::ZgibMode::kNonZgibPairsOnly;
  a.train.momentum = 0.9;
  RunConfig b;
  apply_json(b, to_json(a));
  CHECK(to_json(b).dump() == to_json(a).dump());

  const auto path = scratch("cfg.json");
  {
    std::ofstream os(path);
    os << to_json(a).dump(2);
  }
  CHECK(to_json(load_config_file(path.string())).dump() == to_json(a).dump());
  fs::remove(path);
  CHECK_THROWS(load_config_file((scratch("missing") / "none.json").string()));
}

TEST_CASE("flag parsers") {
  CHECK(parse_window("0:1") == std::pair{0.0, 1.0});
  CHECK(parse_window("0.5:1.5") == std::pair{0.5, 1.5});
  CHECK_THROWS_AS(parse_window("0.5"), InvalidArgument);
  CHECK_THROWS_AS(parse_window("a:b"), InvalidArgument);
  CHECK_THROWS_AS(parse_window("0:1x"), InvalidArgument);
  CHECK(parse_snr("45") == 45.0);
  CHECK(parse_snr("none") == signal::kNoNoise);
  CHECK(parse_snr("inf") == signal::kNoNoise);
  CHECK_THROWS_AS(parse_snr("loud"), InvalidArgument);
  CHECK_THROWS_AS(parse_snr("45dB"), InvalidArgument);
}

TEST_CASE("report helpers") {
  CHECK(num(0.25) == "0.25");
  CHECK(num(3.0) == "3");
  CHECK(num(std::nan("")) == "nan");

  const std::vector<double> v{0.0, 0.1, 0.2, 0.4};
  const auto h = histogram(v, 4);
  REQUIRE(h.edges.size() == 5);
  CHECK(h.edges.front() == 0.0);
  CHECK(h.edges.back() == doctest::Approx(0.4));
  std::size_t total = 0;
  for (auto c : h.counts) total += c;
  CHECK(total == v.size());
  CHECK(h.counts.back() >= 1);
  const auto zeros = histogram(std::vector<double>{0.0, 0.0}, 2);
  CHECK(zeros.edges.back() == 1.0);
  CHECK(zeros.counts.front() == 2);

  ChartOptions opts;
  opts.title = "a < b & c";
  const auto svg = histogram_svg(h, opts);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("a < b") == std::string::npos);

  Series s{"train", {1, 2, 3}, {1.0, 0.1, 0.01}, "#000"};
  opts.log_y = true;
  const auto line = line_chart_svg(std::span<const Series>(&s, 1), opts);
  CHECK(line.find("<polyline") != std::string::npos);
  const auto sc = scatter_svg(std::vector<double>{3, 4}, std::vector<double>{3.1, 3.9}, opts);
  CHECK(sc.find("<circle") != std::string::npos);

  const auto table = text_table({"a", "bbb"}, {{"xx", "y"}});
  CHECK(table == "a   bbb\n-------\nxx  y\n");

  const auto dir = scratch("write");
  write_text(dir / "sub" / "f.txt", "hello\n");
  CHECK(slurp(dir / "sub" / "f.txt") == "hello\n");
  fs::remove_all(dir);
}

TEST_CASE("output lock") {
  const auto dir = scratch("lock");
  {
    OutputLock a(dir);
    CHECK(fs::exists(dir / ".inertia.lock"));
    CHECK_THROWS_AS(OutputLock{dir}, InvalidArgument);
  }
  CHECK_FALSE(fs::exists(dir / ".inertia.lock"));
  CHECK_NOTHROW(OutputLock{dir});
  fs::remove_all(dir);
}

TEST_CASE("small pipeline writes the expected reports") {
  const auto out = scratch("pipeline");
  RunConfig cfg;
  cfg.out = out.string();
  cfg.sweep.h_count = 2;
  cfg.sweep.pe_count = 5;
  cfg.family = estimators::Family::kGcn;
  cfg.train.epochs = 3;
  std::ostringstream log;
  cmd_simulate(cfg, log);
  CHECK(fs::exists(default_bundle(cfg) / "samples.bin"));
  echo_config(cfg, "simulate");
  const auto echoed = load_config_file((out / "config" / "simulate.json").string());
  CHECK(to_json(echoed).dump() == to_json(cfg).dump());

  cmd_train(cfg, default_bundle(cfg), log);
  const auto family_dir = out / "gcn";
  CHECK(fs::exists(default_checkpoint(cfg)));
  const auto hist = slurp(family_dir / "history.csv");
  CHECK(hist.rfind("epoch,train_mse,val_mse,lr\n", 0) == 0);
  CHECK(std::count(hist.begin(), hist.end(), '\n') == 4);
  CHECK(fs::exists(family_dir / "learning_curve.svg"));

  cmd_evaluate(cfg, default_checkpoint(cfg), default_bundle(cfg), "val", log);
  const auto preds = slurp(family_dir / "eval_val" / "predictions.csv");
  CHECK(preds.rfind("index,y,y_hat,abs_err\n", 0) == 0);
  CHECK(std::count(preds.begin(), preds.end(), '\n') == 3);
  CHECK(fs::exists(family_dir / "eval_val" / "metrics.csv"));
  CHECK_THROWS_AS(cmd_evaluate(cfg, default_checkpoint(cfg), default_bundle(cfg), "test", log), InvalidArgument);

  RunConfig other = cfg;
  other.data.t0 = 0.5;
  other.data.t1 = 1.5;
  other.out = (out / "late").string();
  cmd_simulate(other, log);
  CHECK_THROWS_AS(cmd_evaluate(cfg, default_checkpoint(cfg), default_bundle(other), "val", log), DataError);
  CHECK_FALSE(fs::exists(out / ".inertia.lock"));
  fs::remove_all(out);
}
