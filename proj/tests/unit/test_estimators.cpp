#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "doctest.h"
#include "inertia/common/error.hpp"
#include "inertia/estimators/train.hpp"
#include "inertia/nn/grad_check.hpp"

using namespace inertia;
using namespace inertia::estimators;

namespace {

// Small normalized dataset; the label is 3 + 5 * mean(bus 0, feature 0).
signal::Dataset synthetic(std::size_t n, std::size_t buses, std::size_t feats, std::size_t steps,
                          std::uint64_t seed, bool constant_label = false) {
  signal::Dataset ds;
  ds.info.normalized = true;
  ds.info.features.assign(kAllFeatures.begin(), kAllFeatures.begin() + static_cast<std::ptrdiff_t>(feats));
  for (std::size_t b = 0; b < buses; ++b) {
    ds.info.bus_index.push_back(static_cast<int>(b));
    ds.info.bus_id.push_back(static_cast<int>(b + 1));
    if (b + 1 < buses) ds.info.edges.emplace_back(static_cast<int>(b), static_cast<int>(b + 1));
  }
  Rng rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (std::size_t i = 0; i < n; ++i) {
    signal::Sample s;
    s.n_buses = buses;
    s.n_features = feats;
    s.n_steps = steps;
    s.values.resize(buses * feats * steps);
    for (auto& v : s.values) v = u(rng);
    double m = 0;
    for (std::size_t t = 0; t < steps; ++t) m += s.values[t];
    s.label = constant_label ? 4.25 : 3.0 + 5.0 * m / static_cast<double>(steps);
    ds.samples.push_back(std::move(s));
  }
  ds.norm.lo.assign(buses * feats, 0.0);
  ds.norm.hi.assign(buses * feats, 1.0);
  signal::split_indices(n, 0.8, seed, ds.train, ds.val);
  return ds;
}

void randomize(nn::Sequential& m, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (auto* p : m.params())
    for (double& v : p->value.data) v = u(rng);
}

}  // namespace

TEST_CASE("family names") {
  for (Family f : kAllFamilies) CHECK(parse_family(family_name(f)) == f);
  CHECK(parse_family("LRCN") == Family::kLrcn);
  CHECK_THROWS_AS(parse_family("rnn"), InvalidArgument);
}

TEST_CASE("model construction") {
  const auto lrcn = default_spec(Family::kLrcn, 11, 2, 200, 1);
  auto m = build_model(lrcn);
  CHECK(m.output_shape() == nn::Shape({1}));
  CHECK(m.input_shape() == nn::Shape({22, 200}));

  auto gspec = default_spec(Family::kGcn, 11, 2, 200, 1);
  CHECK(gspec.dense_hidden == std::vector<std::size_t>{64, 128});
  auto g = build_model(gspec);
  CHECK(g.input_shape() == nn::Shape({11, 400}));
  CHECK(g.layer(0).params()[0]->value.shape == nn::Shape({400, 32}));
  CHECK(g.output_shape() == nn::Shape({1}));

  for (Family f : kAllFamilies) {
    auto a = build_model(default_spec(f, 3, 2, 40, 7));
    auto b = build_model(default_spec(f, 3, 2, 40, 7));
    auto c = build_model(default_spec(f, 3, 2, 40, 8));
    auto pa = a.params(), pb = b.params(), pc = c.params();
    bool differs = false;
    for (std::size_t i = 0; i < pa.size(); ++i) {
      CHECK(pa[i]->value == pb[i]->value);
      differs |= !(pa[i]->value == pc[i]->value);
    }
    CHECK(differs);
  }

  CHECK_THROWS_AS(build_model(default_spec(Family::kCnn, 3, 2, 8, 0)), InvalidArgument);
  CHECK_THROWS_AS(build_model(default_spec(Family::kDnn, 0, 2, 8, 0)), InvalidArgument);
  auto bad = default_spec(Family::kGcn, 3, 1, 10, 0);
  bad.edges = {{0, 3}};
  CHECK_THROWS_AS(build_model(bad), InvalidArgument);

  const auto ds = synthetic(10, 3, 2, 30, 1);
  auto wrong = default_spec(Family::kDnn, 3, 2, 31, 0);
  CHECK_THROWS_AS(train(wrong, ds, TrainConfig{}), InvalidArgument);
  auto mdl = build_model(wrong);
  CHECK_THROWS_AS(predict(mdl, ds.samples[0]), InvalidArgument);
}

TEST_CASE("assembled models pass gradient checks") {
  for (Family f : kAllFamilies) {
    for (std::uint64_t s = 0; s < 3; ++s) {
      auto spec = default_spec(f, 3, 2, 24, s);
      spec.edges = {{0, 1}, {1, 2}};
      auto m = build_model(spec);
      randomize(m, 50 + s);
      nn::Tensor x({2, 3 * 2 * 24});
      Rng rng(60 + s);
      std::uniform_real_distribution<double> u(0, 1);
      for (double& v : x.data) v = u(rng);
      nn::Shape shape{2};
      for (auto d : m.input_shape()) shape.push_back(d);
      x.reshape(shape);
      const auto r = nn::grad_check_model(m, x, 70 + s);
      INFO(family_name(f));
      CHECK(r.max_rel_error < 1e-4);
    }
  }
}

TEST_CASE("metrics examples") {
  const std::vector<double> y{3, 4, 5};
  auto m = compute_metrics(y, y);
  CHECK(m.acc == 1.0);
  CHECK(m.mse == 0.0);
  CHECK(*m.r2 == 1.0);

  // Errors 0.4, 0.6 and 1.0: only the first is within 0.5.
  m = compute_metrics(y, std::vector<double>{3.4, 4.6, 6.0}, 0.5);
  CHECK(m.acc == doctest::Approx(1.0 / 3.0));
  CHECK(compute_metrics(y, std::vector<double>{3.4, 4.6, 6.0}, 0.6).acc == doctest::Approx(2.0 / 3.0));
  CHECK(m.mse == doctest::Approx((0.16 + 0.36 + 1.0) / 3.0));

  CHECK_FALSE(compute_metrics(std::vector<double>{2, 2}, std::vector<double>{1, 3}).r2.has_value());
  const double mean = (3.0 + 4.0 + 5.0) / 3.0;
  CHECK(*compute_metrics(y, std::vector<double>{mean, mean, mean}).r2 == 0.0);
  CHECK(compute_metrics(y, std::vector<double>{100, -100, 7}, std::numeric_limits<double>::infinity()).acc == 1.0);

  CHECK_THROWS_AS(compute_metrics(y, y, 0.0), InvalidArgument);
  CHECK_THROWS_AS(compute_metrics(y, std::vector<double>{1}), InvalidArgument);
  CHECK_THROWS_AS(compute_metrics(std::vector<double>{}, std::vector<double>{}), InvalidArgument);
  CHECK(mean_abs_error(y, std::vector<double>{3.4, 4.6, 6.0}) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("metrics agree with a direct recomputation") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> lab(3, 8);
  std::normal_distribution<double> err(0, 0.6);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 5 + trial % 50;
    std::vector<double> y(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = lab(rng);
      p[i] = y[i] + err(rng);
    }
    long double ybar = 0, ssr = 0, sst = 0;
    std::size_t hit = 0;
    for (std::size_t i = 0; i < n; ++i) ybar += y[i];
    ybar /= n;
    for (std::size_t i = 0; i < n; ++i) {
      ssr += (static_cast<long double>(y[i]) - p[i]) * (static_cast<long double>(y[i]) - p[i]);
      sst += (y[i] - ybar) * (y[i] - ybar);
      hit += std::abs(y[i] - p[i]) <= 0.5;
    }
    const auto m = compute_metrics(y, p, 0.5);
    CHECK(std::abs(m.acc - static_cast<double>(hit) / n) < 1e-12);
    CHECK(std::abs(m.mse - static_cast<double>(ssr / n)) < 1e-12);
    CHECK(std::abs(*m.r2 - static_cast<double>(1 - ssr / sst)) < 1e-12);
    double prev = -1;
    for (double mu : {0.1, 0.25, 0.5, 1.0, 2.0}) {
      const double a = compute_metrics(y, p, mu).acc;
      CHECK(a >= prev);
      prev = a;
    }
  }
}

TEST_CASE("training fits simple targets") {
  SUBCASE("constant label") {
    const auto ds = synthetic(300, 1, 1, 8, 3, true);
    TrainConfig tc;
    tc.epochs = 200;
    tc.lr = 1e-2;
    tc.momentum = 0.9;
    auto tm = train(default_spec(Family::kDnn, 1, 1, 8, 0), ds, tc);
    for (double p : predict(tm.model, ds, ds.val)) CHECK(std::abs(p - 4.25) < 0.05);
  }
  SUBCASE("single sample memorized") {
    auto ds = synthetic(1, 2, 1, 16, 4);
    ds.train = {0};
    ds.val = {0};
    TrainConfig tc;
    tc.epochs = 2000;
    tc.lr = 1e-3;
    tc.output_bias_mean = false;
    auto tm = train(default_spec(Family::kDnn, 2, 1, 16, 0), ds, tc);
    CHECK(tm.history.back().train_mse < 1e-4);
  }
  SUBCASE("learns a feature-dependent label") {
    const auto ds = synthetic(200, 2, 2, 16, 5);
    TrainConfig tc;
    tc.epochs = 300;
    tc.lr = 3e-3;
    tc.momentum = 0.9;
    auto tm = train(default_spec(Family::kDnn, 2, 2, 16, 0), ds, tc);
    CHECK(tm.best.mse < 0.5 * tm.initial_val_mse);
    CHECK(tm.best.mse < tm.history.front().val_mse);
    CHECK(tm.best_epoch > 0);
    for (std::size_t i = 0; i < tm.history.size(); ++i) CHECK(tm.history[i].epoch == i + 1);
    const auto again = evaluate(tm.model, ds, ds.val);
    CHECK(std::abs(again.mse - tm.best.mse) < 1e-12);
  }
}

TEST_CASE("training control flow") {
  const auto ds = synthetic(40, 2, 1, 16, 6);
  const auto spec = default_spec(Family::kCnn, 2, 1, 16, 0);

  TrainConfig frozen;
  frozen.epochs = 500;
  frozen.lr = 0.0;
  auto tm = train(spec, ds, frozen);
  CHECK(tm.history.size() == frozen.early_stop);
  for (const auto& r : tm.history) CHECK(r.val_mse == tm.initial_val_mse);
  CHECK(tm.best_epoch == 0);

  TrainConfig none;
  none.epochs = 0;
  tm = train(spec, ds, none);
  CHECK(tm.history.empty());
  CHECK(tm.best.mse == tm.initial_val_mse);

  TrainConfig wild;
  wild.epochs = 200;
  wild.lr = 50.0;
  wild.momentum = 0.9;
  CHECK_THROWS_AS(train(default_spec(Family::kDnn, 2, 1, 16, 0), ds, wild), NumericalError);

  auto raw = ds;
  raw.info.normalized = false;
  CHECK_THROWS_AS(train(spec, raw, TrainConfig{}), InvalidArgument);
  TrainConfig bad;
  bad.batch_size = 0;
  CHECK_THROWS_AS(train(spec, ds, bad), InvalidArgument);
}

TEST_CASE("prediction consistency") {
  const auto ds = synthetic(30, 3, 2, 24, 8);
  for (Family f : kAllFamilies) {
    auto m = build_model(default_spec(f, ds, 2));
    std::vector<std::size_t> all(ds.size());
    std::iota(all.begin(), all.end(), 0);
    const auto batched = predict(m, ds, all, 7);
    CHECK(batched == predict(m, ds, all, 7));
    for (std::size_t i = 0; i < all.size(); ++i) CHECK(std::abs(predict(m, ds.samples[i]) - batched[i]) < 1e-12);
  }
}

TEST_CASE("gcn prediction is invariant to node order") {
  auto ds = synthetic(5, 4, 2, 10, 9);
  ds.info.edges = {{0, 1}, {1, 2}, {1, 3}};
  auto spec = default_spec(Family::kGcn, ds, 3);
  auto m = build_model(spec);
  const std::vector<int> perm{2, 0, 3, 1};  // new node i is old node perm[i]
  std::vector<int> inv(4);
  for (int i = 0; i < 4; ++i) inv[perm[i]] = i;
  auto pspec = spec;
  for (auto& [a, b] : pspec.edges) {
    a = inv[a];
    b = inv[b];
  }
  auto pm = build_model(pspec);
  auto src = m.params(), dst = pm.params();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i]->value = src[i]->value;
  for (const auto& s : ds.samples) {
    auto ps = s;
    const std::size_t block = s.n_features * s.n_steps;
    for (int i = 0; i < 4; ++i)
      std::copy_n(s.values.begin() + perm[i] * block, block, ps.values.begin() + i * block);
    CHECK(std::abs(predict(m, s) - predict(pm, ps)) < 1e-12);
  }
}

TEST_CASE("checkpoint round trip") {
  const auto ds = synthetic(40, 3, 2, 24, 10);
  TrainConfig tc;
  tc.epochs = 5;
  tc.momentum = 0.9;
  for (Family f : kAllFamilies) {
    auto tm = train(default_spec(f, ds, 4), ds, tc);
    const auto ck = to_checkpoint(tm);
    std::stringstream ss;
    nn::write_checkpoint(ss, ck);
    auto lm = from_checkpoint(nn::read_checkpoint(ss));
    CHECK(lm.spec == tm.spec);
    CHECK_NOTHROW(check_compatible(lm, ds));
    const auto m = evaluate(lm.model, ds, ds.val);
    REQUIRE(lm.best.has_value());
    CHECK(std::abs(m.mse - lm.best->mse) < 1e-12);
    CHECK(m.acc == lm.best->acc);
    CHECK(lm.best_epoch == tm.best_epoch);

    auto other = ds;
    other.norm.hi[0] = 2.0;
    CHECK_THROWS_WITH_AS(check_compatible(lm, other), doctest::Contains("hash"), DataError);
    auto tampered = ck;
    tampered.tensors.pop_back();
    CHECK_THROWS_AS(from_checkpoint(tampered), DataError);
  }
}

TEST_CASE("history csv") {
  std::vector<EpochRecord> h{{1, 2.5, 2.0, 0.5, 1e-3}, {2, 1.5, 1.25, 0.75, 5e-4}};
  std::ostringstream os;
  write_history_csv(os, h);
  CHECK(os.str() == "epoch,train_mse,val_mse,lr\n1,2.5,2,0.001\n2,1.5,1.25,5e-04\n");
}
