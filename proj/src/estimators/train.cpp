#include "inertia/estimators/train.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "inertia/common/error.hpp"
#include "inertia/common/rng.hpp"
#include "inertia/nn/optim.hpp"

namespace inertia::estimators {
namespace {

std::string fmt(double v) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw DataError("checkpoint: bad number " + s);
  return v;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void check_shape(const ModelSpec& spec, const signal::Dataset& ds) {
  require(!ds.samples.empty(), "dataset is empty");
  const auto& s = ds.samples.front();
  if (s.n_buses != spec.n_buses || s.n_features != spec.n_features || s.n_steps != spec.n_steps)
    throw InvalidArgument("model expects " + std::to_string(spec.n_buses) + "x" + std::to_string(spec.n_features) +
                          "x" + std::to_string(spec.n_steps) + " samples, dataset has " + std::to_string(s.n_buses) +
                          "x" + std::to_string(s.n_features) + "x" + std::to_string(s.n_steps));
}

nn::Dense& output_layer(nn::Sequential& m) { return dynamic_cast<nn::Dense&>(m.layer(m.size() - 1)); }

std::vector<nn::Tensor> snapshot(nn::Sequential& m) {
  std::vector<nn::Tensor> out;
  for (auto* p : m.params()) out.push_back(p->value);
  return out;
}

void restore(nn::Sequential& m, const std::vector<nn::Tensor>& values) {
  auto ps = m.params();
  for (std::size_t i = 0; i < ps.size(); ++i) ps[i]->value = values[i];
}

}  // namespace

void load_batch(const signal::Dataset& ds, std::span<const std::size_t> idx, nn::Tensor& x) {
  require(!idx.empty(), "load_batch: no samples");
  const auto& s0 = ds.samples.at(idx[0]);
  const std::size_t n = s0.values.size();
  x.resize({idx.size(), n});
  for (std::size_t b = 0; b < idx.size(); ++b) {
    const auto& s = ds.samples.at(idx[b]);
    require(s.values.size() == n, "load_batch: inconsistent sample sizes");
    std::copy(s.values.begin(), s.values.end(), x.data.begin() + static_cast<std::ptrdiff_t>(b * n));
  }
}

namespace {

const nn::Tensor& forward_batch(nn::Sequential& model, nn::Tensor& x) {
  nn::Shape shape{x.dim(0)};
  for (std::size_t d : model.input_shape()) shape.push_back(d);
  require(nn::shape_size(shape) == x.size(),
          "sample has " + std::to_string(x.size() / x.dim(0)) + " values, model input is " +
              nn::shape_string(model.input_shape()));
  x.reshape(shape);
  return model.forward(x);
}

}  // namespace

std::vector<double> predict(nn::Sequential& model, const signal::Dataset& ds, std::span<const std::size_t> idx,
                            std::size_t batch_size) {
  require(batch_size > 0, "predict: batch size must be positive");
  std::vector<double> out;
  out.reserve(idx.size());
  nn::Tensor x;
  for (std::size_t i = 0; i < idx.size(); i += batch_size) {
    const auto chunk = idx.subspan(i, std::min(batch_size, idx.size() - i));
    load_batch(ds, chunk, x);
    const auto& y = forward_batch(model, x);
    out.insert(out.end(), y.data.begin(), y.data.end());
  }
  return out;
}

double predict(nn::Sequential& model, const signal::Sample& sample) {
  nn::Tensor x({1, sample.values.size()});
  std::copy(sample.values.begin(), sample.values.end(), x.data.begin());
  return forward_batch(model, x).data.at(0);
}

std::vector<double> labels(const signal::Dataset& ds, std::span<const std::size_t> idx) {
  std::vector<double> y;
  y.reserve(idx.size());
  for (std::size_t i : idx) y.push_back(ds.samples.at(i).label);
  return y;
}

Metrics evaluate(nn::Sequential& model, const signal::Dataset& ds, std::span<const std::size_t> idx, double mu) {
  require(!idx.empty(), "evaluate: empty split");
  const auto y_hat = predict(model, ds, idx);
  return compute_metrics(labels(ds, idx), y_hat, mu);
}

TrainedModel train(const ModelSpec& spec, const signal::Dataset& ds, const TrainConfig& cfg) {
  require(ds.info.normalized, "train: dataset must be normalized");
  require(!ds.train.empty() && !ds.val.empty(), "train: both splits must be nonempty");
  require(cfg.batch_size > 0, "train: batch size must be positive");
  require(cfg.lr >= 0.0 && std::isfinite(cfg.lr), "train: learning rate must be finite and nonnegative");
  require(cfg.momentum >= 0.0 && cfg.momentum < 1.0, "train: momentum must be in [0, 1)");
  require(cfg.lr_factor > 0.0 && cfg.lr_factor < 1.0, "train: lr factor must be in (0, 1)");
  require(cfg.mu > 0.0, "train: tolerance must be positive");
  check_shape(spec, ds);

  TrainedModel tm{spec, build_model(spec), {}, 0.0, 0, {}, 0, signal::normalization_hash(ds)};
  auto& model = tm.model;
  model.set_backend(cfg.backend);

  const auto y_train = labels(ds, ds.train);
  if (cfg.output_bias_mean) {
    double mean = 0.0;
    for (double v : y_train) mean += v;
    output_layer(model).bias().value.fill(mean / static_cast<double>(y_train.size()));
  }

  tm.best = evaluate(model, ds, ds.val, cfg.mu);
  tm.initial_val_mse = tm.best.mse;
  if (!std::isfinite(tm.initial_val_mse)) throw NumericalError("train: initial validation MSE is not finite");

  nn::Sgd opt(cfg.momentum);
  nn::PlateauSchedule sched(cfg.lr, tm.initial_val_mse, cfg.lr_factor, cfg.lr_patience, cfg.lr_floor);
  auto params = model.params();
  for (auto* p : params) p->velocity.fill(0.0);
  auto best_params = snapshot(model);

  Rng rng(derive_seed(cfg.seed, SeedStream::kBatch));
  std::vector<std::size_t> order = ds.train;
  std::size_t above = 0;
  nn::Tensor x, dy;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = sched.lr();
    double sse = 0.0;
    for (std::size_t i = 0; i < order.size(); i += cfg.batch_size) {
      const auto batch = std::span<const std::size_t>(order).subspan(i, std::min(cfg.batch_size, order.size() - i));
      load_batch(ds, batch, x);
      const auto& y_hat = forward_batch(model, x);
      const auto nb = static_cast<double>(batch.size());
      dy.resize(y_hat.shape);
      for (std::size_t b = 0; b < batch.size(); ++b) {
        const double e = y_hat.data[b] - ds.samples[batch[b]].label;
        sse += e * e;
        dy.data[b] = 2.0 * e / nb;
      }
      model.zero_grad();
      model.backward(dy);
      if (!opt.step(params, lr)) ++tm.skipped_batches;
    }

    const Metrics val = evaluate(model, ds, ds.val, cfg.mu);
    tm.history.push_back({epoch, sse / static_cast<double>(order.size()), val.mse, val.acc, lr});

    if (val.mse < tm.best.mse) {
      tm.best = val;
      tm.best_epoch = epoch;
      if (cfg.restore_best) best_params = snapshot(model);
    }
    sched.observe(val.mse);

    if (!(val.mse <= cfg.divergence_factor * tm.initial_val_mse)) {
      if (++above >= cfg.divergence_epochs)
        throw NumericalError("training diverged: validation MSE " + fmt(val.mse) + " at epoch " +
                             std::to_string(epoch) + " has exceeded " + fmt(cfg.divergence_factor) +
                             "x the initial " + fmt(tm.initial_val_mse) + " for " + std::to_string(above) +
                             " consecutive epochs (lr " + fmt(lr) + ")");
    } else {
      above = 0;
    }
    if (epoch - tm.best_epoch >= cfg.early_stop) break;
  }

  if (cfg.restore_best) {
    restore(model, best_params);
  } else if (!tm.history.empty()) {
    tm.best = evaluate(model, ds, ds.val, cfg.mu);
  }
  for (auto* p : params)
    if (!p->value.all_finite()) throw NumericalError("train: non-finite parameters in " + p->name);
  return tm;
}

void write_history_csv(std::ostream& os, std::span<const EpochRecord> history) {
  os << "epoch,train_mse,val_mse,lr\n";
  for (const auto& r : history)
    os << r.epoch << ',' << fmt(r.train_mse) << ',' << fmt(r.val_mse) << ',' << fmt(r.lr) << '\n';
}

nn::Checkpoint to_checkpoint(TrainedModel& tm) {
  nn::Checkpoint ck;
  write_spec(ck, tm.spec);
  ck.set("norm_hash", hex64(tm.norm_hash));
  ck.set("best_epoch", std::to_string(tm.best_epoch));
  ck.set("epochs_run", std::to_string(tm.history.size()));
  ck.set("best_acc", fmt(tm.best.acc));
  ck.set("best_mse", fmt(tm.best.mse));
  ck.set("best_r2", tm.best.r2 ? fmt(*tm.best.r2) : "none");
  ck.set("best_n", std::to_string(tm.best.n));
  for (std::size_t i = 0; i < tm.model.size(); ++i) {
    auto& layer = tm.model.layer(i);
    for (auto* p : layer.params()) ck.tensors.emplace_back(std::to_string(i) + "." + layer.kind() + "." + p->name, p->value);
  }
  return ck;
}

LoadedModel from_checkpoint(const nn::Checkpoint& ck) {
  LoadedModel lm{read_spec(ck), nn::Sequential({}), 0, 0, std::nullopt};
  lm.model = build_model(lm.spec);
  lm.norm_hash = std::stoull(ck.get("norm_hash"), nullptr, 16);
  lm.best_epoch = std::stoull(ck.get("best_epoch"));
  if (ck.has("best_mse")) {
    Metrics m;
    m.acc = parse_double(ck.get("best_acc"));
    m.mse = parse_double(ck.get("best_mse"));
    if (ck.get("best_r2") != "none") m.r2 = parse_double(ck.get("best_r2"));
    m.n = std::stoull(ck.get("best_n"));
    lm.best = m;
  }
  std::size_t t = 0;
  for (std::size_t i = 0; i < lm.model.size(); ++i) {
    auto& layer = lm.model.layer(i);
    for (auto* p : layer.params()) {
      const std::string name = std::to_string(i) + "." + layer.kind() + "." + p->name;
      if (t >= ck.tensors.size()) throw DataError("checkpoint: missing tensor " + name);
      const auto& [stored, value] = ck.tensors[t++];
      if (stored != name) throw DataError("checkpoint: expected tensor " + name + ", found " + stored);
      if (value.shape != p->value.shape)
        throw DataError("checkpoint: tensor " + name + " has shape " + nn::shape_string(value.shape) + ", model needs " +
                        nn::shape_string(p->value.shape));
      p->value = value;
    }
  }
  if (t != ck.tensors.size()) throw DataError("checkpoint: unexpected extra tensors");
  return lm;
}

void check_compatible(const LoadedModel& m, const signal::Dataset& ds) {
  try {
    check_shape(m.spec, ds);
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("checkpoint/bundle mismatch: ") + e.what());
  }
  const std::uint64_t h = signal::normalization_hash(ds);
  if (h != m.norm_hash)
    throw DataError("checkpoint/bundle mismatch: checkpoint normalization hash " + hex64(m.norm_hash) +
                    ", bundle hash " + hex64(h));
}

}  // namespace inertia::estimators
