#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "inertia/estimators/metrics.hpp"
#include "inertia/estimators/model.hpp"
#include "inertia/nn/kernels.hpp"
#include "inertia/signal/dataset.hpp"

namespace inertia::estimators {

struct TrainConfig {
  std::size_t epochs = 2000;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  double momentum = 0.0;
  double lr_factor = 0.5;
  std::size_t lr_patience = 50;
  double lr_floor = 1e-6;
  std::size_t early_stop = 200;        // epochs without val improvement
  double divergence_factor = 10.0;     // val MSE relative to the initial one
  std::size_t divergence_epochs = 20;  // consecutive epochs above the factor
  bool output_bias_mean = true;        // start the output bias at the mean training label
  bool restore_best = true;            // keep the parameters of the best validation epoch
  double mu = 0.5;
  std::uint64_t seed = 0;              // minibatch order
  nn::Backend backend = nn::Backend::kFast;

  bool operator==(const TrainConfig&) const = default;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_mse = 0.0;
  double val_mse = 0.0;
  double val_acc = 0.0;
  double lr = 0.0;        // rate used during this epoch
};

struct TrainedModel {
  ModelSpec spec;
  nn::Sequential model;
  std::vector<EpochRecord> history;
  double initial_val_mse = 0.0;
  std::size_t best_epoch = 0;  // 0 means the initial parameters
  Metrics best;                // validation metrics of the kept parameters
  std::size_t skipped_batches = 0;
  std::uint64_t norm_hash = 0;
};

/// Minibatch gradient descent on the training split with validation tracking,
/// plateau learning-rate schedule, early stopping and divergence detection.
/// Throws NumericalError when training diverges.
TrainedModel train(const ModelSpec& spec, const signal::Dataset& ds, const TrainConfig& cfg);

/// Packs a sample into the model's input layout (float64).
void load_batch(const signal::Dataset& ds, std::span<const std::size_t> idx, nn::Tensor& x);

/// Predictions in seconds for the listed samples.
std::vector<double> predict(nn::Sequential& model, const signal::Dataset& ds, std::span<const std::size_t> idx,
                            std::size_t batch_size = 128);
double predict(nn::Sequential& model, const signal::Sample& sample);

std::vector<double> labels(const signal::Dataset& ds, std::span<const std::size_t> idx);

Metrics evaluate(nn::Sequential& model, const signal::Dataset& ds, std::span<const std::size_t> idx,
                 double mu = 0.5);

/// epoch,train_mse,val_mse,lr
void write_history_csv(std::ostream& os, std::span<const EpochRecord> history);

/// Model spec, parameters and bookkeeping as a checkpoint.
nn::Checkpoint to_checkpoint(TrainedModel& tm);

struct LoadedModel {
  ModelSpec spec;
  nn::Sequential model;
  std::uint64_t norm_hash = 0;
  std::size_t best_epoch = 0;
  std::optional<Metrics> best;
};
LoadedModel from_checkpoint(const nn::Checkpoint& ck);

/// Throws DataError when the checkpoint was trained on a differently shaped or
/// normalized bundle.
void check_compatible(const LoadedModel& m, const signal::Dataset& ds);

}  // namespace inertia::estimators
