#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "inertia/nn/checkpoint.hpp"
#include "inertia/nn/layers.hpp"
#include "inertia/signal/dataset.hpp"

namespace inertia::estimators {

enum class Family { kDnn, kCnn, kLrcn, kGcn };

inline constexpr Family kAllFamilies[] = {Family::kDnn, Family::kCnn, Family::kLrcn, Family::kGcn};

std::string_view family_name(Family f);
Family parse_family(std::string_view s);

/// Architecture description. Sample tensors are always [bus][feature][step];
/// each family reads that buffer under its own view:
///   DNN  flat vector
///   CNN, LRCN  channels (bus x feature) by time
///   GCN  nodes (bus) by node features (feature x time)
struct ModelSpec {
  Family family = Family::kLrcn;
  std::size_t n_buses = 0, n_features = 0, n_steps = 0;
  std::size_t conv1 = 10, conv2 = 20;
  std::size_t kernel1 = 3, kernel2 = 3;
  std::size_t pool = 2;
  std::size_t lstm_units = 32;
  nn::CellType cell = nn::CellType::kLstm;
  std::size_t gcn_hidden = 32;
  std::vector<std::size_t> dense_hidden;  // fully connected head before the scalar output
  std::vector<std::pair<int, int>> edges;  // GCN graph over local bus indices
  std::uint64_t seed = 0;

  bool operator==(const ModelSpec&) const = default;
};

/// Family defaults for a dataset's tensor shape and observed-bus graph.
ModelSpec default_spec(Family family, const signal::Dataset& ds, std::uint64_t seed);
ModelSpec default_spec(Family family, std::size_t n_buses, std::size_t n_features, std::size_t n_steps,
                       std::uint64_t seed);

/// Per-sample input shape the family consumes.
nn::Shape input_shape(const ModelSpec& spec);

/// Throws InvalidArgument when the spec cannot produce a consistent stack.
void validate(const ModelSpec& spec);

/// Builds and seeds the layer stack. The output is a single scalar.
nn::Sequential build_model(const ModelSpec& spec);

/// Spec fields as checkpoint header entries, and back.
void write_spec(nn::Checkpoint& ck, const ModelSpec& spec);
ModelSpec read_spec(const nn::Checkpoint& ck);

}  // namespace inertia::estimators
