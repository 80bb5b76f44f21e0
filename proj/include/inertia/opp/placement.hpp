#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "inertia/grid/power_system.hpp"

namespace inertia::opp {

/// Topology used by placement: undirected simple graph with generator flags.
/// Node indices are 0-based; `bus_id` keeps the external numbering.
struct Graph {
  std::size_t n = 0;
  std::vector<std::pair<int, int>> edges;
  std::vector<bool> has_generator;
  std::vector<int> bus_id;
};

Graph graph_from_system(const grid::PowerSystem& sys);

/// Throws InvalidArgument on out-of-range or self-loop edges, mismatched
/// flag vectors, or more than 64 nodes.
void validate(const Graph& g);

enum class ZgibMode {
  kNeighborPairs,     // every pair of buses sharing a ZGIB neighbour
  kNonZgibPairsOnly,  // only pairs in which both buses carry generation
};

/// Zero-generation-injection buses and the virtual-connection matrix w
/// (row-major n x n, symmetric, zero diagonal).
struct ZgibSet {
  std::vector<int> buses;
  std::vector<std::uint8_t> w;
  std::size_t n = 0;

  [[nodiscard]] bool connected(std::size_t i, std::size_t j) const { return w[i * n + j] != 0; }
  [[nodiscard]] std::size_t n_virtual_edges() const;
};

ZgibSet detect_zgib(const Graph& g, ZgibMode mode = ZgibMode::kNeighborPairs);

struct ObservabilityReport {
  std::vector<std::uint8_t> o;
  std::size_t score = 0;
  bool fully_observable = false;
};

/// Bus i is observed when it hosts a PMU, neighbours one, or (with ZGIB
/// augmentation) shares a ZGIB with one.
ObservabilityReport observability(std::span<const std::uint8_t> x, const Graph& g, const ZgibSet* zgib = nullptr);

enum class Objective { kMaxObservability, kMinPmusFull };

struct Placement {
  std::vector<int> buses;  // sorted node indices
  std::vector<std::uint8_t> x;
  ObservabilityReport report;
  std::uint64_t nodes_explored = 0;
};

struct OppOptions {
  bool zgib = true;
  ZgibMode zgib_mode = ZgibMode::kNeighborPairs;
  Objective objective = Objective::kMaxObservability;
};

/// Exact solver. Max-observability places min(budget, n) PMUs maximizing the
/// observed-bus count; min-PMU finds the smallest full cover (budget ignored;
/// the graph must be connected). Ties go to the lexicographically smallest
/// bus-index set.
Placement solve_opp(const Graph& g, std::size_t budget, const OppOptions& opts = {});

/// Enumerates every min(budget, n)-subset. Same tie-break as solve_opp.
/// Throws InvalidArgument when more than 1e7 subsets would be visited.
Placement brute_force_opp(const Graph& g, std::size_t budget, const OppOptions& opts = {});
Placement brute_force_opp_serial(const Graph& g, std::size_t budget, const OppOptions& opts = {});

/// Binomial coefficient saturating at UINT64_MAX.
std::uint64_t n_choose_k(std::size_t n, std::size_t k);

}  // namespace inertia::opp
