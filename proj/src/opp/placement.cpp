#include "inertia/opp/placement.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <numeric>
#include <string>

#include "inertia/common/error.hpp"

#ifdef INERTIA_HAVE_OPENMP
#include <omp.h>
#endif

namespace inertia::opp {
namespace {

using Mask = std::uint64_t;

constexpr std::uint64_t kMaxSubsets = 10'000'000;

/// cover[j] = buses observed by a PMU at j.
std::vector<Mask> cover_sets(const Graph& g, const ZgibSet* z) {
  std::vector<Mask> cover(g.n);
  for (std::size_t j = 0; j < g.n; ++j) cover[j] = Mask{1} << j;
  for (auto [a, b] : g.edges) {
    cover[a] |= Mask{1} << b;
    cover[b] |= Mask{1} << a;
  }
  if (z)
    for (std::size_t i = 0; i < g.n; ++i)
      for (std::size_t j = 0; j < g.n; ++j)
        if (z->connected(i, j)) cover[j] |= Mask{1} << i;
  return cover;
}

std::vector<Mask> covers_for(const Graph& g, const OppOptions& opts) {
  validate(g);
  if (!opts.zgib) return cover_sets(g, nullptr);
  const ZgibSet z = detect_zgib(g, opts.zgib_mode);
  return cover_sets(g, &z);
}

Placement make_placement(const Graph& g, const std::vector<int>& buses, const OppOptions& opts, std::uint64_t nodes) {
  Placement p;
  p.buses = buses;
  p.x.assign(g.n, 0);
  for (int b : buses) p.x[b] = 1;
  if (opts.zgib) {
    const ZgibSet z = detect_zgib(g, opts.zgib_mode);
    p.report = observability(p.x, g, &z);
  } else {
    p.report = observability(p.x, g, nullptr);
  }
  p.nodes_explored = nodes;
  return p;
}

bool is_connected(const Graph& g) {
  if (g.n == 0) return true;
  std::vector<std::vector<int>> adj(g.n);
  for (auto [a, b] : g.edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<bool> seen(g.n, false);
  std::vector<int> stack{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : adj[u])
      if (!seen[v]) {
        seen[v] = true;
        ++count;
        stack.push_back(v);
      }
  }
  return count == g.n;
}

/// Depth-first search over increasing index sequences, so the first optimum
/// found is the lexicographically smallest one.
class BranchAndBound {
 public:
  BranchAndBound(std::vector<Mask> cover, std::size_t k) : cover_(std::move(cover)), n_(cover_.size()), k_(k) {
    gains_.reserve(n_);
  }

  std::vector<int> run() {
    chosen_.clear();
    dfs(0, 0);
    return best_set_;
  }
  [[nodiscard]] int best_score() const { return best_; }
  [[nodiscard]] std::uint64_t nodes() const { return nodes_; }

 private:
  void dfs(std::size_t next, Mask covered) {
    ++nodes_;
    const int score = std::popcount(covered);
    if (chosen_.size() == k_) {
      if (score > best_) {
        best_ = score;
        best_set_ = chosen_;
      }
      return;
    }
    const std::size_t need = k_ - chosen_.size();
    if (n_ - next < need) return;
    if (score + bound(next, need, covered) <= best_) return;
    for (std::size_t j = next; j + need <= n_; ++j) {
      chosen_.push_back(static_cast<int>(j));
      dfs(j + 1, covered | cover_[j]);
      chosen_.pop_back();
      if (best_ == static_cast<int>(n_)) return;
    }
  }

  // Sum of the `need` largest marginal gains, capped by the uncovered count.
  int bound(std::size_t next, std::size_t need, Mask covered) {
    gains_.clear();
    for (std::size_t j = next; j < n_; ++j) gains_.push_back(std::popcount(cover_[j] & ~covered));
    std::partial_sort(gains_.begin(), gains_.begin() + static_cast<std::ptrdiff_t>(need), gains_.end(),
                      std::greater<>());
    const int sum = std::accumulate(gains_.begin(), gains_.begin() + static_cast<std::ptrdiff_t>(need), 0);
    return std::min(sum, static_cast<int>(n_) - std::popcount(covered));
  }

  std::vector<Mask> cover_;
  std::size_t n_, k_;
  std::vector<int> chosen_, best_set_, gains_;
  int best_ = -1;
  std::uint64_t nodes_ = 0;
};

struct Best {
  int score = -1;
  std::vector<int> set;
  std::uint64_t visited = 0;
};

bool improves(const Best& cand, const Best& cur) {
  if (cand.score != cur.score) return cand.score > cur.score;
  return !cand.set.empty() && (cur.set.empty() || cand.set < cur.set);
}

/// Every k-subset whose smallest element is `first`, in lexicographic order.
Best enumerate_prefix(const std::vector<Mask>& cover, std::size_t k, std::size_t first) {
  const std::size_t n = cover.size();
  Best best;
  std::vector<int> idx(k);
  idx[0] = static_cast<int>(first);
  for (std::size_t i = 1; i < k; ++i) idx[i] = static_cast<int>(first + i);
  if (first + k > n) return best;
  while (true) {
    Mask m = 0;
    for (int i : idx) m |= cover[i];
    ++best.visited;
    const int s = std::popcount(m);
    if (s > best.score) {
      best.score = s;
      best.set = idx;
    }
    // Advance the tail (positions 1..k-1); position 0 stays fixed.
    std::size_t pos = k;
    while (pos > 1) {
      --pos;
      if (static_cast<std::size_t>(idx[pos]) < n - (k - pos)) break;
      if (pos == 1) return best;
    }
    if (k == 1) return best;
    ++idx[pos];
    for (std::size_t i = pos + 1; i < k; ++i) idx[i] = idx[i - 1] + 1;
  }
}

Placement brute_force_impl(const Graph& g, std::size_t budget, const OppOptions& opts, bool parallel) {
  require(budget >= 1, "brute_force_opp: budget must be at least 1");
  const auto cover = covers_for(g, opts);
  const std::size_t k = std::min(budget, g.n);
  const std::uint64_t total = n_choose_k(g.n, k);
  require(total <= kMaxSubsets, "brute_force_opp: C(" + std::to_string(g.n) + ", " + std::to_string(k) + ") = " +
                                    std::to_string(total) + " subsets exceeds the limit of 1e7");
  const std::size_t n_prefix = g.n - k + 1;
  std::vector<Best> per(n_prefix);
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t f = 0; f < static_cast<std::ptrdiff_t>(n_prefix); ++f)
      per[static_cast<std::size_t>(f)] = enumerate_prefix(cover, k, static_cast<std::size_t>(f));
  } else {
    for (std::size_t f = 0; f < n_prefix; ++f) per[f] = enumerate_prefix(cover, k, f);
  }
  Best best;
  std::uint64_t visited = 0;
  for (const auto& b : per) {
    visited += b.visited;
    if (improves(b, best)) best = b;
  }
  return make_placement(g, best.set, opts, visited);
}

}  // namespace

Graph graph_from_system(const grid::PowerSystem& sys) {
  Graph g;
  g.n = sys.buses.size();
  for (const auto& b : sys.buses) g.bus_id.push_back(b.id);
  g.has_generator.assign(g.n, false);
  for (int b : grid::generator_buses(sys)) g.has_generator[b] = true;
  for (const auto& br : sys.branches) {
    const auto e = std::minmax(br.from_bus, br.to_bus);
    if (e.first != e.second) g.edges.emplace_back(e.first, e.second);
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  return g;
}

void validate(const Graph& g) {
  require(g.n <= 64, "opp: at most 64 buses are supported, got " + std::to_string(g.n));
  require(g.has_generator.size() == g.n, "opp: generator flags do not match the bus count");
  require(g.bus_id.empty() || g.bus_id.size() == g.n, "opp: bus ids do not match the bus count");
  for (auto [a, b] : g.edges)
    require(a >= 0 && b >= 0 && static_cast<std::size_t>(a) < g.n && static_cast<std::size_t>(b) < g.n && a != b,
            "opp: invalid edge " + std::to_string(a) + "-" + std::to_string(b));
}

std::size_t ZgibSet::n_virtual_edges() const {
  std::size_t c = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) c += connected(i, j);
  return c;
}

ZgibSet detect_zgib(const Graph& g, ZgibMode mode) {
  validate(g);
  ZgibSet z;
  z.n = g.n;
  z.w.assign(g.n * g.n, 0);
  std::vector<std::vector<int>> adj(g.n);
  for (auto [a, b] : g.edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  for (std::size_t k = 0; k < g.n; ++k) {
    if (g.has_generator[k]) continue;
    z.buses.push_back(static_cast<int>(k));
    for (int i : adj[k])
      for (int j : adj[k]) {
        if (i == j) continue;
        if (mode == ZgibMode::kNonZgibPairsOnly && (!g.has_generator[i] || !g.has_generator[j])) continue;
        z.w[static_cast<std::size_t>(i) * g.n + j] = 1;
      }
  }
  return z;
}

ObservabilityReport observability(std::span<const std::uint8_t> x, const Graph& g, const ZgibSet* zgib) {
  validate(g);
  require(x.size() == g.n, "observability: placement has " + std::to_string(x.size()) + " entries for " +
                               std::to_string(g.n) + " buses");
  for (auto v : x) require(v <= 1, "observability: placement entries must be 0 or 1");
  require(!zgib || zgib->n == g.n, "observability: ZGIB matrix size mismatch");
  // delta_i = sum_j (A + I)_ij x_j + sum_j w_ij x_j
  std::vector<int> delta(g.n, 0);
  for (std::size_t i = 0; i < g.n; ++i) delta[i] += x[i];
  for (auto [a, b] : g.edges) {
    delta[a] += x[b];
    delta[b] += x[a];
  }
  if (zgib)
    for (std::size_t i = 0; i < g.n; ++i)
      for (std::size_t j = 0; j < g.n; ++j) delta[i] += zgib->connected(i, j) ? x[j] : 0;
  ObservabilityReport r;
  r.o.resize(g.n);
  for (std::size_t i = 0; i < g.n; ++i) {
    r.o[i] = delta[i] >= 1 ? 1 : 0;
    r.score += r.o[i];
  }
  r.fully_observable = r.score == g.n;
  return r;
}

std::uint64_t n_choose_k(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(r);
}

Placement solve_opp(const Graph& g, std::size_t budget, const OppOptions& opts) {
  const auto cover = covers_for(g, opts);
  if (opts.objective == Objective::kMinPmusFull) {
    require(is_connected(g), "solve_opp: full observability needs a connected network");
    std::uint64_t nodes = 0;
    for (std::size_t k = 1; k <= g.n; ++k) {
      BranchAndBound bb(cover, k);
      auto set = bb.run();
      nodes += bb.nodes();
      if (bb.best_score() == static_cast<int>(g.n)) return make_placement(g, set, opts, nodes);
    }
    throw InvalidArgument("solve_opp: no full cover found");
  }
  require(budget >= 1, "solve_opp: budget must be at least 1");
  BranchAndBound bb(cover, std::min(budget, g.n));
  const auto set = bb.run();
  return make_placement(g, set, opts, bb.nodes());
}

Placement brute_force_opp(const Graph& g, std::size_t budget, const OppOptions& opts) {
  return brute_force_impl(g, budget, opts, true);
}

Placement brute_force_opp_serial(const Graph& g, std::size_t budget, const OppOptions& opts) {
  return brute_force_impl(g, budget, opts, false);
}

}  // namespace inertia::opp
