// Reference (serial) versus fast (Eigen + OpenMP) kernels, and serial versus
// parallel drivers for the exhaustive placement search and the simulation sweep.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "inertia/grid/ieee24.hpp"
#include "inertia/nn/kernels.hpp"
#include "inertia/opp/placement.hpp"
#include "inertia/signal/dataset.hpp"

namespace {

using namespace inertia;

std::vector<double> random_vec(std::size_t n, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(gen);
  return v;
}

template <bool Fast>
void BM_Dense(benchmark::State& state) {
  const std::size_t B = 32, I = static_cast<std::size_t>(state.range(0)), O = 128;
  auto x = random_vec(B * I, 1), w = random_vec(O * I, 2), b = random_vec(O, 3);
  std::vector<double> y(B * O);
  for (auto _ : state) {
    if constexpr (Fast) nn::fast::dense_forward(x.data(), w.data(), b.data(), y.data(), B, I, O);
    else nn::ref::dense_forward(x.data(), w.data(), b.data(), y.data(), B, I, O);
    benchmark::DoNotOptimize(y.data());
  }
}

template <bool Fast>
void BM_Conv1d(benchmark::State& state) {
  const std::size_t B = 32, Cin = 22, L = 200, Cout = 10, K = 3;
  auto x = random_vec(B * Cin * L, 1), w = random_vec(Cout * Cin * K, 2), b = random_vec(Cout, 3);
  std::vector<double> y(B * Cout * (L - K + 1));
  for (auto _ : state) {
    if constexpr (Fast) nn::fast::conv1d_forward(x.data(), w.data(), b.data(), y.data(), B, Cin, L, Cout, K);
    else nn::ref::conv1d_forward(x.data(), w.data(), b.data(), y.data(), B, Cin, L, Cout, K);
    benchmark::DoNotOptimize(y.data());
  }
}

template <bool Fast>
void BM_Lstm(benchmark::State& state) {
  const std::size_t B = 32, T = 48, D = 20, H = 32, G = 4 * H;
  auto x = random_vec(B * T * D, 1), wx = random_vec(G * D, 2), wh = random_vec(G * H, 3), b = random_vec(G, 4);
  nn::RecurrentCache cache;
  for (auto _ : state) {
    if constexpr (Fast) nn::fast::rnn_forward(nn::CellType::kLstm, x.data(), wx.data(), wh.data(), b.data(), B, T, D, H, cache);
    else nn::ref::rnn_forward(nn::CellType::kLstm, x.data(), wx.data(), wh.data(), b.data(), B, T, D, H, cache);
    benchmark::DoNotOptimize(cache.h.data());
  }
}

template <bool Fast>
void BM_Gcn(benchmark::State& state) {
  const std::size_t B = 32, N = 11, Din = 400, Dout = 32;
  auto v = random_vec(N * N, 1), f = random_vec(B * N * Din, 2), w = random_vec(Din * Dout, 3), b = random_vec(Dout, 4);
  std::vector<double> z(B * N * Dout);
  for (auto _ : state) {
    if constexpr (Fast) nn::fast::gcn_forward(v.data(), f.data(), w.data(), b.data(), z.data(), B, N, Din, Dout);
    else nn::ref::gcn_forward(v.data(), f.data(), w.data(), b.data(), z.data(), B, N, Din, Dout);
    benchmark::DoNotOptimize(z.data());
  }
}

template <bool Parallel>
void BM_BruteForceOpp(benchmark::State& state) {
  const auto g = opp::graph_from_system(grid::build_ieee24());
  const auto k = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto p = Parallel ? opp::brute_force_opp(g, k, {}) : opp::brute_force_opp_serial(g, k, {});
    benchmark::DoNotOptimize(p.report.score);
  }
}

void BM_SolveOpp(benchmark::State& state) {
  const auto g = opp::graph_from_system(grid::build_ieee24());
  const auto k = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto p = opp::solve_opp(g, k, {});
    benchmark::DoNotOptimize(p.report.score);
  }
}

template <bool Parallel>
void BM_Sweep(benchmark::State& state) {
  const auto sys = grid::build_ieee24();
  auto cfg = signal::default_sweep_config();
  cfg.h_values.resize(2);
  cfg.pe_values.resize(4);
  for (auto _ : state) {
    auto recs = Parallel ? signal::simulate_sweep(sys, cfg) : signal::simulate_sweep_serial(sys, cfg);
    benchmark::DoNotOptimize(recs.data());
  }
}

}  // namespace

BENCHMARK(BM_Dense<false>)->Name("dense/ref")->Arg(440)->Arg(4400);
BENCHMARK(BM_Dense<true>)->Name("dense/fast")->Arg(440)->Arg(4400);
BENCHMARK(BM_Conv1d<false>)->Name("conv1d/ref");
BENCHMARK(BM_Conv1d<true>)->Name("conv1d/fast");
BENCHMARK(BM_Lstm<false>)->Name("lstm/ref");
BENCHMARK(BM_Lstm<true>)->Name("lstm/fast");
BENCHMARK(BM_Gcn<false>)->Name("gcn/ref");
BENCHMARK(BM_Gcn<true>)->Name("gcn/fast");
BENCHMARK(BM_BruteForceOpp<false>)->Name("opp_brute/serial")->Arg(3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BruteForceOpp<true>)->Name("opp_brute/parallel")->Arg(3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SolveOpp)->Name("opp_branch_and_bound")->Arg(3)->Arg(5)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Sweep<false>)->Name("sweep/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Sweep<true>)->Name("sweep/parallel")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
