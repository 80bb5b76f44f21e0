#include <algorithm>
#include <cmath>

#include "inertia/nn/kernels.hpp"
#include "inertia/nn/tensor.hpp"

namespace inertia::nn::fast {
namespace {

using Eigen::Index;
using StridedMap = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;
using ConstStridedMap = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;

Index ix(std::size_t v) { return static_cast<Index>(v); }

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// cols[(c*K + k)][n*Lo + t] = x[n][c][t + k]
void im2col(const double* x, double* cols, std::size_t B, std::size_t Cin, std::size_t L, std::size_t K) {
  const std::size_t Lo = L - K + 1, width = B * Lo;
  const auto nb = static_cast<std::ptrdiff_t>(B);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ni = 0; ni < nb; ++ni) {
    const auto n = static_cast<std::size_t>(ni);
    for (std::size_t c = 0; c < Cin; ++c)
      for (std::size_t k = 0; k < K; ++k)
        std::copy_n(x + (n * Cin + c) * L + k, Lo, cols + (c * K + k) * width + n * Lo);
  }
}

void col2im(const double* cols, double* dx, std::size_t B, std::size_t Cin, std::size_t L, std::size_t K) {
  const std::size_t Lo = L - K + 1, width = B * Lo;
  const auto nb = static_cast<std::ptrdiff_t>(B);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ni = 0; ni < nb; ++ni) {
    const auto n = static_cast<std::size_t>(ni);
    for (std::size_t c = 0; c < Cin; ++c) {
      double* out = dx + (n * Cin + c) * L;
      std::fill(out, out + L, 0.0);
      for (std::size_t k = 0; k < K; ++k) {
        const double* src = cols + (c * K + k) * width + n * Lo;
        for (std::size_t t = 0; t < Lo; ++t) out[t + k] += src[t];
      }
    }
  }
}

}  // namespace

void dense_forward(const double* x, const double* w, const double* b, double* y, std::size_t B,
                   std::size_t I, std::size_t O) {
  auto Y = as_matrix(y, B, O);
  Y.noalias() = as_matrix(x, B, I) * as_matrix(w, O, I).transpose();
  Y.rowwise() += ConstVecMap(b, ix(O)).transpose();
}

void dense_backward(const double* x, const double* w, const double* dy, double* dx, double* dw,
                    double* db, std::size_t B, std::size_t I, std::size_t O) {
  const auto dY = as_matrix(dy, B, O);
  as_matrix(dw, O, I).noalias() += dY.transpose() * as_matrix(x, B, I);
  VecMap(db, ix(O)) += dY.colwise().sum().transpose();
  if (dx != nullptr) as_matrix(dx, B, I).noalias() = dY * as_matrix(w, O, I);
}

void conv1d_forward(const double* x, const double* w, const double* b, double* y, std::size_t B,
                    std::size_t Cin, std::size_t L, std::size_t Cout, std::size_t K) {
  const std::size_t Lo = L - K + 1, width = B * Lo;
  Buffer cols(Cin * K * width), out(Cout * width);
  im2col(x, cols.data(), B, Cin, L, K);
  as_matrix(out.data(), Cout, width).noalias() =
      as_matrix(w, Cout, Cin * K) * as_matrix(cols.data(), Cin * K, width);
  const auto nb = static_cast<std::ptrdiff_t>(B);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ni = 0; ni < nb; ++ni) {
    const auto n = static_cast<std::size_t>(ni);
    for (std::size_t o = 0; o < Cout; ++o) {
      const double* src = out.data() + o * width + n * Lo;
      double* dst = y + (n * Cout + o) * Lo;
      for (std::size_t t = 0; t < Lo; ++t) dst[t] = src[t] + b[o];
    }
  }
}

void conv1d_backward(const double* x, const double* w, const double* dy, double* dx, double* dw,
                     double* db, std::size_t B, std::size_t Cin, std::size_t L, std::size_t Cout,
                     std::size_t K) {
  const std::size_t Lo = L - K + 1, width = B * Lo;
  Buffer cols(Cin * K * width), g(Cout * width);
  im2col(x, cols.data(), B, Cin, L, K);
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t o = 0; o < Cout; ++o)
      std::copy_n(dy + (n * Cout + o) * Lo, Lo, g.data() + o * width + n * Lo);
  const auto G = as_matrix(g.data(), Cout, width);
  as_matrix(dw, Cout, Cin * K).noalias() += G * as_matrix(cols.data(), Cin * K, width).transpose();
  VecMap(db, ix(Cout)) += G.rowwise().sum();
  if (dx == nullptr) return;
  as_matrix(cols.data(), Cin * K, width).noalias() = as_matrix(w, Cout, Cin * K).transpose() * G;
  col2im(cols.data(), dx, B, Cin, L, K);
}

void gcn_forward(const double* v, const double* f, const double* w, const double* b, double* z,
                 std::size_t B, std::size_t N, std::size_t Din, std::size_t Dout) {
  Buffer fw(B * N * Dout);
  as_matrix(fw.data(), B * N, Dout).noalias() = as_matrix(f, B * N, Din) * as_matrix(w, Din, Dout);
  const auto V = as_matrix(v, N, N);
  const auto bias = ConstVecMap(b, ix(Dout)).transpose();
  const auto nb = static_cast<std::ptrdiff_t>(B);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ni = 0; ni < nb; ++ni) {
    const auto n = static_cast<std::size_t>(ni);
    auto Z = as_matrix(z + n * N * Dout, N, Dout);
    Z.noalias() = V * as_matrix(fw.data() + n * N * Dout, N, Dout);
    Z.rowwise() += bias;
  }
}

void gcn_backward(const double* v, const double* f, const double* w, const double* dz, double* df,
                  double* dw, double* db, std::size_t B, std::size_t N, std::size_t Din, std::size_t Dout) {
  Buffer g(B * N * Dout);
  const auto V = as_matrix(v, N, N);
  const auto nb = static_cast<std::ptrdiff_t>(B);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ni = 0; ni < nb; ++ni) {
    const auto n = static_cast<std::size_t>(ni);
    as_matrix(g.data() + n * N * Dout, N, Dout).noalias() = V.transpose() * as_matrix(dz + n * N * Dout, N, Dout);
  }
  const auto Gm = as_matrix(g.data(), B * N, Dout);
  VecMap(db, ix(Dout)) += as_matrix(dz, B * N, Dout).colwise().sum().transpose();
  as_matrix(dw, Din, Dout).noalias() += as_matrix(f, B * N, Din).transpose() * Gm;
  if (df != nullptr) as_matrix(df, B * N, Din).noalias() = Gm * as_matrix(w, Din, Dout).transpose();
}

void rnn_forward(CellType cell, const double* x, const double* wx, const double* wh, const double* b,
                 std::size_t B, std::size_t T, std::size_t D, std::size_t H, RecurrentCache& cache) {
  const std::size_t G = gate_count(cell) * H;
  cache.gates.resize(B * T * G);
  cache.h.assign(B * (T + 1) * H, 0.0);
  cache.c.assign(cell == CellType::kLstm ? B * (T + 1) * H : 0, 0.0);

  auto pre_all = as_matrix(cache.gates.data(), B * T, G);
  pre_all.noalias() = as_matrix(x, B * T, D) * as_matrix(wx, G, D).transpose();
  pre_all.rowwise() += ConstVecMap(b, ix(G)).transpose();
  const auto Wh = as_matrix(wh, G, H);
  const auto nb = static_cast<std::ptrdiff_t>(B);

  for (std::size_t t = 0; t < T; ++t) {
    StridedMap pre(cache.gates.data() + t * G, ix(B), ix(G), Eigen::OuterStride<>(ix(T * G)));
    ConstStridedMap hp(cache.h.data() + t * H, ix(B), ix(H), Eigen::OuterStride<>(ix((T + 1) * H)));
    if (t > 0) pre.noalias() += hp * Wh.transpose();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ni = 0; ni < nb; ++ni) {
      const auto n = static_cast<std::size_t>(ni);
      double* gt = cache.gates.data() + (n * T + t) * G;
      const double* hprev = cache.h.data() + (n * (T + 1) + t) * H;
      double* hn = cache.h.data() + (n * (T + 1) + t + 1) * H;
      if (cell == CellType::kLstm) {
        const double* cp = cache.c.data() + (n * (T + 1) + t) * H;
        double* cn = cache.c.data() + (n * (T + 1) + t + 1) * H;
        for (std::size_t j = 0; j < H; ++j) {
          const double i = sigmoid(gt[j]), f = sigmoid(gt[H + j]);
          const double g = std::tanh(gt[2 * H + j]), o = sigmoid(gt[3 * H + j]);
          gt[j] = i;
          gt[H + j] = f;
          gt[2 * H + j] = g;
          gt[3 * H + j] = o;
          cn[j] = f * cp[j] + i * g;
          hn[j] = o * std::tanh(cn[j]);
        }
      } else {
        for (std::size_t j = 0; j < H; ++j) {
          const double z = sigmoid(gt[j]), cand = std::tanh(gt[H + j]);
          gt[j] = z;
          gt[H + j] = cand;
          hn[j] = (1.0 - z) * hprev[j] + z * cand;
        }
      }
    }
  }
}

void rnn_backward(CellType cell, const double* x, const double* wx, const double* wh,
                  const RecurrentCache& cache, const double* dh_seq, double* dx, double* dwx, double* dwh,
                  double* db, std::size_t B, std::size_t T, std::size_t D, std::size_t H) {
  const std::size_t G = gate_count(cell) * H;
  Buffer dpre(B * T * G), dh_next(B * H, 0.0), dc_next(B * H, 0.0), hprev(B * T * H);
  const auto Wh = as_matrix(wh, G, H);
  const auto nb = static_cast<std::ptrdiff_t>(B);

  for (std::size_t t = T; t-- > 0;) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ni = 0; ni < nb; ++ni) {
      const auto n = static_cast<std::size_t>(ni);
      const double* gt = cache.gates.data() + (n * T + t) * G;
      const double* hp = cache.h.data() + (n * (T + 1) + t) * H;
      double* dp = dpre.data() + (n * T + t) * G;
      double* dhn = dh_next.data() + n * H;
      double* dcn = dc_next.data() + n * H;
      const double* dhs = dh_seq + (n * T + t) * H;
      if (cell == CellType::kLstm) {
        const double* cp = cache.c.data() + (n * (T + 1) + t) * H;
        const double* cn = cache.c.data() + (n * (T + 1) + t + 1) * H;
        for (std::size_t j = 0; j < H; ++j) {
          const double dh = dhs[j] + dhn[j];
          const double i = gt[j], f = gt[H + j], g = gt[2 * H + j], o = gt[3 * H + j];
          const double tc = std::tanh(cn[j]);
          const double dc = dcn[j] + dh * o * (1.0 - tc * tc);
          dp[j] = dc * g * i * (1.0 - i);
          dp[H + j] = dc * cp[j] * f * (1.0 - f);
          dp[2 * H + j] = dc * i * (1.0 - g * g);
          dp[3 * H + j] = dh * tc * o * (1.0 - o);
          dcn[j] = dc * f;
          dhn[j] = 0.0;
        }
      } else {
        for (std::size_t j = 0; j < H; ++j) {
          const double dh = dhs[j] + dhn[j];
          const double z = gt[j], cand = gt[H + j];
          dp[j] = dh * (cand - hp[j]) * z * (1.0 - z);
          dp[H + j] = dh * z * (1.0 - cand * cand);
          dhn[j] = dh * (1.0 - z);
        }
      }
      std::copy_n(hp, H, hprev.data() + (n * T + t) * H);
    }
    ConstStridedMap dp_t(dpre.data() + t * G, ix(B), ix(G), Eigen::OuterStride<>(ix(T * G)));
    as_matrix(dh_next.data(), B, H).noalias() += dp_t * Wh;
  }

  const auto dP = as_matrix(dpre.data(), B * T, G);
  VecMap(db, ix(G)) += dP.colwise().sum().transpose();
  as_matrix(dwx, G, D).noalias() += dP.transpose() * as_matrix(x, B * T, D);
  as_matrix(dwh, G, H).noalias() += dP.transpose() * as_matrix(hprev.data(), B * T, H);
  if (dx != nullptr) as_matrix(dx, B * T, D).noalias() = dP * as_matrix(wx, G, D);
}

}  // namespace inertia::nn::fast
