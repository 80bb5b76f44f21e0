#include <algorithm>
#include <cmath>

#include "inertia/nn/kernels.hpp"

namespace inertia::nn::ref {
namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

void dense_forward(const double* x, const double* w, const double* b, double* y, std::size_t B,
                   std::size_t I, std::size_t O) {
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t o = 0; o < O; ++o) {
      double s = b[o];
      for (std::size_t i = 0; i < I; ++i) s += w[o * I + i] * x[n * I + i];
      y[n * O + o] = s;
    }
}

void dense_backward(const double* x, const double* w, const double* dy, double* dx, double* dw,
                    double* db, std::size_t B, std::size_t I, std::size_t O) {
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t o = 0; o < O; ++o) {
      const double g = dy[n * O + o];
      db[o] += g;
      for (std::size_t i = 0; i < I; ++i) dw[o * I + i] += g * x[n * I + i];
    }
  if (dx == nullptr) return;
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t i = 0; i < I; ++i) {
      double s = 0.0;
      for (std::size_t o = 0; o < O; ++o) s += dy[n * O + o] * w[o * I + i];
      dx[n * I + i] = s;
    }
}

void conv1d_forward(const double* x, const double* w, const double* b, double* y, std::size_t B,
                    std::size_t Cin, std::size_t L, std::size_t Cout, std::size_t K) {
  const std::size_t Lo = L - K + 1;
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t o = 0; o < Cout; ++o)
      for (std::size_t t = 0; t < Lo; ++t) {
        double s = b[o];
        for (std::size_t c = 0; c < Cin; ++c)
          for (std::size_t k = 0; k < K; ++k) s += w[(o * Cin + c) * K + k] * x[(n * Cin + c) * L + t + k];
        y[(n * Cout + o) * Lo + t] = s;
      }
}

void conv1d_backward(const double* x, const double* w, const double* dy, double* dx, double* dw,
                     double* db, std::size_t B, std::size_t Cin, std::size_t L, std::size_t Cout,
                     std::size_t K) {
  const std::size_t Lo = L - K + 1;
  if (dx != nullptr) std::fill(dx, dx + B * Cin * L, 0.0);
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t o = 0; o < Cout; ++o)
      for (std::size_t t = 0; t < Lo; ++t) {
        const double g = dy[(n * Cout + o) * Lo + t];
        db[o] += g;
        for (std::size_t c = 0; c < Cin; ++c)
          for (std::size_t k = 0; k < K; ++k) {
            dw[(o * Cin + c) * K + k] += g * x[(n * Cin + c) * L + t + k];
            if (dx != nullptr) dx[(n * Cin + c) * L + t + k] += g * w[(o * Cin + c) * K + k];
          }
      }
}

void gcn_forward(const double* v, const double* f, const double* w, const double* b, double* z,
                 std::size_t B, std::size_t N, std::size_t Din, std::size_t Dout) {
  std::vector<double> fw(N * Dout);
  for (std::size_t n = 0; n < B; ++n) {
    const double* fb = f + n * N * Din;
    for (std::size_t m = 0; m < N; ++m)
      for (std::size_t o = 0; o < Dout; ++o) {
        double s = 0.0;
        for (std::size_t d = 0; d < Din; ++d) s += fb[m * Din + d] * w[d * Dout + o];
        fw[m * Dout + o] = s;
      }
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t o = 0; o < Dout; ++o) {
        double s = b[o];
        for (std::size_t m = 0; m < N; ++m) s += v[i * N + m] * fw[m * Dout + o];
        z[(n * N + i) * Dout + o] = s;
      }
  }
}

void gcn_backward(const double* v, const double* f, const double* w, const double* dz, double* df,
                  double* dw, double* db, std::size_t B, std::size_t N, std::size_t Din, std::size_t Dout) {
  std::vector<double> g(N * Dout);
  for (std::size_t n = 0; n < B; ++n) {
    const double* dzb = dz + n * N * Dout;
    const double* fb = f + n * N * Din;
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t o = 0; o < Dout; ++o) db[o] += dzb[i * Dout + o];
    for (std::size_t m = 0; m < N; ++m)
      for (std::size_t o = 0; o < Dout; ++o) {
        double s = 0.0;
        for (std::size_t i = 0; i < N; ++i) s += v[i * N + m] * dzb[i * Dout + o];
        g[m * Dout + o] = s;
      }
    for (std::size_t m = 0; m < N; ++m)
      for (std::size_t d = 0; d < Din; ++d) {
        double s = 0.0;
        for (std::size_t o = 0; o < Dout; ++o) {
          dw[d * Dout + o] += fb[m * Din + d] * g[m * Dout + o];
          s += g[m * Dout + o] * w[d * Dout + o];
        }
        if (df != nullptr) df[(n * N + m) * Din + d] = s;
      }
  }
}

void rnn_forward(CellType cell, const double* x, const double* wx, const double* wh, const double* b,
                 std::size_t B, std::size_t T, std::size_t D, std::size_t H, RecurrentCache& cache) {
  const std::size_t G = gate_count(cell) * H;
  cache.gates.assign(B * T * G, 0.0);
  cache.h.assign(B * (T + 1) * H, 0.0);
  cache.c.assign(cell == CellType::kLstm ? B * (T + 1) * H : 0, 0.0);
  std::vector<double> pre(G);
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t t = 0; t < T; ++t) {
      const double* xt = x + (n * T + t) * D;
      const double* hp = cache.h.data() + (n * (T + 1) + t) * H;
      double* hn = cache.h.data() + (n * (T + 1) + t + 1) * H;
      double* gt = cache.gates.data() + (n * T + t) * G;
      for (std::size_t g = 0; g < G; ++g) {
        double s = b[g];
        for (std::size_t d = 0; d < D; ++d) s += wx[g * D + d] * xt[d];
        for (std::size_t j = 0; j < H; ++j) s += wh[g * H + j] * hp[j];
        pre[g] = s;
      }
      if (cell == CellType::kLstm) {
        const double* cp = cache.c.data() + (n * (T + 1) + t) * H;
        double* cn = cache.c.data() + (n * (T + 1) + t + 1) * H;
        for (std::size_t j = 0; j < H; ++j) {
          const double i = sigmoid(pre[j]), f = sigmoid(pre[H + j]);
          const double g = std::tanh(pre[2 * H + j]), o = sigmoid(pre[3 * H + j]);
          gt[j] = i;
          gt[H + j] = f;
          gt[2 * H + j] = g;
          gt[3 * H + j] = o;
          cn[j] = f * cp[j] + i * g;
          hn[j] = o * std::tanh(cn[j]);
        }
      } else {
        for (std::size_t j = 0; j < H; ++j) {
          const double z = sigmoid(pre[j]), cand = std::tanh(pre[H + j]);
          gt[j] = z;
          gt[H + j] = cand;
          hn[j] = (1.0 - z) * hp[j] + z * cand;
        }
      }
    }
}

void rnn_backward(CellType cell, const double* x, const double* wx, const double* wh,
                  const RecurrentCache& cache, const double* dh_seq, double* dx, double* dwx, double* dwh,
                  double* db, std::size_t B, std::size_t T, std::size_t D, std::size_t H) {
  const std::size_t G = gate_count(cell) * H;
  std::vector<double> dh(H), dc(H), dpre(G), dh_next(H), dc_next(H);
  for (std::size_t n = 0; n < B; ++n) {
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    std::fill(dc_next.begin(), dc_next.end(), 0.0);
    for (std::size_t t = T; t-- > 0;) {
      const double* gt = cache.gates.data() + (n * T + t) * G;
      const double* hp = cache.h.data() + (n * (T + 1) + t) * H;
      for (std::size_t j = 0; j < H; ++j) dh[j] = dh_seq[(n * T + t) * H + j] + dh_next[j];

      if (cell == CellType::kLstm) {
        const double* cp = cache.c.data() + (n * (T + 1) + t) * H;
        const double* cn = cache.c.data() + (n * (T + 1) + t + 1) * H;
        for (std::size_t j = 0; j < H; ++j) {
          const double i = gt[j], f = gt[H + j], g = gt[2 * H + j], o = gt[3 * H + j];
          const double tc = std::tanh(cn[j]);
          dc[j] = dc_next[j] + dh[j] * o * (1.0 - tc * tc);
          dpre[j] = dc[j] * g * i * (1.0 - i);
          dpre[H + j] = dc[j] * cp[j] * f * (1.0 - f);
          dpre[2 * H + j] = dc[j] * i * (1.0 - g * g);
          dpre[3 * H + j] = dh[j] * tc * o * (1.0 - o);
          dc_next[j] = dc[j] * f;
        }
      } else {
        for (std::size_t j = 0; j < H; ++j) {
          const double z = gt[j], cand = gt[H + j];
          dpre[j] = dh[j] * (cand - hp[j]) * z * (1.0 - z);
          dpre[H + j] = dh[j] * z * (1.0 - cand * cand);
        }
      }

      const double* xt = x + (n * T + t) * D;
      for (std::size_t g = 0; g < G; ++g) {
        db[g] += dpre[g];
        for (std::size_t d = 0; d < D; ++d) dwx[g * D + d] += dpre[g] * xt[d];
        for (std::size_t j = 0; j < H; ++j) dwh[g * H + j] += dpre[g] * hp[j];
      }
      if (dx != nullptr)
        for (std::size_t d = 0; d < D; ++d) {
          double s = 0.0;
          for (std::size_t g = 0; g < G; ++g) s += dpre[g] * wx[g * D + d];
          dx[(n * T + t) * D + d] = s;
        }
      for (std::size_t j = 0; j < H; ++j) {
        double s = cell == CellType::kMinimalGated ? dh[j] * (1.0 - gt[j]) : 0.0;
        for (std::size_t g = 0; g < G; ++g) s += dpre[g] * wh[g * H + j];
        dh_next[j] = s;
      }
    }
  }
}

}  // namespace inertia::nn::ref
