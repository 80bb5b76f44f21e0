#pragma once

#include <cstddef>
#include <vector>

#include "inertia/nn/tensor.hpp"

namespace inertia::nn {

/// kReference: straightforward serial loops, kept as the testing oracle.
/// kFast: Eigen GEMM formulations with OpenMP over the batch.
enum class Backend { kReference, kFast };

/// Recurrent cell variants. kLstm is the three-gate LSTM (gate order i, f, g,
/// o). kMinimalGated is the single-update-gate cell
///   z = sigmoid(Wz [x, h]), h~ = tanh(W [x, h]), h' = (1 - z) h + z h~
/// with gate order z, h~.
enum class CellType { kLstm, kMinimalGated };

inline std::size_t gate_count(CellType c) { return c == CellType::kLstm ? 4 : 2; }

/// Activations saved by the recurrent forward pass for backpropagation.
struct RecurrentCache {
  Buffer gates;  // [B][T][G*H] post-activation
  Buffer c;      // [B][T+1][H] cell state (LSTM only)
  Buffer h;      // [B][T+1][H]
};

// Shapes (row-major):
//   dense:  x[B][I], w[O][I], b[O], y[B][O]
//   conv1d: x[B][Cin][L], w[Cout][Cin][K], b[Cout], y[B][Cout][L-K+1]
//   gcn:    v[N][N], f[B][N][Din], w[Din][Dout], b[Dout], z[B][N][Dout] (pre-activation)
//   rnn:    x[B][T][D], wx[G*H][D], wh[G*H][H], b[G*H]
// Backward functions accumulate into parameter gradients (dw, db) and
// overwrite input gradients (dx); dx may be null.

#define INERTIA_NN_KERNEL_DECLS                                                                         \
  void dense_forward(const double* x, const double* w, const double* b, double* y, std::size_t B,        \
                     std::size_t I, std::size_t O);                                                      \
  void dense_backward(const double* x, const double* w, const double* dy, double* dx, double* dw,        \
                      double* db, std::size_t B, std::size_t I, std::size_t O);                          \
  void conv1d_forward(const double* x, const double* w, const double* b, double* y, std::size_t B,       \
                      std::size_t Cin, std::size_t L, std::size_t Cout, std::size_t K);                  \
  void conv1d_backward(const double* x, const double* w, const double* dy, double* dx, double* dw,       \
                       double* db, std::size_t B, std::size_t Cin, std::size_t L, std::size_t Cout,      \
                       std::size_t K);                                                                   \
  void gcn_forward(const double* v, const double* f, const double* w, const double* b, double* z,        \
                   std::size_t B, std::size_t N, std::size_t Din, std::size_t Dout);                     \
  void gcn_backward(const double* v, const double* f, const double* w, const double* dz, double* df,     \
                    double* dw, double* db, std::size_t B, std::size_t N, std::size_t Din,               \
                    std::size_t Dout);                                                                   \
  void rnn_forward(CellType cell, const double* x, const double* wx, const double* wh, const double* b,  \
                   std::size_t B, std::size_t T, std::size_t D, std::size_t H, RecurrentCache& cache);   \
  void rnn_backward(CellType cell, const double* x, const double* wx, const double* wh,                  \
                    const RecurrentCache& cache, const double* dh_seq, double* dx, double* dwx,          \
                    double* dwh, double* db, std::size_t B, std::size_t T, std::size_t D, std::size_t H);

namespace ref {
INERTIA_NN_KERNEL_DECLS
}

namespace fast {
INERTIA_NN_KERNEL_DECLS
}

#undef INERTIA_NN_KERNEL_DECLS

}  // namespace inertia::nn
