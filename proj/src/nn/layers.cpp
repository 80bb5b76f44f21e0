#include "inertia/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "inertia/common/error.hpp"

namespace inertia::nn {
namespace {

void xavier(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-limit, limit);
  for (double& v : t.data) v = u(rng);
}

void check_input(const Tensor& x, const Shape& per_sample, const char* who) {
  Shape expect{x.shape.empty() ? 0 : x.shape[0]};
  expect.insert(expect.end(), per_sample.begin(), per_sample.end());
  if (x.shape.size() != expect.size() || !std::equal(x.shape.begin() + 1, x.shape.end(), expect.begin() + 1))
    throw InvalidArgument(std::string(who) + ": expected per-sample shape " + shape_string(per_sample) +
                          ", got " + shape_string(x.shape));
}

Shape batched(std::size_t b, const Shape& s) {
  Shape out{b};
  out.insert(out.end(), s.begin(), s.end());
  return out;
}

Shape per_sample(const Tensor& x) { return Shape(x.shape.begin() + 1, x.shape.end()); }

}  // namespace

// ---------------------------------------------------------------- Dense

Dense::Dense(std::size_t in, std::size_t out)
    : in_(in), out_(out), w_("w", {out, in}), b_("b", {out}) {
  require(in > 0 && out > 0, "dense: sizes must be positive");
}

Shape Dense::output_shape(const Shape& in) const {
  require(in.size() == 1 && in[0] == in_, "dense: expected input [" + std::to_string(in_) + "], got " + shape_string(in));
  return {out_};
}

void Dense::forward(const Tensor& x, Tensor& y) {
  check_input(x, {in_}, "dense");
  x_ = x;
  const std::size_t B = x.dim(0);
  y.resize({B, out_});
  if (backend_ == Backend::kFast)
    fast::dense_forward(x.ptr(), w_.value.ptr(), b_.value.ptr(), y.ptr(), B, in_, out_);
  else
    ref::dense_forward(x.ptr(), w_.value.ptr(), b_.value.ptr(), y.ptr(), B, in_, out_);
}

void Dense::backward(const Tensor& dy, Tensor& dx) {
  const std::size_t B = x_.dim(0);
  require(dy.shape == Shape({B, out_}), "dense: gradient shape mismatch");
  dx.resize(x_.shape);
  if (backend_ == Backend::kFast)
    fast::dense_backward(x_.ptr(), w_.value.ptr(), dy.ptr(), dx.ptr(), w_.grad.ptr(), b_.grad.ptr(), B, in_, out_);
  else
    ref::dense_backward(x_.ptr(), w_.value.ptr(), dy.ptr(), dx.ptr(), w_.grad.ptr(), b_.grad.ptr(), B, in_, out_);
}

void Dense::init(Rng& rng) {
  xavier(w_.value, in_, out_, rng);
  b_.value.fill(0.0);
}

std::string Dense::describe() const { return "dense in=" + std::to_string(in_) + " out=" + std::to_string(out_); }

// ---------------------------------------------------------------- Conv1d

Conv1d::Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel)
    : cin_(in_channels), cout_(out_channels), k_(kernel), w_("w", {out_channels, in_channels, kernel}),
      b_("b", {out_channels}) {
  require(cin_ > 0 && cout_ > 0 && k_ > 0, "conv1d: sizes must be positive");
}

Shape Conv1d::output_shape(const Shape& in) const {
  require(in.size() == 2 && in[0] == cin_, "conv1d: expected [" + std::to_string(cin_) + " x L], got " + shape_string(in));
  require(in[1] >= k_, "conv1d: kernel " + std::to_string(k_) + " longer than input length " + std::to_string(in[1]));
  return {cout_, in[1] - k_ + 1};
}

void Conv1d::forward(const Tensor& x, Tensor& y) {
  require(x.rank() == 3, "conv1d: expected a [B x C x L] batch, got " + shape_string(x.shape));
  const Shape out = output_shape(per_sample(x));
  x_ = x;
  const std::size_t B = x.dim(0), L = x.dim(2);
  y.resize(batched(B, out));
  if (backend_ == Backend::kFast)
    fast::conv1d_forward(x.ptr(), w_.value.ptr(), b_.value.ptr(), y.ptr(), B, cin_, L, cout_, k_);
  else
    ref::conv1d_forward(x.ptr(), w_.value.ptr(), b_.value.ptr(), y.ptr(), B, cin_, L, cout_, k_);
}

void Conv1d::backward(const Tensor& dy, Tensor& dx) {
  const std::size_t B = x_.dim(0), L = x_.dim(2);
  require(dy.shape == Shape({B, cout_, L - k_ + 1}), "conv1d: gradient shape mismatch");
  dx.resize(x_.shape);
  if (backend_ == Backend::kFast)
    fast::conv1d_backward(x_.ptr(), w_.value.ptr(), dy.ptr(), dx.ptr(), w_.grad.ptr(), b_.grad.ptr(), B, cin_, L,
                          cout_, k_);
  else
    ref::conv1d_backward(x_.ptr(), w_.value.ptr(), dy.ptr(), dx.ptr(), w_.grad.ptr(), b_.grad.ptr(), B, cin_, L,
                         cout_, k_);
}

void Conv1d::init(Rng& rng) {
  xavier(w_.value, cin_ * k_, cout_ * k_, rng);
  b_.value.fill(0.0);
}

std::string Conv1d::describe() const {
  return "conv1d in=" + std::to_string(cin_) + " out=" + std::to_string(cout_) + " k=" + std::to_string(k_);
}

// ---------------------------------------------------------------- MaxPool1d

MaxPool1d::MaxPool1d(std::size_t width) : width_(width) { require(width >= 2, "maxpool1d: width must be >= 2"); }

Shape MaxPool1d::output_shape(const Shape& in) const {
  require(in.size() == 2, "maxpool1d: expected [C x L], got " + shape_string(in));
  require(in[1] >= width_, "maxpool1d: input length " + std::to_string(in[1]) + " shorter than the pool width");
  return {in[0], in[1] / width_};
}

void MaxPool1d::forward(const Tensor& x, Tensor& y) {
  require(x.rank() == 3, "maxpool1d: expected a [B x C x L] batch");
  const Shape out = output_shape(per_sample(x));
  in_shape_ = x.shape;
  const std::size_t rows = x.dim(0) * x.dim(1), L = x.dim(2), Lo = out[1];
  y.resize(batched(x.dim(0), out));
  argmax_.resize(rows * Lo);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* src = x.ptr() + r * L;
    for (std::size_t t = 0; t < Lo; ++t) {
      std::size_t best = t * width_;
      for (std::size_t j = 1; j < width_; ++j)
        if (src[t * width_ + j] > src[best]) best = t * width_ + j;
      argmax_[r * Lo + t] = best;
      y.data[r * Lo + t] = src[best];
    }
  }
}

void MaxPool1d::backward(const Tensor& dy, Tensor& dx) {
  dx.resize(in_shape_);
  dx.fill(0.0);
  const std::size_t L = in_shape_[2];
  const std::size_t Lo = L / width_;
  const std::size_t rows = in_shape_[0] * in_shape_[1];
  require(dy.size() == rows * Lo, "maxpool1d: gradient shape mismatch");
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t t = 0; t < Lo; ++t) dx.data[r * L + argmax_[r * Lo + t]] += dy.data[r * Lo + t];
}

std::string MaxPool1d::describe() const { return "maxpool1d width=" + std::to_string(width_); }

// ---------------------------------------------------------------- Relu

void Relu::forward(const Tensor& x, Tensor& y) {
  x_ = x;
  y.resize(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) y.data[i] = x.data[i] > 0.0 ? x.data[i] : 0.0;
}

void Relu::backward(const Tensor& dy, Tensor& dx) {
  require(dy.size() == x_.size(), "relu: gradient shape mismatch");
  dx.resize(x_.shape);
  for (std::size_t i = 0; i < dy.size(); ++i) dx.data[i] = x_.data[i] > 0.0 ? dy.data[i] : 0.0;
}

// ---------------------------------------------------------------- Reshape / Transpose

Shape Reshape::output_shape(const Shape& in) const {
  require(shape_size(in) == shape_size(target_), "reshape: " + shape_string(in) + " -> " + shape_string(target_));
  return target_;
}

void Reshape::forward(const Tensor& x, Tensor& y) {
  const Shape out = output_shape(per_sample(x));
  in_shape_ = x.shape;
  y = x;
  y.reshape(batched(x.dim(0), out));
}

void Reshape::backward(const Tensor& dy, Tensor& dx) {
  dx = dy;
  dx.reshape(in_shape_);
}

std::string Reshape::describe() const { return "reshape to=" + shape_string(target_); }

Shape Transpose::output_shape(const Shape& in) const {
  require(in.size() == 2, "transpose: expected a rank-2 sample, got " + shape_string(in));
  return {in[1], in[0]};
}

void Transpose::forward(const Tensor& x, Tensor& y) {
  const Shape out = output_shape(per_sample(x));
  in_shape_ = x.shape;
  const std::size_t B = x.dim(0), A = x.dim(1), C = x.dim(2);
  y.resize(batched(B, out));
  for (std::size_t n = 0; n < B; ++n)
    as_matrix(y.ptr() + n * A * C, C, A) = as_matrix(x.ptr() + n * A * C, A, C).transpose();
}

void Transpose::backward(const Tensor& dy, Tensor& dx) {
  const std::size_t B = in_shape_[0], A = in_shape_[1], C = in_shape_[2];
  require(dy.size() == B * A * C, "transpose: gradient shape mismatch");
  dx.resize(in_shape_);
  for (std::size_t n = 0; n < B; ++n)
    as_matrix(dx.ptr() + n * A * C, A, C) = as_matrix(dy.ptr() + n * A * C, C, A).transpose();
}

// ---------------------------------------------------------------- Recurrent

Recurrent::Recurrent(std::size_t input, std::size_t units, CellType cell, bool return_sequences)
    : d_(input), h_(units), cell_(cell), seq_(return_sequences),
      wx_("wx", {gate_count(cell) * units, input}), wh_("wh", {gate_count(cell) * units, units}),
      b_("b", {gate_count(cell) * units}) {
  require(d_ > 0 && h_ > 0, "recurrent: sizes must be positive");
}

Shape Recurrent::output_shape(const Shape& in) const {
  require(in.size() == 2 && in[1] == d_ && in[0] >= 1,
          "recurrent: expected [T x " + std::to_string(d_) + "], got " + shape_string(in));
  return seq_ ? Shape{in[0], h_} : Shape{h_};
}

void Recurrent::forward(const Tensor& x, Tensor& y) {
  require(x.rank() == 3, "recurrent: expected a [B x T x D] batch");
  const Shape out = output_shape(per_sample(x));
  x_ = x;
  const std::size_t B = x.dim(0), T = x.dim(1);
  if (backend_ == Backend::kFast)
    fast::rnn_forward(cell_, x.ptr(), wx_.value.ptr(), wh_.value.ptr(), b_.value.ptr(), B, T, d_, h_, cache_);
  else
    ref::rnn_forward(cell_, x.ptr(), wx_.value.ptr(), wh_.value.ptr(), b_.value.ptr(), B, T, d_, h_, cache_);
  y.resize(batched(B, out));
  for (std::size_t n = 0; n < B; ++n) {
    if (seq_) {
      std::copy_n(cache_.h.data() + (n * (T + 1) + 1) * h_, T * h_, y.ptr() + n * T * h_);
    } else {
      std::copy_n(cache_.h.data() + (n * (T + 1) + T) * h_, h_, y.ptr() + n * h_);
    }
  }
}

void Recurrent::backward(const Tensor& dy, Tensor& dx) {
  const std::size_t B = x_.dim(0), T = x_.dim(1);
  Buffer dh_seq(B * T * h_, 0.0);
  if (seq_) {
    require(dy.size() == dh_seq.size(), "recurrent: gradient shape mismatch");
    dh_seq = dy.data;
  } else {
    require(dy.size() == B * h_, "recurrent: gradient shape mismatch");
    for (std::size_t n = 0; n < B; ++n) std::copy_n(dy.ptr() + n * h_, h_, dh_seq.data() + (n * T + T - 1) * h_);
  }
  dx.resize(x_.shape);
  if (backend_ == Backend::kFast)
    fast::rnn_backward(cell_, x_.ptr(), wx_.value.ptr(), wh_.value.ptr(), cache_, dh_seq.data(), dx.ptr(),
                       wx_.grad.ptr(), wh_.grad.ptr(), b_.grad.ptr(), B, T, d_, h_);
  else
    ref::rnn_backward(cell_, x_.ptr(), wx_.value.ptr(), wh_.value.ptr(), cache_, dh_seq.data(), dx.ptr(),
                      wx_.grad.ptr(), wh_.grad.ptr(), b_.grad.ptr(), B, T, d_, h_);
}

void Recurrent::init(Rng& rng) {
  const double limit = 1.0 / std::sqrt(static_cast<double>(h_));
  std::uniform_real_distribution<double> u(-limit, limit);
  for (auto* p : {&wx_, &wh_, &b_})
    for (double& v : p->value.data) v = u(rng);
}

std::string Recurrent::describe() const {
  return kind() + " in=" + std::to_string(d_) + " units=" + std::to_string(h_) + " seq=" + (seq_ ? "1" : "0");
}

// ---------------------------------------------------------------- Graph

GraphOperator renormalized_adjacency(const Eigen::MatrixXd& a) {
  require(a.rows() == a.cols() && a.rows() > 0, "renormalized_adjacency: matrix must be square and nonempty");
  const Eigen::Index n = a.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    require(a(i, i) == 0.0, "renormalized_adjacency: diagonal must be zero");
    for (Eigen::Index j = 0; j < n; ++j) {
      require(a(i, j) == 0.0 || a(i, j) == 1.0, "renormalized_adjacency: entries must be 0 or 1");
      require(a(i, j) == a(j, i), "renormalized_adjacency: matrix must be symmetric");
    }
  }
  const Eigen::MatrixXd at = a + Eigen::MatrixXd::Identity(n, n);
  const Eigen::VectorXd inv_sqrt = at.rowwise().sum().cwiseSqrt().cwiseInverse();
  return {inv_sqrt.asDiagonal() * at * inv_sqrt.asDiagonal()};
}

GraphOperator renormalized_adjacency(std::size_t n, std::span<const std::pair<int, int>> edges) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (auto [i, j] : edges) {
    require(i >= 0 && j >= 0 && static_cast<std::size_t>(i) < n && static_cast<std::size_t>(j) < n && i != j,
            "renormalized_adjacency: bad edge");
    a(i, j) = a(j, i) = 1.0;
  }
  return renormalized_adjacency(a);
}

GraphConv::GraphConv(GraphOperator op, std::size_t in, std::size_t out, bool relu)
    : op_(std::move(op)), n_(static_cast<std::size_t>(op_.v.rows())), in_(in), out_(out), relu_(relu),
      w_("w", {in, out}), b_("b", {out}) {
  require(op_.v.rows() == op_.v.cols() && n_ > 0, "gcn: graph operator must be square");
  require(in > 0 && out > 0, "gcn: sizes must be positive");
  v_row_major_.resize(n_ * n_);
  as_matrix(v_row_major_.data(), n_, n_) = op_.v;
}

Shape GraphConv::output_shape(const Shape& in) const {
  require(in.size() == 2 && in[0] == n_ && in[1] == in_, "gcn: expected [" + std::to_string(n_) + " x " +
                                                             std::to_string(in_) + "], got " + shape_string(in));
  return {n_, out_};
}

void GraphConv::forward(const Tensor& x, Tensor& y) {
  require(x.rank() == 3, "gcn: expected a [B x N x D] batch");
  const Shape out = output_shape(per_sample(x));
  x_ = x;
  const std::size_t B = x.dim(0);
  z_.resize(batched(B, out));
  if (backend_ == Backend::kFast)
    fast::gcn_forward(v_row_major_.data(), x.ptr(), w_.value.ptr(), b_.value.ptr(), z_.ptr(), B, n_, in_, out_);
  else
    ref::gcn_forward(v_row_major_.data(), x.ptr(), w_.value.ptr(), b_.value.ptr(), z_.ptr(), B, n_, in_, out_);
  y.resize(z_.shape);
  for (std::size_t i = 0; i < z_.size(); ++i) y.data[i] = (!relu_ || z_.data[i] > 0.0) ? z_.data[i] : 0.0;
}

void GraphConv::backward(const Tensor& dy, Tensor& dx) {
  require(dy.size() == z_.size(), "gcn: gradient shape mismatch");
  Tensor dz(z_.shape);
  for (std::size_t i = 0; i < dz.size(); ++i) dz.data[i] = (!relu_ || z_.data[i] > 0.0) ? dy.data[i] : 0.0;
  const std::size_t B = x_.dim(0);
  dx.resize(x_.shape);
  if (backend_ == Backend::kFast)
    fast::gcn_backward(v_row_major_.data(), x_.ptr(), w_.value.ptr(), dz.ptr(), dx.ptr(), w_.grad.ptr(),
                       b_.grad.ptr(), B, n_, in_, out_);
  else
    ref::gcn_backward(v_row_major_.data(), x_.ptr(), w_.value.ptr(), dz.ptr(), dx.ptr(), w_.grad.ptr(),
                      b_.grad.ptr(), B, n_, in_, out_);
}

void GraphConv::init(Rng& rng) {
  xavier(w_.value, in_, out_, rng);
  b_.value.fill(0.0);
}

std::string GraphConv::describe() const {
  return "gcn nodes=" + std::to_string(n_) + " in=" + std::to_string(in_) + " out=" + std::to_string(out_) +
         " relu=" + (relu_ ? "1" : "0");
}

Shape MeanReadout::output_shape(const Shape& in) const {
  require(in.size() == 2 && in[0] > 0, "mean_readout: expected [N x D], got " + shape_string(in));
  return {in[1]};
}

void MeanReadout::forward(const Tensor& x, Tensor& y) {
  const Shape out = output_shape(per_sample(x));
  in_shape_ = x.shape;
  const std::size_t B = x.dim(0), N = x.dim(1), D = x.dim(2);
  y.resize(batched(B, out));
  for (std::size_t n = 0; n < B; ++n)
    as_matrix(y.ptr() + n * D, 1, D) = as_matrix(x.ptr() + n * N * D, N, D).colwise().mean();
}

void MeanReadout::backward(const Tensor& dy, Tensor& dx) {
  const std::size_t B = in_shape_[0], N = in_shape_[1], D = in_shape_[2];
  require(dy.size() == B * D, "mean_readout: gradient shape mismatch");
  dx.resize(in_shape_);
  const double scale = 1.0 / static_cast<double>(N);
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t d = 0; d < D; ++d) dx.data[(n * N + i) * D + d] = dy.data[n * D + d] * scale;
}

// ---------------------------------------------------------------- Sequential

Layer& Sequential::add(std::unique_ptr<Layer> layer) {
  (void)layer->output_shape(output_shape());
  layers_.push_back(std::move(layer));
  return *layers_.back();
}

Shape Sequential::output_shape() const {
  Shape s = input_shape_;
  for (const auto& l : layers_) s = l->output_shape(s);
  return s;
}

const Tensor& Sequential::forward(const Tensor& x) {
  check_input(x, input_shape_, "model input");
  require(!layers_.empty(), "model has no layers");
  acts_.resize(layers_.size());
  const Tensor* cur = &x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i]->forward(*cur, acts_[i]);
    cur = &acts_[i];
  }
  return acts_.back();
}

const Tensor& Sequential::backward(const Tensor& dy) {
  require(acts_.size() == layers_.size(), "backward called before forward");
  grads_.resize(layers_.size());
  const Tensor* cur = &dy;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    layers_[i]->backward(*cur, grads_[i]);
    cur = &grads_[i];
  }
  return grads_.front();
}

void Sequential::init(std::uint64_t seed) {
  Rng rng(seed);
  for (auto& l : layers_) l->init(rng);
  zero_grad();
}

void Sequential::zero_grad() {
  for (auto* p : params()) p->grad.fill(0.0);
}

void Sequential::set_backend(Backend b) {
  for (auto& l : layers_) l->set_backend(b);
}

std::vector<Param*> Sequential::params() {
  std::vector<Param*> out;
  for (auto& l : layers_)
    for (auto* p : l->params()) out.push_back(p);
  return out;
}

std::size_t Sequential::n_params() {
  std::size_t n = 0;
  for (auto* p : params()) n += p->value.size();
  return n;
}

std::string Sequential::describe() const {
  std::ostringstream os;
  os << "input " << shape_string(input_shape_) << '\n';
  for (const auto& l : layers_) os << l->describe() << '\n';
  return os.str();
}

// ---------------------------------------------------------------- free functions

LstmState lstm_step(const Eigen::VectorXd& x, const LstmState& s, const RecurrentParams& p) {
  const Eigen::Index H = s.h.size();
  const auto G = static_cast<Eigen::Index>(gate_count(p.cell)) * H;
  require(p.wx.rows() == G && p.wx.cols() == x.size() && p.wh.rows() == G && p.wh.cols() == H && p.b.size() == G,
          "lstm_step: dimension mismatch");
  require(p.cell == CellType::kMinimalGated || s.c.size() == H, "lstm_step: cell state size mismatch");
  const Eigen::VectorXd pre = p.wx * x + p.wh * s.h + p.b;
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  LstmState out;
  if (p.cell == CellType::kLstm) {
    const Eigen::VectorXd i = pre.segment(0, H).unaryExpr(sig);
    const Eigen::VectorXd f = pre.segment(H, H).unaryExpr(sig);
    const Eigen::VectorXd g = pre.segment(2 * H, H).array().tanh();
    const Eigen::VectorXd o = pre.segment(3 * H, H).unaryExpr(sig);
    out.c = f.cwiseProduct(s.c) + i.cwiseProduct(g);
    out.h = o.cwiseProduct(out.c.array().tanh().matrix());
  } else {
    const Eigen::VectorXd z = pre.segment(0, H).unaryExpr(sig);
    const Eigen::VectorXd cand = pre.segment(H, H).array().tanh();
    out.h = (1.0 - z.array()).matrix().cwiseProduct(s.h) + z.cwiseProduct(cand);
    out.c = s.c;
  }
  return out;
}

double mse(std::span<const double> y, std::span<const double> y_hat) {
  require(y.size() == y_hat.size(), "mse: length mismatch");
  require(!y.empty(), "mse: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
  return s / static_cast<double>(y.size());
}

void mse_grad(std::span<const double> y, std::span<const double> y_hat, std::span<double> grad) {
  require(y.size() == y_hat.size() && grad.size() == y.size() && !y.empty(), "mse_grad: length mismatch");
  const double scale = 2.0 / static_cast<double>(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) grad[i] = scale * (y_hat[i] - y[i]);
}

}  // namespace inertia::nn
