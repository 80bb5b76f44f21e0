#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "inertia/common/rng.hpp"
#include "inertia/nn/kernels.hpp"
#include "inertia/nn/tensor.hpp"

namespace inertia::nn {

struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor velocity;  // optimizer state

  explicit Param(std::string n = {}, Shape s = {}) : name(std::move(n)), value(s), grad(s), velocity(s) {}
};

/// Batched layer. Tensors carry the batch as their leading dimension;
/// `output_shape` works on per-sample shapes.
class Layer {
 public:
  virtual ~Layer() = default;
  [[nodiscard]] virtual std::string kind() const = 0;
  [[nodiscard]] virtual Shape output_shape(const Shape& in) const = 0;
  virtual void forward(const Tensor& x, Tensor& y) = 0;
  /// Requires a preceding forward on the same batch. Parameter gradients are
  /// accumulated; `dx` is overwritten.
  virtual void backward(const Tensor& dy, Tensor& dx) = 0;
  virtual std::vector<Param*> params() { return {}; }
  virtual void init(Rng& /*rng*/) {}
  /// One-line description with hyperparameters, stable across versions.
  [[nodiscard]] virtual std::string describe() const { return kind(); }

  void set_backend(Backend b) { backend_ = b; }
  [[nodiscard]] Backend backend() const { return backend_; }

 protected:
  Backend backend_ = Backend::kFast;
};

class Dense : public Layer {
 public:
  Dense(std::size_t in, std::size_t out);
  [[nodiscard]] std::string kind() const override { return "dense"; }
  [[nodiscard]] Shape output_shape(const Shape& in) const override;
  void forward(const Tensor& x, Tensor& y) override;
  void backward(const Tensor& dy, Tensor& dx) override;
  std::vector<Param*> params() override { return {&w_, &b_}; }
  void init(Rng& rng) override;
  [[nodiscard]] std::string describe() const override;
  Param& weight() { return w_; }
  Param& bias() { return b_; }

 private:
  std::size_t in_, out_;
  Param w_, b_;  // w [out][in]
  Tensor x_;
};

/// Valid (unpadded) stride-1 cross-correlation over [C][L].
class Conv1d : public Layer {
 public:
  Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel);
  [[nodiscard]] std::string kind() const override { return "conv1d"; }
  [[nodiscard]] Shape output_shape(const Shape& in) const override;
  void forward(const Tensor& x, Tensor& y) override;
  void backward(const Tensor& dy, Tensor& dx) override;
  std::vector<Param*> params() override { return {&w_, &b_}; }
  void init(Rng& rng) override;
  [[nodiscard]] std::string describe() const override;
  Param& weight() { return w_; }
  Param& bias() { return b_; }

 private:
  std::size_t cin_, cout_, k_;
  Param w_, b_;  // w [cout][cin][k]
  Tensor x_;
};

/// Non-overlapping max over pairs along the last axis of [C][L]; a trailing
/// odd element is dropped. Ties route the gradient to the first element.
class MaxPool1d : public Layer {
 public:
  explicit MaxPool1d(std::size_t width = 2);
  [[nodiscard]] std::string kind() const override { return "maxpool1d"; }
  [[nodiscard]] Shape output_shape(const Shape& in) const override;
  void forward(const Tensor& x, Tensor& y) override;
  void backward(const Tensor& dy, Tensor& dx) override;
  [[nodiscard]] std::string describe() const override;

 private:
  std::size_t width_;
  Shape in_shape_;
  std::vector<std::size_t> argmax_;
};

class Relu : public Layer {
 public:
  [[nodiscard]] std::string kind() const override { return "relu"; }
  [[nodiscard]] Shape output_shape(const Shape& in) const override { return in; }
  void forward(const Tensor& x, Tensor& y) override;
  void backward(const Tensor& dy, Tensor& dx) override;

 private:
  Tensor x_;
};

/// Reinterprets each sample as a different shape with the same element count.
class Reshape : public Layer {
 public:
  explicit Reshape(Shape target) : target_(std::move(target)) {}
  [[nodiscard]] std::string kind() const override { return "reshape"; }
  [[nodiscard]] Shape output_shape(const Shape& in) const override;
  void forward(const Tensor& x, Tensor& y) override;
  void backward(const Tensor& dy, Tensor& dx) override;
  [[nodiscard]] std::string describe() const override;

 private:
  Shape target_;
  Shape in_shape_;
};

/// [A][C] -> [C][A] per sample.
class Transpose : public Layer {
 public:
  [[nodiscard]] std::string kind() const override { return "transpose"; }
  [[nodiscard]] Shape output_shape(const Shape& in) const override;
  void forward(const Tensor& x, Tensor& y) override;
  void backward(const Tensor& dy, Tensor& dx) override;

 private:
  Shape in_shape_;
};

/// Recurrent layer over [T][D] sequences, zero initial state. Emits the last
/// hidden state [H] (or the full sequence [T][H]).
class Recurrent : public Layer {
 public:
  Recurrent(std::size_t input, std::size_t units, CellType cell = CellType::kLstm, bool return_sequences = false);
  [[nodiscard]] std::string kind() const override { return cell_ == CellType::kLstm ? "lstm" : "mgu"; }
  [[nodiscard]] Shape output_shape(const Shape& in) const override;
  void forward(const Tensor& x, Tensor& y) override;
  void backward(const Tensor& dy, Tensor& dx) override;
  std::vector<Param*> params() override { return {&wx_, &wh_, &b_}; }
  void init(Rng& rng) override;
  [[nodiscard]] std::string describe() const override;

 private:
  std::size_t d_, h_;
  CellType cell_;
  bool seq_;
  Param wx_, wh_, b_;  // [G*H][D], [G*H][H], [G*H]
  Tensor x_;
  RecurrentCache cache_;
};

/// Symmetric renormalized adjacency D~^-1/2 (A + I) D~^-1/2.
struct GraphOperator {
  Eigen::MatrixXd v;
};

/// Validates that `a` is symmetric, binary, zero-diagonal.
GraphOperator renormalized_adjacency(const Eigen::MatrixXd& a);
GraphOperator renormalized_adjacency(std::size_t n, std::span<const std::pair<int, int>> edges);

/// relu(V F W + b) over node features [N][Din].
class GraphConv : public Layer {
 public:
  GraphConv(GraphOperator op, std::size_t in, std::size_t out, bool relu = true);
  [[nodiscard]] std::string kind() const override { return "gcn"; }
  [[nodiscard]] Shape output_shape(const Shape& in) const override;
  void forward(const Tensor& x, Tensor& y) override;
  void backward(const Tensor& dy, Tensor& dx) override;
  std::vector<Param*> params() override { return {&w_, &b_}; }
  void init(Rng& rng) override;
  [[nodiscard]] std::string describe() const override;
  [[nodiscard]] const GraphOperator& graph() const { return op_; }
  Param& weight() { return w_; }
  Param& bias() { return b_; }

 private:
  GraphOperator op_;
  Buffer v_row_major_;
  std::size_t n_, in_, out_;
  bool relu_;
  Param w_, b_;  // w [in][out]
  Tensor x_, z_;
};

/// Mean over the node axis: [N][D] -> [D].
class MeanReadout : public Layer {
 public:
  [[nodiscard]] std::string kind() const override { return "mean_readout"; }
  [[nodiscard]] Shape output_shape(const Shape& in) const override;
  void forward(const Tensor& x, Tensor& y) override;
  void backward(const Tensor& dy, Tensor& dx) override;

 private:
  Shape in_shape_;
};

/// Ordered stack of layers with a fixed per-sample input shape.
class Sequential {
 public:
  explicit Sequential(Shape input_shape) : input_shape_(std::move(input_shape)) {}

  Layer& add(std::unique_ptr<Layer> layer);
  template <typename L, typename... Args>
  L& emplace(Args&&... args) {
    return static_cast<L&>(add(std::make_unique<L>(std::forward<Args>(args)...)));
  }

  /// x: [B, input_shape...] -> [B, output_shape...]
  const Tensor& forward(const Tensor& x);
  /// Backpropagates dL/dy of the last forward; returns dL/dx.
  const Tensor& backward(const Tensor& dy);

  void init(std::uint64_t seed);
  void zero_grad();
  void set_backend(Backend b);
  std::vector<Param*> params();
  [[nodiscard]] std::size_t n_params();
  [[nodiscard]] const Shape& input_shape() const { return input_shape_; }
  [[nodiscard]] Shape output_shape() const;
  [[nodiscard]] std::size_t size() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_.at(i); }
  [[nodiscard]] std::string describe() const;

 private:
  Shape input_shape_;
  std::vector<std::unique_ptr<Layer>> layers_;
  std::vector<Tensor> acts_;
  std::vector<Tensor> grads_;
};

/// Single recurrent step on one sample, for inspection and tests.
struct LstmState {
  Eigen::VectorXd h, c;
};
struct RecurrentParams {
  CellType cell = CellType::kLstm;
  Eigen::MatrixXd wx, wh;  // [G*H][D], [G*H][H]
  Eigen::VectorXd b;
};
LstmState lstm_step(const Eigen::VectorXd& x, const LstmState& state, const RecurrentParams& p);

double mse(std::span<const double> y, std::span<const double> y_hat);
/// dL/dy_hat of the mean squared error.
void mse_grad(std::span<const double> y, std::span<const double> y_hat, std::span<double> grad);

}  // namespace inertia::nn
