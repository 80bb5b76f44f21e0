#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "inertia/common/error.hpp"
#include "inertia/grid/ieee24.hpp"
#include "inertia/nn/checkpoint.hpp"
#include "inertia/nn/grad_check.hpp"
#include "inertia/nn/layers.hpp"
#include "inertia/nn/optim.hpp"

using namespace inertia;
using namespace inertia::nn;

namespace {

Tensor random_tensor(Shape s, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(s));
  Rng rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& v : t.data) v = u(rng);
  return t;
}

void randomize(Layer& l, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  for (auto* p : l.params())
    for (double& v : p->value.data) v = u(rng);
}

double max_diff(const Tensor& a, const Tensor& b) {
  REQUIRE(a.shape == b.shape);
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

GraphOperator random_graph(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::bernoulli_distribution coin(0.4);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = i + 1; j < a.cols(); ++j)
      if (coin(rng)) a(i, j) = a(j, i) = 1.0;
  return renormalized_adjacency(a);
}

// Both backends must agree on forward output and all gradients.
template <typename Make>
void check_backends(Make make, Shape in, std::uint64_t seed) {
  auto a = make();
  auto b = make();
  randomize(*a, seed);
  auto pa = a->params(), pb = b->params();
  for (std::size_t i = 0; i < pa.size(); ++i) pb[i]->value = pa[i]->value;
  a->set_backend(Backend::kReference);
  b->set_backend(Backend::kFast);
  const Tensor x = random_tensor(in, seed + 1);
  Tensor ya, yb, dxa, dxb;
  a->forward(x, ya);
  b->forward(x, yb);
  CHECK(max_diff(ya, yb) < 1e-12);
  const Tensor dy = random_tensor(ya.shape, seed + 2);
  a->backward(dy, dxa);
  b->backward(dy, dxb);
  CHECK(max_diff(dxa, dxb) < 1e-12);
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(max_diff(pa[i]->grad, pb[i]->grad) < 1e-12);
}

}  // namespace

TEST_CASE("conv1d examples") {
  Conv1d conv(1, 1, 3);
  conv.weight().value.data = {1, 0, 0};
  Tensor x({1, 1, 4});
  x.data = {1, 2, 3, 4};
  Tensor y;
  for (auto be : {Backend::kReference, Backend::kFast}) {
    conv.set_backend(be);
    conv.forward(x, y);
    CHECK(y.shape == Shape({1, 1, 2}));
    CHECK(y.data == Buffer{1, 2});
  }
  conv.weight().value.data = {1, 1, 1};
  conv.bias().value.data = {0.25};
  Tensor c({2, 1, 6}, 1.5);
  conv.forward(c, y);
  for (double v : y.data) CHECK(v == 4.75);
  CHECK_THROWS_AS(conv.forward(Tensor({1, 1, 2}), y), InvalidArgument);
  CHECK_THROWS_AS(conv.forward(Tensor({1, 2, 6}), y), InvalidArgument);
}

TEST_CASE("maxpool examples") {
  MaxPool1d pool;
  Tensor x({1, 1, 4});
  x.data = {1, 3, 2, 2};
  Tensor y, dx;
  pool.forward(x, y);
  CHECK(y.data == Buffer{3, 2});
  Tensor dy({1, 1, 2});
  dy.data = {1, 1};
  pool.backward(dy, dx);
  CHECK(dx.data == Buffer{0, 1, 1, 0});

  Tensor c({1, 2, 5}, 7.0);
  pool.forward(c, y);
  CHECK(y.shape == Shape({1, 2, 2}));
  Tensor g({1, 2, 2}, 1.0);
  pool.backward(g, dx);
  CHECK(dx.data == Buffer{1, 0, 1, 0, 0, 1, 0, 1, 0, 0});
  CHECK_THROWS_AS(pool.forward(Tensor({1, 1, 1}), y), InvalidArgument);
}

TEST_CASE("recurrent cell properties") {
  const std::size_t H = 4, D = 3;
  RecurrentParams p;
  p.wx = Eigen::MatrixXd::Zero(4 * H, D);
  p.wh = Eigen::MatrixXd::Zero(4 * H, H);
  p.b = Eigen::VectorXd::Zero(4 * H);
  LstmState s{Eigen::VectorXd::Zero(H), Eigen::VectorXd::Zero(H)};
  for (int t = 0; t < 5; ++t) {
    s = lstm_step(Eigen::VectorXd::Random(D) * 10.0, s, p);
    CHECK(s.h.cwiseAbs().maxCoeff() == 0.0);
  }
  LstmState warm{Eigen::VectorXd::Zero(H), Eigen::VectorXd::Constant(H, 2.0)};
  const auto next = lstm_step(Eigen::VectorXd::Ones(D), warm, p);
  CHECK(next.c(0) == doctest::Approx(1.0));
  CHECK(next.h(0) == doctest::Approx(0.5 * std::tanh(1.0)));

  Rng rng(5);
  std::normal_distribution<double> big(0.0, 20.0);
  for (auto cell : {CellType::kLstm, CellType::kMinimalGated}) {
    const auto G = static_cast<Eigen::Index>(gate_count(cell) * H);
    RecurrentParams q{cell, Eigen::MatrixXd(G, D), Eigen::MatrixXd(G, H), Eigen::VectorXd(G)};
    for (int trial = 0; trial < 20; ++trial) {
      for (Eigen::Index i = 0; i < q.wx.size(); ++i) q.wx.data()[i] = big(rng);
      for (Eigen::Index i = 0; i < q.wh.size(); ++i) q.wh.data()[i] = big(rng);
      for (Eigen::Index i = 0; i < q.b.size(); ++i) q.b(i) = big(rng);
      LstmState st{Eigen::VectorXd::Zero(H), Eigen::VectorXd::Zero(H)};
      for (int t = 0; t < 10; ++t) {
        Eigen::VectorXd x(D);
        for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = big(rng);
        st = lstm_step(x, st, q);
        CHECK(st.h.cwiseAbs().maxCoeff() <= 1.0);
      }
    }
  }

  // The batched layer agrees with repeated single steps.
  Recurrent layer(D, H);
  randomize(layer, 17);
  const Tensor x = random_tensor({1, 6, D}, 18);
  Tensor y;
  layer.forward(x, y);
  auto params = layer.params();
  RecurrentParams rp{CellType::kLstm, as_matrix(params[0]->value.ptr(), 4 * H, D),
                     as_matrix(params[1]->value.ptr(), 4 * H, H), ConstVecMap(params[2]->value.ptr(), 4 * H)};
  LstmState st{Eigen::VectorXd::Zero(H), Eigen::VectorXd::Zero(H)};
  for (std::size_t t = 0; t < 6; ++t) st = lstm_step(ConstVecMap(x.ptr() + t * D, D), st, rp);
  for (std::size_t j = 0; j < H; ++j) CHECK(y.data[j] == doctest::Approx(st.h(static_cast<Eigen::Index>(j))).epsilon(1e-12));
  CHECK_THROWS_AS(lstm_step(Eigen::VectorXd::Zero(D + 1), st, rp), InvalidArgument);
}

TEST_CASE("renormalized adjacency") {
  Eigen::MatrixXd two(2, 2);
  two << 0, 1, 1, 0;
  auto v = renormalized_adjacency(two).v;
  CHECK((v.array() - 0.5).abs().maxCoeff() < 1e-15);

  Eigen::MatrixXd iso = Eigen::MatrixXd::Zero(3, 3);
  iso(0, 1) = iso(1, 0) = 1;
  v = renormalized_adjacency(iso).v;
  CHECK(v(2, 2) == 1.0);
  CHECK(v(2, 0) == 0.0);
  CHECK(v(0, 2) == 0.0);

  const auto sys = grid::build_ieee24();
  const auto g = renormalized_adjacency(grid::bus_adjacency(sys)).v;
  CHECK((g - g.transpose()).cwiseAbs().maxCoeff() == 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  CHECK(es.eigenvalues().cwiseAbs().maxCoeff() <= 1.0 + 1e-9);

  Eigen::MatrixXd bad = two;
  bad(0, 1) = 0.5;
  CHECK_THROWS_AS(renormalized_adjacency(bad), InvalidArgument);
  bad = two;
  bad(1, 0) = 0;
  CHECK_THROWS_AS(renormalized_adjacency(bad), InvalidArgument);
  bad = two;
  bad(0, 0) = 1;
  CHECK_THROWS_AS(renormalized_adjacency(bad), InvalidArgument);
}

TEST_CASE("graph convolution") {
  const std::size_t N = 5, D = 4;
  GraphConv ident(GraphOperator{Eigen::MatrixXd::Identity(N, N)}, D, D);
  as_matrix(ident.weight().value.ptr(), D, D) = RowMat::Identity(static_cast<Eigen::Index>(D), static_cast<Eigen::Index>(D));
  const Tensor f = random_tensor({2, N, D}, 3, 0.0, 1.0);
  Tensor y;
  ident.forward(f, y);
  CHECK(y.data == f.data);

  // Permutation equivariance.
  const auto op = random_graph(6, 9);
  GraphConv layer(op, 3, 2);
  randomize(layer, 10);
  const Tensor x = random_tensor({1, 6, 3}, 11);
  Tensor y0;
  layer.forward(x, y0);
  const std::vector<int> perm{3, 0, 5, 1, 4, 2};
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(6, 6);
  for (int i = 0; i < 6; ++i) P(i, perm[i]) = 1.0;
  GraphConv permuted(GraphOperator{P * op.v * P.transpose()}, 3, 2);
  permuted.weight().value = layer.weight().value;
  permuted.bias().value = layer.bias().value;
  Tensor xp({1, 6, 3});
  for (int i = 0; i < 6; ++i)
    for (int d = 0; d < 3; ++d) xp.data[i * 3 + d] = x.data[perm[i] * 3 + d];
  Tensor yp;
  permuted.forward(xp, yp);
  for (int i = 0; i < 6; ++i)
    for (int d = 0; d < 2; ++d) CHECK(std::abs(yp.data[i * 2 + d] - y0.data[perm[i] * 2 + d]) < 1e-12);
  CHECK_THROWS_AS(layer.forward(Tensor({1, 5, 3}), y), InvalidArgument);
}

TEST_CASE("reference and fast kernels agree") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    check_backends([] { return std::make_unique<Dense>(7, 5); }, {4, 7}, s);
    check_backends([] { return std::make_unique<Conv1d>(3, 4, 3); }, {3, 3, 11}, s);
    check_backends([] { return std::make_unique<Recurrent>(3, 5); }, {3, 7, 3}, s);
    check_backends([] { return std::make_unique<Recurrent>(3, 5, CellType::kLstm, true); }, {2, 4, 3}, s);
    check_backends([] { return std::make_unique<Recurrent>(3, 5, CellType::kMinimalGated); }, {3, 7, 3}, s);
    check_backends([s] { return std::make_unique<GraphConv>(random_graph(6, s), 4, 3); }, {3, 6, 4}, s);
  }
}

TEST_CASE("layer gradients match finite differences") {
  GradCheckOptions opts;
  for (auto be : {Backend::kReference, Backend::kFast}) {
    for (std::uint64_t s = 0; s < 4; ++s) {
      std::vector<std::unique_ptr<Layer>> layers;
      layers.push_back(std::make_unique<Dense>(6, 4));
      layers.push_back(std::make_unique<Conv1d>(2, 3, 3));
      layers.push_back(std::make_unique<Recurrent>(3, 4));
      layers.push_back(std::make_unique<Recurrent>(3, 4, CellType::kMinimalGated));
      layers.push_back(std::make_unique<GraphConv>(random_graph(6, s), 3, 4));
      layers.push_back(std::make_unique<MaxPool1d>());
      const std::vector<Shape> shapes{{2, 6}, {2, 2, 9}, {2, 5, 3}, {2, 5, 3}, {2, 6, 3}, {2, 3, 8}};
      for (std::size_t i = 0; i < layers.size(); ++i) {
        layers[i]->set_backend(be);
        randomize(*layers[i], 100 + s);
        const auto r = grad_check_layer(*layers[i], random_tensor(shapes[i], 200 + s), 300 + s, opts);
        INFO(layers[i]->describe());
        CHECK(r.max_rel_error < 1e-6);
        CHECK(r.checked > 0);
      }
    }
  }
}

TEST_CASE("gradient checker behaviour") {
  Dense d(3, 2);
  randomize(d, 1);
  const auto r = grad_check_layer(d, random_tensor({2, 3}, 2), 3);
  CHECK(r.max_rel_error < 1e-8);
  CHECK(r.excluded == 0);

  Relu relu;
  Tensor x({1, 3});
  x.data = {0.0, 0.5, -0.5};
  const auto rr = grad_check_layer(relu, x, 4);
  CHECK(rr.excluded == 1);
  CHECK(rr.checked == 2);
  CHECK(rr.max_rel_error < 1e-9);
}

TEST_CASE("mse") {
  const std::vector<double> a{1, 2, 3};
  CHECK(mse(a, a) == 0.0);
  CHECK(mse(std::vector<double>{0, 0}, std::vector<double>{1, 1}) == 1.0);
  CHECK_THROWS_AS(mse(a, std::vector<double>{1, 2}), InvalidArgument);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 3);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> y(17), p(17);
    for (auto& v : y) v = n(rng);
    for (auto& v : p) v = n(rng);
    long double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += static_cast<long double>(y[i] - p[i]) * (y[i] - p[i]);
    CHECK(std::abs(mse(y, p) - static_cast<double>(s / 17)) < 1e-12);
  }
  std::vector<double> g(3);
  mse_grad(a, std::vector<double>{2, 2, 2}, g);
  CHECK(g[0] == doctest::Approx(2.0 / 3));
  CHECK(g[1] == 0.0);
}

TEST_CASE("gradient descent") {
  std::vector<double> w{1.0};
  CHECK(sgd_step(w, std::vector<double>{0.0}, 0.5));
  CHECK(w[0] == 1.0);
  CHECK(sgd_step(w, std::vector<double>{2.0}, 0.5));
  CHECK(w[0] == 0.0);
  CHECK_FALSE(sgd_step(w, std::vector<double>{std::nan("")}, 0.5));
  CHECK(w[0] == 0.0);

  double q = 0.0;
  for (int i = 0; i < 200; ++i) {
    std::vector<double> ww{q};
    sgd_step(ww, std::vector<double>{2.0 * (q - 3.0)}, 0.1);
    q = ww[0];
  }
  CHECK(std::abs(q - 3.0) < 1e-6);

  Dense d(2, 1);
  d.init(*std::make_unique<Rng>(3));
  const auto before = d.weight().value;
  d.weight().grad.fill(1.0);
  Sgd opt(0.9);
  CHECK(opt.step(d.params(), 0.0));
  CHECK(d.weight().value == before);
  d.weight().grad.data[0] = std::numeric_limits<double>::infinity();
  CHECK_FALSE(opt.step(d.params(), 0.1));
  CHECK(d.weight().value == before);
}

TEST_CASE("plateau schedule") {
  PlateauSchedule dec(0.1, 10.0);
  for (int e = 0; e < 300; ++e) CHECK(dec.observe(9.0 - 0.01 * e) == 0.1);

  PlateauSchedule flat(0.1, 1.0);
  for (int e = 1; e <= 49; ++e) CHECK(flat.observe(1.0) == 0.1);
  CHECK(flat.observe(1.0) == 0.05);
  for (int e = 51; e <= 150; ++e) flat.observe(1.0);
  CHECK(flat.lr() == doctest::Approx(0.1 / 8));
  CHECK(flat.reductions() == 3);

  PlateauSchedule tiny(1e-5, 1.0);
  for (int e = 0; e < 1000; ++e) tiny.observe(1.0);
  CHECK(tiny.lr() == 1e-6);

  PlateauSchedule reset(0.1, 1.0);
  for (int e = 0; e < 49; ++e) reset.observe(1.0);
  reset.observe(0.5);
  for (int e = 0; e < 49; ++e) reset.observe(0.5);
  CHECK(reset.lr() == 0.1);
}

TEST_CASE("sequential model and checkpoint") {
  Sequential m({2, 12});
  m.emplace<Conv1d>(2, 3, 3);
  m.emplace<MaxPool1d>();
  m.emplace<Transpose>();
  m.emplace<Recurrent>(3, 4);
  m.emplace<Dense>(4, 1);
  CHECK(m.output_shape() == Shape({1}));
  CHECK_THROWS_AS(m.emplace<Dense>(5, 1), InvalidArgument);
  m.init(42);
  Sequential m2({2, 12});
  m2.emplace<Conv1d>(2, 3, 3);
  m2.emplace<MaxPool1d>();
  m2.emplace<Transpose>();
  m2.emplace<Recurrent>(3, 4);
  m2.emplace<Dense>(4, 1);
  m2.init(42);
  auto p1 = m.params(), p2 = m2.params();
  for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1[i]->value == p2[i]->value);

  const auto r = grad_check_model(m, random_tensor({2, 2, 12}, 5), 6);
  CHECK(r.max_rel_error < 1e-5);

  Checkpoint ck;
  ck.set("family", "test");
  ck.set("epoch", "3");
  for (auto* p : m.params()) ck.tensors.emplace_back(p->name, p->value);
  std::stringstream ss;
  write_checkpoint(ss, ck);
  const std::string bytes = ss.str();
  std::istringstream in(bytes);
  const auto back = read_checkpoint(in);
  CHECK(back.get("family") == "test");
  CHECK(back.tensors.size() == ck.tensors.size());
  for (std::size_t i = 0; i < ck.tensors.size(); ++i) CHECK(back.tensors[i].second == ck.tensors[i].second);
  CHECK_THROWS_AS((void)back.get("missing"), DataError);

  std::string corrupt = bytes;
  corrupt[corrupt.size() - 3] ^= 0x01;
  std::istringstream c1(corrupt);
  CHECK_THROWS_WITH_AS(read_checkpoint(c1), doctest::Contains("checksum"), DataError);
  std::istringstream c2(bytes.substr(0, bytes.size() - 5));
  CHECK_THROWS_WITH_AS(read_checkpoint(c2), doctest::Contains("truncated"), DataError);
  std::istringstream c3("");
  CHECK_THROWS_AS(read_checkpoint(c3), DataError);
}
