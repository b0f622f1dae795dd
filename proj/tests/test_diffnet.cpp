#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"

#include "ambipose/diffnet.hpp"
#include "ambipose/errors.hpp"

using namespace ambipose;

namespace {

Network small_net(std::uint64_t seed, Activation last = Activation::Linear) {
  const std::vector<LayerSpec> spec{{5, Activation::Relu}, {4, Activation::Sigmoid}, {3, last}};
  return Network(3, spec, seed);
}

double loss_of(const Network& net, const Mat& X, const Mat& G) { return net.predict(X).cwiseProduct(G).sum(); }

}  // namespace

TEST_CASE("network construction and shapes") {
  const Network net = small_net(1);
  CHECK(net.input_dim() == 3);
  CHECK(net.output_dim() == 3);
  CHECK(net.num_parameters() == (3 * 5 + 5) + (5 * 4 + 4) + (4 * 3 + 3));
  CHECK(net.predict(Mat(Mat::Zero(3, 7))).cols() == 7);
  CHECK_THROWS_AS(net.predict(Mat(Mat::Zero(2, 1))), ShapeError);

  // Same seed, same parameters; different seed, different parameters.
  const Network same = small_net(1), other = small_net(2);
  CHECK(net.layer(0).W == same.layer(0).W);
  CHECK(net.layer(0).W != other.layer(0).W);
  CHECK(net.layer(2).b.isZero());

  std::vector<DenseLayer> bad(2);
  bad[0].W = Mat::Zero(4, 3);
  bad[0].b = Vec::Zero(4);
  bad[1].W = Mat::Zero(2, 5);
  bad[1].b = Vec::Zero(2);
  CHECK_THROWS_AS(Network{bad}, ShapeError);
}

TEST_CASE("initialization scale follows fan-in") {
  const std::vector<LayerSpec> spec{{400, Activation::Relu}};
  const Network net(300, spec, 9);
  const double limit = std::sqrt(6.0 / 300);
  CHECK(net.layer(0).W.maxCoeff() <= limit);
  CHECK(net.layer(0).W.minCoeff() >= -limit);
  // Uniform(-a, a) has variance a^2 / 3.
  const double var = net.layer(0).W.squaredNorm() / static_cast<double>(net.layer(0).W.size());
  CHECK(var == doctest::Approx(limit * limit / 3).epsilon(0.02));
}

TEST_CASE("forward matches predict") {
  const Network net = small_net(3);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  Mat X(3, 6);
  for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = n(rng);
  const auto fr = forward(net, X);
  CHECK((fr.y - net.predict(X)).norm() == 0.0);
  CHECK(fr.cache.inputs.size() == 3);
}

TEST_CASE("backward matches central differences") {
  Network net = small_net(5, Activation::Sigmoid);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n;
  Mat X(3, 4), G(3, 4);
  for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = n(rng);
  for (Eigen::Index i = 0; i < G.size(); ++i) G(i) = n(rng);

  const auto fr = forward(net, X);
  const auto br = backward(net, fr.cache, G);
  const double h = 1e-6;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    for (Eigen::Index i = 0; i < net.layer(l).W.size(); ++i) {
      Network p = net, m = net;
      p.mutable_layer(l).W(i) += h;
      m.mutable_layer(l).W(i) -= h;
      const double fd = (loss_of(p, X, G) - loss_of(m, X, G)) / (2 * h);
      CHECK(br.tape.layers[l].dW(i) == doctest::Approx(fd).epsilon(1e-5).scale(1e-3));
    }
    for (Eigen::Index i = 0; i < net.layer(l).b.size(); ++i) {
      Network p = net, m = net;
      p.mutable_layer(l).b(i) += h;
      m.mutable_layer(l).b(i) -= h;
      const double fd = (loss_of(p, X, G) - loss_of(m, X, G)) / (2 * h);
      CHECK(br.tape.layers[l].db(i) == doctest::Approx(fd).epsilon(1e-5).scale(1e-3));
    }
  }
  for (Eigen::Index i = 0; i < X.size(); ++i) {
    Mat Xp = X, Xm = X;
    Xp(i) += h;
    Xm(i) -= h;
    const double fd = (loss_of(net, Xp, G) - loss_of(net, Xm, G)) / (2 * h);
    CHECK(br.dx(i) == doctest::Approx(fd).epsilon(1e-5).scale(1e-3));
  }
}

TEST_CASE("stale or foreign cache is rejected") {
  Network net = small_net(7);
  const auto fr = forward(net, Mat(Mat::Ones(3, 2)));
  net.mutable_layer(0).b(0) += 1.0;
  CHECK_THROWS_AS(backward(net, fr.cache, Mat::Ones(3, 2)), ShapeError);

  const Network other = small_net(7);
  const auto fr2 = forward(other, Mat(Mat::Ones(3, 2)));
  CHECK_THROWS_AS(backward(net, fr2.cache, Mat::Ones(3, 2)), ShapeError);
  const auto fr3 = forward(net, Mat(Mat::Ones(3, 2)));
  CHECK_THROWS_AS(backward(net, fr3.cache, Mat::Ones(3, 5)), ShapeError);
}

TEST_CASE("gradient tape arithmetic") {
  const Network net = small_net(8);
  auto a = GradientTape::zeros_like(net);
  a.layers[0].dW.setConstant(2.0);
  auto b = a;
  b += a;
  CHECK(b.layers[0].dW(0, 0) == 4.0);
  b.scale(0.25);
  CHECK(b.layers[0].dW(1, 1) == 1.0);
  b.zero();
  CHECK(b.layers[0].dW.isZero());
}

TEST_CASE("adam first step moves each parameter by lr against the gradient sign") {
  Network net = small_net(10);
  const Network before = net;
  auto tape = GradientTape::zeros_like(net);
  tape.layers[0].dW.setConstant(0.5);
  tape.layers[1].db.setConstant(-3.0);
  auto st = AdamState::for_network(net, 1e-3);
  adam_step(net, tape, st);
  CHECK(st.step == 1);
  // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
  const double expected = 1e-3 * 0.5 / (0.5 + 1e-8);
  CHECK((before.layer(0).W - net.layer(0).W).cwiseAbs().maxCoeff() == doctest::Approx(expected));
  CHECK((net.layer(1).b - before.layer(1).b).minCoeff() == doctest::Approx(1e-3 * 3.0 / (3.0 + 1e-8)));
  CHECK(net.layer(2).W == before.layer(2).W);
}

TEST_CASE("adam matches a scalar reference over several steps") {
  // One-parameter network y = w x with explicit reference recursion.
  std::vector<DenseLayer> layers(1);
  layers[0].W = Mat::Constant(1, 1, 0.7);
  layers[0].b = Vec::Zero(1);
  Network net(layers);
  auto st = AdamState::for_network(net, 0.01, 0.1);
  double w = 0.7, m = 0, v = 0;
  const std::vector<double> grads{0.3, -0.2, 0.5, 0.1};
  for (std::size_t k = 0; k < grads.size(); ++k) {
    auto tape = GradientTape::zeros_like(net);
    tape.layers[0].dW(0, 0) = grads[k];
    tape.layers[0].db(0) = grads[k];
    adam_step(net, tape, st);
    const double g = grads[k] + 0.1 * w;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1 - std::pow(0.9, k + 1)), vh = v / (1 - std::pow(0.999, k + 1));
    w -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
  }
  CHECK(net.layer(0).W(0, 0) == doctest::Approx(w).epsilon(1e-12));
}

TEST_CASE("learning rate schedule") {
  CHECK(lr_schedule(0, 1e-4, 50) == 1e-4);
  CHECK(lr_schedule(49, 1e-4, 50) == 1e-4);
  CHECK(lr_schedule(50, 1e-4, 50) == doctest::Approx(0.8e-4));
  CHECK(lr_schedule(499, 1e-4, 50) == doctest::Approx(1e-4 * std::pow(0.8, 9)));
  CHECK(lr_schedule(5000, 1e-4, 50) == doctest::Approx(1e-4 * std::pow(0.8, 10)));
}

TEST_CASE("network checkpoint round trip is exact") {
  Network net = small_net(11);
  auto st = AdamState::for_network(net, 1e-3, 0.1);
  auto tape = GradientTape::zeros_like(net);
  tape.layers[2].dW.setConstant(0.25);
  adam_step(net, tape, st);

  std::stringstream ss;
  save_network(ss, net, &st);
  const std::string bytes = ss.str();
  CHECK(bytes.substr(0, 4) == "VAPR");
  const auto loaded = load_network(ss);
  REQUIRE(loaded.state.has_value());
  CHECK(loaded.net.layer(1).W == net.layer(1).W);
  CHECK(loaded.state->step == 1);
  std::stringstream again;
  save_network(again, loaded.net, &*loaded.state);
  CHECK(again.str() == bytes);

  std::stringstream truncated(bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(load_network(truncated), IoError);
  std::string corrupt = bytes;
  corrupt[0] = 'X';
  std::stringstream bad(corrupt);
  CHECK_THROWS_AS(load_network(bad), IoError);
}
