#include "ambipose/diffnet.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "ambipose/errors.hpp"
#include "binary_io.hpp"

namespace ambipose {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Linear:
      return "linear";
    case Activation::Relu:
      return "relu";
    case Activation::Sigmoid:
      return "sigmoid";
  }
  return "unknown";
}

namespace {

void apply_activation(Activation a, Mat& z) {
  switch (a) {
    case Activation::Linear:
      break;
    case Activation::Relu:
      z = z.cwiseMax(0.0);
      break;
    case Activation::Sigmoid:
      z = (1.0 + (-z.array()).exp()).inverse().matrix();
      break;
  }
}

// dL/dz given dL/da and the pre-activation z.
void activation_backward(Activation a, const Mat& z, Mat& grad) {
  switch (a) {
    case Activation::Linear:
      break;
    case Activation::Relu:
      grad = (z.array() > 0.0).select(grad, 0.0);
      break;
    case Activation::Sigmoid: {
      const Eigen::ArrayXXd s = (1.0 + (-z.array()).exp()).inverse();
      grad = (grad.array() * s * (1.0 - s)).matrix();
      break;
    }
  }
}

}  // namespace

Network::Network(Eigen::Index input_dim, std::span<const LayerSpec> specs, std::uint64_t seed) {
  if (input_dim < 1 || specs.empty()) throw ShapeError("network needs input_dim >= 1 and a layer");
  std::mt19937_64 rng(seed);
  Eigen::Index fan_in = input_dim;
  for (const auto& spec : specs) {
    if (spec.out < 1) throw ShapeError("layer width must be >= 1");
    const double limit = spec.activation == Activation::Relu
                             ? std::sqrt(6.0 / static_cast<double>(fan_in))
                             : std::sqrt(6.0 / static_cast<double>(fan_in + spec.out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer layer;
    layer.W.resize(spec.out, fan_in);
    // Row-major fill order so the draw sequence is independent of storage.
    for (Eigen::Index r = 0; r < spec.out; ++r)
      for (Eigen::Index c = 0; c < fan_in; ++c) layer.W(r, c) = dist(rng);
    layer.b = Vec::Zero(spec.out);
    layer.activation = spec.activation;
    layers_.push_back(std::move(layer));
    fan_in = spec.out;
  }
}

Network::Network(std::vector<DenseLayer> layers) : layers_(std::move(layers)) { check_chain(); }

void Network::check_chain() const {
  if (layers_.empty()) throw ShapeError("network has no layers");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.b.size() != l.W.rows()) throw ShapeError("bias length does not match layer output");
    if (i > 0 && l.W.cols() != layers_[i - 1].W.rows()) {
      throw ShapeError("layer " + std::to_string(i) + " input does not chain");
    }
  }
}

Eigen::Index Network::input_dim() const { return layers_.empty() ? 0 : layers_.front().in_dim(); }
Eigen::Index Network::output_dim() const { return layers_.empty() ? 0 : layers_.back().out_dim(); }

std::size_t Network::num_parameters() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.W.size() + l.b.size());
  return n;
}

DenseLayer& Network::mutable_layer(std::size_t i) {
  ++version_;
  return layers_.at(i);
}

Mat Network::predict(const Mat& X) const {
  if (X.rows() != input_dim()) throw ShapeError("input dimension mismatch");
  Mat a = X;
  for (const auto& l : layers_) {
    Mat z = l.W * a;
    z.colwise() += l.b;
    apply_activation(l.activation, z);
    a = std::move(z);
  }
  return a;
}

Vec Network::predict(const Vec& x) const { return predict(Mat(x)).col(0); }

ForwardResult forward(const Network& net, const Mat& X) {
  if (X.rows() != net.input_dim()) {
    throw ShapeError("forward: input has " + std::to_string(X.rows()) + " rows, network expects " +
                     std::to_string(net.input_dim()));
  }
  ForwardResult out;
  out.cache.net = &net;
  out.cache.version = net.version();
  out.cache.inputs.reserve(net.num_layers());
  out.cache.preactivations.reserve(net.num_layers());
  Mat a = X;
  for (const auto& l : net.layers()) {
    Mat z = l.W * a;
    z.colwise() += l.b;
    out.cache.inputs.push_back(std::move(a));
    out.cache.preactivations.push_back(z);
    apply_activation(l.activation, z);
    a = std::move(z);
  }
  out.y = std::move(a);
  return out;
}

ForwardResult forward(const Network& net, const Vec& x) { return forward(net, Mat(x)); }

GradientTape GradientTape::zeros_like(const Network& net) {
  GradientTape t;
  t.layers.reserve(net.num_layers());
  for (const auto& l : net.layers()) {
    t.layers.push_back({Mat::Zero(l.W.rows(), l.W.cols()), Vec::Zero(l.b.size())});
  }
  return t;
}

void GradientTape::zero() {
  for (auto& l : layers) {
    l.dW.setZero();
    l.db.setZero();
  }
}

void GradientTape::scale(double s) {
  for (auto& l : layers) {
    l.dW *= s;
    l.db *= s;
  }
}

GradientTape& GradientTape::operator+=(const GradientTape& other) {
  if (other.layers.size() != layers.size()) throw ShapeError("gradient tape shape mismatch");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].dW += other.layers[i].dW;
    layers[i].db += other.layers[i].db;
  }
  return *this;
}

Mat backward(const Network& net, const ForwardCache& cache, const Mat& dY, GradientTape& tape) {
  if (cache.net != &net || cache.version != net.version() ||
      cache.inputs.size() != net.num_layers() || cache.preactivations.size() != net.num_layers()) {
    throw ShapeError("backward: stale or mismatched forward cache");
  }
  if (tape.layers.size() != net.num_layers()) throw ShapeError("backward: tape shape mismatch");
  const Eigen::Index batch = cache.inputs.front().cols();
  if (dY.rows() != net.output_dim() || dY.cols() != batch) {
    throw ShapeError("backward: output gradient shape mismatch");
  }
  Mat grad = dY;
  for (std::size_t k = net.num_layers(); k-- > 0;) {
    const auto& l = net.layer(k);
    activation_backward(l.activation, cache.preactivations[k], grad);
    tape.layers[k].dW.noalias() += grad * cache.inputs[k].transpose();
    tape.layers[k].db.noalias() += grad.rowwise().sum();
    grad = l.W.transpose() * grad;
  }
  return grad;
}

BackwardResult backward(const Network& net, const ForwardCache& cache, const Mat& dY) {
  BackwardResult r{GradientTape::zeros_like(net), Mat()};
  r.dx = backward(net, cache, dY, r.tape);
  return r;
}

AdamState AdamState::for_network(const Network& net, double lr, double weight_decay) {
  AdamState s;
  s.lr = lr;
  s.weight_decay = weight_decay;
  s.m = GradientTape::zeros_like(net).layers;
  s.v = s.m;
  return s;
}

void adam_step(Network& net, const GradientTape& tape, AdamState& s) {
  if (tape.layers.size() != net.num_layers() || s.m.size() != net.num_layers() ||
      s.v.size() != net.num_layers()) {
    throw ShapeError("adam_step: shape mismatch between network, tape and state");
  }
  ++s.step;
  const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  const double step_size = s.lr / bc1;
  const double sqrt_bc2 = std::sqrt(bc2);

  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    m = s.beta1 * m + (1.0 - s.beta1) * grad;
    v = s.beta2 * v + (1.0 - s.beta2) * grad.cwiseProduct(grad);
    param.array() -= step_size * m.array() / (v.array().sqrt() / sqrt_bc2 + s.eps);
  };

  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    DenseLayer& layer = net.mutable_layer(i);
    const auto& g = tape.layers[i];
    if (s.weight_decay > 0.0) {
      const Mat gw = g.dW + s.weight_decay * layer.W;
      update(layer.W, gw, s.m[i].dW, s.v[i].dW);
    } else {
      update(layer.W, g.dW, s.m[i].dW, s.v[i].dW);
    }
    update(layer.b, g.db, s.m[i].db, s.v[i].db);
  }
}

double lr_schedule(int epoch, double lr0, int n_decay) {
  if (epoch < 0 || n_decay < 1) throw ValidationError("lr_schedule: epoch >= 0 and n_decay >= 1");
  const int occurrences = std::min(epoch / n_decay, 10);
  return lr0 * std::pow(0.8, occurrences);
}

// ---------------------------------------------------------------------------
// Checkpoints

void write_network_body(std::ostream& out, const Network& net) {
  using namespace binio;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.num_layers()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.input_dim()));
  for (const auto& l : net.layers()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(l.out_dim()));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(l.activation));
  }
  for (const auto& l : net.layers()) {
    for (Eigen::Index r = 0; r < l.W.rows(); ++r)
      for (Eigen::Index c = 0; c < l.W.cols(); ++c) put<double>(out, l.W(r, c));
    for (Eigen::Index r = 0; r < l.b.size(); ++r) put<double>(out, l.b(r));
  }
}

Network read_network_body(std::istream& in) {
  using namespace binio;
  const auto n_layers = get<std::uint32_t>(in);
  const auto input_dim = get<std::uint32_t>(in);
  if (n_layers == 0 || n_layers > 4096 || input_dim == 0 || input_dim > (1u << 24)) {
    throw IoError("checkpoint: implausible architecture");
  }
  std::vector<DenseLayer> layers(n_layers);
  Eigen::Index fan_in = input_dim;
  for (auto& l : layers) {
    const auto out_dim = get<std::uint32_t>(in);
    const auto act = get<std::uint8_t>(in);
    if (out_dim == 0 || out_dim > (1u << 24) || act > 2) throw IoError("checkpoint: bad layer");
    l.W.resize(out_dim, fan_in);
    l.b.resize(out_dim);
    l.activation = static_cast<Activation>(act);
    fan_in = out_dim;
  }
  for (auto& l : layers) {
    for (Eigen::Index r = 0; r < l.W.rows(); ++r)
      for (Eigen::Index c = 0; c < l.W.cols(); ++c) l.W(r, c) = get<double>(in);
    for (Eigen::Index r = 0; r < l.b.size(); ++r) l.b(r) = get<double>(in);
  }
  return Network(std::move(layers));
}

namespace {

void write_moments(std::ostream& out, const std::vector<LayerGradient>& buf) {
  for (const auto& l : buf) {
    for (Eigen::Index r = 0; r < l.dW.rows(); ++r)
      for (Eigen::Index c = 0; c < l.dW.cols(); ++c) binio::put<double>(out, l.dW(r, c));
    for (Eigen::Index r = 0; r < l.db.size(); ++r) binio::put<double>(out, l.db(r));
  }
}

void read_moments(std::istream& in, std::vector<LayerGradient>& buf) {
  for (auto& l : buf) {
    for (Eigen::Index r = 0; r < l.dW.rows(); ++r)
      for (Eigen::Index c = 0; c < l.dW.cols(); ++c) l.dW(r, c) = binio::get<double>(in);
    for (Eigen::Index r = 0; r < l.db.size(); ++r) l.db(r) = binio::get<double>(in);
  }
}

}  // namespace

void write_adam_body(std::ostream& out, const AdamState& s) {
  using namespace binio;
  put<std::uint64_t>(out, s.step);
  put<double>(out, s.lr);
  put<double>(out, s.beta1);
  put<double>(out, s.beta2);
  put<double>(out, s.eps);
  put<double>(out, s.weight_decay);
  write_moments(out, s.m);
  write_moments(out, s.v);
}

AdamState read_adam_body(std::istream& in, const Network& net) {
  using namespace binio;
  AdamState s = AdamState::for_network(net, 1.0);
  s.step = get<std::uint64_t>(in);
  s.lr = get<double>(in);
  s.beta1 = get<double>(in);
  s.beta2 = get<double>(in);
  s.eps = get<double>(in);
  s.weight_decay = get<double>(in);
  read_moments(in, s.m);
  read_moments(in, s.v);
  return s;
}

void save_network(std::ostream& out, const Network& net, const AdamState* state) {
  binio::put_tag(out, kCheckpointMagic);
  binio::put<std::uint32_t>(out, kCheckpointVersion);
  write_network_body(out, net);
  binio::put<std::uint8_t>(out, state != nullptr ? 1 : 0);
  if (state != nullptr) write_adam_body(out, *state);
}

LoadedNetwork load_network(std::istream& in) {
  binio::expect_tag(in, kCheckpointMagic, "VAPR");
  const auto version = binio::get<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  LoadedNetwork out{read_network_body(in), std::nullopt};
  if (binio::get<std::uint8_t>(in) != 0) out.state = read_adam_body(in, out.net);
  return out;
}

}  // namespace ambipose
