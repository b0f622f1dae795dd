#pragma once

// Small dense-network stack with reverse-mode gradients and Adam.
// Batches are column-major: one sample per column.

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace ambipose {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class Activation : std::uint8_t { Linear = 0, Relu = 1, Sigmoid = 2 };

std::string_view to_string(Activation a);

struct DenseLayer {
  Mat W;  // out x in
  Vec b;  // out
  Activation activation = Activation::Linear;

  Eigen::Index in_dim() const { return W.cols(); }
  Eigen::Index out_dim() const { return W.rows(); }
};

struct LayerSpec {
  Eigen::Index out = 0;
  Activation activation = Activation::Linear;
};

class Network {
 public:
  Network() = default;
  /// Builds layers with He-uniform (relu) or Xavier-uniform (linear/sigmoid)
  /// weights and zero biases.
  Network(Eigen::Index input_dim, std::span<const LayerSpec> layers, std::uint64_t seed);
  /// Adopts explicit layers; throws ShapeError if they do not chain.
  explicit Network(std::vector<DenseLayer> layers);

  Eigen::Index input_dim() const;
  Eigen::Index output_dim() const;
  std::size_t num_layers() const { return layers_.size(); }
  std::size_t num_parameters() const;

  const DenseLayer& layer(std::size_t i) const { return layers_[i]; }
  /// Mutable access invalidates outstanding forward caches.
  DenseLayer& mutable_layer(std::size_t i);
  const std::vector<DenseLayer>& layers() const { return layers_; }

  /// Bumped whenever parameters may have changed.
  std::uint64_t version() const { return version_; }
  void touch() { ++version_; }

  /// Inference-only pass over a batch.
  Mat predict(const Mat& X) const;
  Vec predict(const Vec& x) const;

 private:
  void check_chain() const;

  std::vector<DenseLayer> layers_;
  std::uint64_t version_ = 0;
};

/// Per-layer inputs and pre-activations recorded by forward().
struct ForwardCache {
  const Network* net = nullptr;
  std::uint64_t version = 0;
  std::vector<Mat> inputs;
  std::vector<Mat> preactivations;
};

struct ForwardResult {
  Mat y;
  ForwardCache cache;
};

ForwardResult forward(const Network& net, const Mat& X);
ForwardResult forward(const Network& net, const Vec& x);

struct LayerGradient {
  Mat dW;
  Vec db;
};

/// Gradient buffers shaped like a network's parameters.
struct GradientTape {
  std::vector<LayerGradient> layers;

  static GradientTape zeros_like(const Network& net);
  void zero();
  void scale(double s);
  GradientTape& operator+=(const GradientTape& other);
};

/// Accumulates dL/dparams into `tape` and returns dL/dX. Throws ShapeError if
/// the cache is stale or does not belong to `net`.
Mat backward(const Network& net, const ForwardCache& cache, const Mat& dY, GradientTape& tape);

struct BackwardResult {
  GradientTape tape;
  Mat dx;
};
BackwardResult backward(const Network& net, const ForwardCache& cache, const Mat& dY);

struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Coupled L2: g += weight_decay * W on weights only.
  double weight_decay = 0.0;
  std::uint64_t step = 0;
  std::vector<LayerGradient> m;
  std::vector<LayerGradient> v;

  static AdamState for_network(const Network& net, double lr, double weight_decay = 0.0);
};

void adam_step(Network& net, const GradientTape& tape, AdamState& state);

/// lr0 * 0.8^min(floor(epoch / n_decay), 10)
double lr_schedule(int epoch, double lr0, int n_decay);

// Checkpoint encoding. All integers and reals are little-endian.
inline constexpr char kCheckpointMagic[4] = {'V', 'A', 'P', 'R'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_network_body(std::ostream& out, const Network& net);
Network read_network_body(std::istream& in);
void write_adam_body(std::ostream& out, const AdamState& state);
AdamState read_adam_body(std::istream& in, const Network& net);

/// Standalone network checkpoint: magic, version, architecture, parameters,
/// then an optional optimizer state.
void save_network(std::ostream& out, const Network& net, const AdamState* state = nullptr);
struct LoadedNetwork {
  Network net;
  std::optional<AdamState> state;
};
LoadedNetwork load_network(std::istream& in);

}  // namespace ambipose
