#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace gstrument::toy {

enum class Activation { Identity, Relu, LeakyRelu, Tanh, Sigmoid, Softplus };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

struct Layer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
  Activation activation = Activation::Identity;
};

/// Per-layer parameter gradients, shaped like the network.
struct Gradients {
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::VectorXd> bias;

  void set_zero();
  Eigen::VectorXd flat() const;
};

/// Activations kept by forward() for backward().
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;  // input to each layer
  std::vector<Eigen::MatrixXd> pre;     // affine output before activation
};

/// Small fully connected network. Batches are column-major: one sample per
/// column.
class ToyNet {
 public:
  ToyNet() = default;
  /// sizes = {in, hidden..., out}; one activation per affine layer.
  /// He-style uniform init; `zero_last` zeroes the final layer.
  ToyNet(const std::vector<std::size_t>& sizes, const std::vector<Activation>& activations,
         std::mt19937_64& rng, bool zero_last = false);

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t num_layers() const { return layers_.size(); }
  std::size_t num_params() const;
  std::vector<std::size_t> sizes() const;

  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, ForwardCache* cache = nullptr) const;
  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;

  /// Activations entering the final layer (the penultimate representation).
  Eigen::MatrixXd penultimate(const Eigen::MatrixXd& x) const;

  /// Backpropagates dL/d(output) through the cached pass. Parameter
  /// gradients are accumulated into `grads` when non-null; returns
  /// dL/d(input).
  Eigen::MatrixXd backward(const ForwardCache& cache, const Eigen::MatrixXd& grad_out,
                           Gradients* grads) const;

  Gradients zero_gradients() const;

  Eigen::VectorXd flat_params() const;
  void set_flat_params(const Eigen::VectorXd& p);
  bool all_finite() const;

 private:
  std::vector<Layer> layers_;
};

struct AdamConfig {
  double lr = 2.5e-3;
  double beta1 = 0.0;
  double beta2 = 0.99;
  double eps = 1e-8;

  void validate() const;
};

/// Adam state for one network.
class Adam {
 public:
  Adam() = default;
  Adam(const ToyNet& net, AdamConfig cfg);

  void step(ToyNet& net, const Gradients& g);
  std::uint64_t steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  void set_learning_rate(double lr);

 private:
  AdamConfig cfg_;
  Gradients m_, v_;
  std::uint64_t t_ = 0;
};

}  // namespace gstrument::toy
