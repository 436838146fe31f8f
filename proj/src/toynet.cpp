#include "gstrument/toynet.hpp"

#include <cmath>

#include "gstrument/errors.hpp"

namespace gstrument::toy {
namespace {

constexpr double kLeak = 0.2;

double softplus(double a) { return a > 0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a)); }
double sigmoid(double a) {
  if (a >= 0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

Eigen::MatrixXd activate(Activation act, const Eigen::MatrixXd& z) {
  switch (act) {
    case Activation::Identity: return z;
    case Activation::Relu: return z.cwiseMax(0.0);
    case Activation::LeakyRelu: return z.unaryExpr([](double a) { return a > 0 ? a : kLeak * a; });
    case Activation::Tanh: return z.array().tanh().matrix();
    case Activation::Sigmoid: return z.unaryExpr([](double a) { return sigmoid(a); });
    case Activation::Softplus: return z.unaryExpr([](double a) { return softplus(a); });
  }
  return z;
}

// Derivative of the activation evaluated at the pre-activation z.
Eigen::MatrixXd derivative(Activation act, const Eigen::MatrixXd& z) {
  switch (act) {
    case Activation::Identity: return Eigen::MatrixXd::Ones(z.rows(), z.cols());
    case Activation::Relu: return z.unaryExpr([](double a) { return a > 0 ? 1.0 : 0.0; });
    case Activation::LeakyRelu: return z.unaryExpr([](double a) { return a > 0 ? 1.0 : kLeak; });
    case Activation::Tanh: return (1.0 - z.array().tanh().square()).matrix();
    case Activation::Sigmoid:
      return z.unaryExpr([](double a) {
        const double s = sigmoid(a);
        return s * (1.0 - s);
      });
    case Activation::Softplus: return z.unaryExpr([](double a) { return sigmoid(a); });
  }
  return z;
}

}  // namespace

Activation parse_activation(const std::string& name) {
  if (name == "identity") return Activation::Identity;
  if (name == "relu") return Activation::Relu;
  if (name == "leaky_relu") return Activation::LeakyRelu;
  if (name == "tanh") return Activation::Tanh;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "softplus") return Activation::Softplus;
  throw InvalidArgument("unknown activation '" + name + "'");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::LeakyRelu: return "leaky_relu";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Softplus: return "softplus";
  }
  return "?";
}

void Gradients::set_zero() {
  for (auto& w : weight) w.setZero();
  for (auto& b : bias) b.setZero();
}

Eigen::VectorXd Gradients::flat() const {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l < weight.size(); ++l) n += weight[l].size() + bias[l].size();
  Eigen::VectorXd out(n);
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < weight.size(); ++l) {
    out.segment(at, weight[l].size()) = weight[l].reshaped();
    at += weight[l].size();
    out.segment(at, bias[l].size()) = bias[l];
    at += bias[l].size();
  }
  return out;
}

ToyNet::ToyNet(const std::vector<std::size_t>& sizes, const std::vector<Activation>& activations,
               std::mt19937_64& rng, bool zero_last) {
  require(sizes.size() >= 2, "a network needs at least input and output sizes");
  require(activations.size() == sizes.size() - 1, "need one activation per layer");
  for (auto s : sizes) require(s >= 1, "layer sizes must be positive");
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    Layer layer;
    const auto in = static_cast<Eigen::Index>(sizes[l]);
    const auto out = static_cast<Eigen::Index>(sizes[l + 1]);
    layer.weight = Eigen::MatrixXd::Zero(out, in);
    layer.bias = Eigen::VectorXd::Zero(out);
    layer.activation = activations[l];
    const bool last = l + 2 == sizes.size();
    if (!(last && zero_last)) {
      const double bound = std::sqrt(6.0 / static_cast<double>(in));
      std::uniform_real_distribution<double> u(-bound, bound);
      for (Eigen::Index c = 0; c < in; ++c)
        for (Eigen::Index r = 0; r < out; ++r) layer.weight(r, c) = u(rng);
      // Keep the initial output scale moderate for tanh/sigmoid heads.
      if (last) layer.weight *= 0.5;
    }
    layers_.push_back(std::move(layer));
  }
}

std::size_t ToyNet::input_dim() const {
  return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.front().weight.cols());
}
std::size_t ToyNet::output_dim() const {
  return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.back().weight.rows());
}

std::size_t ToyNet::num_params() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

std::vector<std::size_t> ToyNet::sizes() const {
  std::vector<std::size_t> s;
  if (layers_.empty()) return s;
  s.push_back(input_dim());
  for (const auto& l : layers_) s.push_back(static_cast<std::size_t>(l.weight.rows()));
  return s;
}

Eigen::MatrixXd ToyNet::forward(const Eigen::MatrixXd& x, ForwardCache* cache) const {
  require(!layers_.empty(), "forward on an empty network");
  require(static_cast<std::size_t>(x.rows()) == input_dim(),
          "input has " + std::to_string(x.rows()) + " rows, network expects " + std::to_string(input_dim()));
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  Eigen::MatrixXd a = x;
  for (const auto& layer : layers_) {
    Eigen::MatrixXd z = layer.weight * a;
    z.colwise() += layer.bias;
    Eigen::MatrixXd next = activate(layer.activation, z);
    if (cache) {
      cache->inputs.push_back(std::move(a));
      cache->pre.push_back(std::move(z));
    }
    a = std::move(next);
  }
  return a;
}

Eigen::VectorXd ToyNet::forward(const Eigen::VectorXd& x) const {
  return forward(Eigen::MatrixXd(x)).col(0);
}

Eigen::MatrixXd ToyNet::penultimate(const Eigen::MatrixXd& x) const {
  ForwardCache cache;
  forward(x, &cache);
  return cache.inputs.back();
}

Eigen::MatrixXd ToyNet::backward(const ForwardCache& cache, const Eigen::MatrixXd& grad_out,
                                 Gradients* grads) const {
  require(cache.pre.size() == layers_.size(), "forward cache does not match the network");
  Eigen::MatrixXd g = grad_out;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& layer = layers_[l];
    require(g.rows() == layer.weight.rows() && g.cols() == cache.pre[l].cols(), "gradient shape mismatch");
    const Eigen::MatrixXd dz = g.cwiseProduct(derivative(layer.activation, cache.pre[l]));
    if (grads) {
      grads->weight[l].noalias() += dz * cache.inputs[l].transpose();
      grads->bias[l] += dz.rowwise().sum();
    }
    g = layer.weight.transpose() * dz;
  }
  return g;
}

Gradients ToyNet::zero_gradients() const {
  Gradients g;
  for (const auto& l : layers_) {
    g.weight.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
    g.bias.push_back(Eigen::VectorXd::Zero(l.bias.size()));
  }
  return g;
}

Eigen::VectorXd ToyNet::flat_params() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(num_params()));
  Eigen::Index at = 0;
  for (const auto& l : layers_) {
    out.segment(at, l.weight.size()) = l.weight.reshaped();
    at += l.weight.size();
    out.segment(at, l.bias.size()) = l.bias;
    at += l.bias.size();
  }
  return out;
}

void ToyNet::set_flat_params(const Eigen::VectorXd& p) {
  require(static_cast<std::size_t>(p.size()) == num_params(), "parameter vector size mismatch");
  Eigen::Index at = 0;
  for (auto& l : layers_) {
    l.weight.reshaped() = p.segment(at, l.weight.size());
    at += l.weight.size();
    l.bias = p.segment(at, l.bias.size());
    at += l.bias.size();
  }
}

bool ToyNet::all_finite() const {
  for (const auto& l : layers_)
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  return true;
}

void AdamConfig::validate() const {
  require(lr > 0.0, "learning rate must be positive");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "Adam betas must lie in [0, 1)");
  require(eps > 0.0, "Adam epsilon must be positive");
}

Adam::Adam(const ToyNet& net, AdamConfig cfg) : cfg_(cfg), m_(net.zero_gradients()), v_(net.zero_gradients()) {
  cfg_.validate();
}

void Adam::step(ToyNet& net, const Gradients& g) {
  require(g.weight.size() == net.num_layers() && m_.weight.size() == net.num_layers(),
          "optimizer state does not match the network");
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  auto update = [&](auto& param, auto& m, auto& v, const auto& grad) {
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * grad;
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * grad.cwiseAbs2();
    param.array() -= cfg_.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg_.eps);
  };
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    auto& layer = net.layers()[l];
    update(layer.weight, m_.weight[l], v_.weight[l], g.weight[l]);
    update(layer.bias, m_.bias[l], v_.bias[l], g.bias[l]);
  }
}

void Adam::set_learning_rate(double lr) {
  require(lr > 0.0 && std::isfinite(lr), "learning rate must be positive");
  cfg_.lr = lr;
}

}  // namespace gstrument::toy
