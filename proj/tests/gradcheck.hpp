#pragma once

// Finite-difference checks of every analytic gradient in the toy model and
// the inversion objective. Each function draws one random instance from
// `seed` and returns the worst relative error (oracle::rel_error) found.

#include <algorithm>
#include <random>
#include <vector>

#include "gstrument/extractor.hpp"
#include "gstrument/gan.hpp"
#include "gstrument/losses.hpp"
#include "gstrument/signal.hpp"
#include "gstrument/toynet.hpp"
#include "oracles.hpp"

namespace gradcheck {

using gstrument::toy::Activation;
using gstrument::toy::ToyNet;

inline Eigen::MatrixXd gauss(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = g(rng);
  return m;
}

inline ToyNet random_net(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  static const Activation kinds[] = {Activation::Identity, Activation::Relu,    Activation::LeakyRelu,
                                     Activation::Tanh,     Activation::Sigmoid, Activation::Softplus};
  std::uniform_int_distribution<int> pick(0, 5);
  std::uniform_int_distribution<std::size_t> width(2, 6);
  std::uniform_int_distribution<int> depth(1, 3);
  std::vector<std::size_t> sizes{in};
  std::vector<Activation> acts;
  const int hidden = depth(rng);
  for (int l = 0; l < hidden; ++l) {
    sizes.push_back(width(rng));
    acts.push_back(kinds[pick(rng)]);
  }
  sizes.push_back(out);
  acts.push_back(kinds[pick(rng)]);
  ToyNet net(sizes, acts, rng);
  // Non-zero biases so kinks are not all hit at the same place.
  for (auto& l : net.layers()) l.bias = gauss(l.bias.size(), 1, rng, 0.3);
  return net;
}

// Scalar loss of a network's parameters, evaluated on a copy.
template <class Loss>
double at_params(const ToyNet& net, const Eigen::VectorXd& p, Loss&& loss) {
  ToyNet copy = net;
  copy.set_flat_params(p);
  return loss(copy);
}

/// loss = sum(R .* out) + 0.5 ||out||^2 on a random net and batch; checks
/// both parameter and input gradients.
inline double toynet_error(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> dim(1, 5);
  const std::size_t in = dim(rng), out = dim(rng);
  const ToyNet net = random_net(in, out, rng);
  const Eigen::MatrixXd x = gauss(static_cast<Eigen::Index>(in), 3, rng);
  const Eigen::MatrixXd r = gauss(static_cast<Eigen::Index>(out), 3, rng);
  auto loss_of = [&](const ToyNet& n, const Eigen::MatrixXd& input) {
    const Eigen::MatrixXd y = n.forward(input);
    return (r.array() * y.array()).sum() + 0.5 * y.squaredNorm();
  };

  gstrument::toy::ForwardCache cache;
  const Eigen::MatrixXd y = net.forward(x, &cache);
  auto grads = net.zero_gradients();
  const Eigen::MatrixXd dx = net.backward(cache, r + y, &grads);

  const auto fd_p = oracle::fd_gradient(
      [&](const Eigen::VectorXd& p) { return at_params(net, p, [&](const ToyNet& n) { return loss_of(n, x); }); },
      net.flat_params());
  const Eigen::VectorXd x_flat = x.reshaped();
  const auto fd_x = oracle::fd_gradient(
      [&](const Eigen::VectorXd& v) { return loss_of(net, v.reshaped(x.rows(), x.cols())); }, x_flat);
  return std::max(oracle::rel_error(grads.flat(), fd_p), oracle::rel_error(dx.reshaped(), fd_x));
}

/// Cross entropy and KL(uniform || softmax) against their logits.
inline double logit_losses_error(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> classes(2, 6);
  const int c = classes(rng);
  const Eigen::MatrixXd logits = gauss(c, 4, rng, 2.0);
  std::uniform_int_distribution<int> label(0, c - 1);
  std::vector<int> labels;
  for (int i = 0; i < 4; ++i) labels.push_back(label(rng));
  const Eigen::VectorXd flat = logits.reshaped();
  auto as = [&](const Eigen::VectorXd& v) { return Eigen::MatrixXd(v.reshaped(c, 4)); };
  const auto ce = gstrument::toy::cross_entropy(logits, labels);
  const auto kl = gstrument::toy::kl_uniform(logits);
  const auto fd_ce =
      oracle::fd_gradient([&](const Eigen::VectorXd& v) { return gstrument::toy::cross_entropy(as(v), labels).value; },
                          flat);
  const auto fd_kl =
      oracle::fd_gradient([&](const Eigen::VectorXd& v) { return gstrument::toy::kl_uniform(as(v)).value; }, flat);
  return std::max(oracle::rel_error(ce.grad.reshaped(), fd_ce), oracle::rel_error(kl.grad.reshaped(), fd_kl));
}

/// Discriminator loss w.r.t. D parameters and generator loss w.r.t. G
/// parameters, through a small conditioned GAN.
inline double gan_error(std::uint64_t seed) {
  using namespace gstrument::toy;
  std::mt19937_64 rng(seed);
  GanConfig cfg;
  cfg.seed = seed;
  cfg.hidden = 5;
  cfg.noise_dim = 3;
  const std::size_t data_dim = 4, feat = 2;
  const int pitches = 3;
  GanModel m = init_gan(data_dim, pitches, feat, cfg);
  for (auto& l : m.discriminator.layers()) {
    l.weight = gauss(l.weight.rows(), l.weight.cols(), rng, 0.5);
    l.bias = gauss(l.bias.size(), 1, rng, 0.3);
  }
  const GeneratorLoss mode = seed % 2 == 0 ? GeneratorLoss::NonSaturating : GeneratorLoss::Minimax;
  const int n = 3;
  std::uniform_int_distribution<int> pp(0, pitches - 1);
  std::vector<int> p;
  for (int i = 0; i < n; ++i) p.push_back(pp(rng));
  const Eigen::MatrixXd h = gauss(feat, n, rng);
  const Eigen::MatrixXd real = gauss(data_dim, n, rng).cwiseAbs();
  const Eigen::MatrixXd z = gauss(static_cast<Eigen::Index>(cfg.noise_dim), n, rng);
  const Eigen::MatrixXd g_in = stack_condition(z, p, pitches, h);

  auto losses = [&](const ToyNet& g, const ToyNet& d) {
    const Eigen::MatrixXd fake = g.forward(g_in);
    return gan_losses_from_logits(d.forward(stack_condition(real, p, pitches, h)),
                                  d.forward(stack_condition(fake, p, pitches, h)), mode);
  };

  ForwardCache gc, rc, fc;
  const Eigen::MatrixXd fake = m.generator.forward(g_in, &gc);
  const Eigen::MatrixXd d_real_in = stack_condition(real, p, pitches, h);
  const Eigen::MatrixXd d_fake_in = stack_condition(fake, p, pitches, h);
  const auto l = gan_losses_from_logits(m.discriminator.forward(d_real_in, &rc),
                                        m.discriminator.forward(d_fake_in, &fc), mode);
  auto gd = m.discriminator.zero_gradients();
  m.discriminator.backward(rc, l.d_loss_d_real, &gd);
  m.discriminator.backward(fc, l.d_loss_d_fake, &gd);
  const Eigen::MatrixXd dfake_in = m.discriminator.backward(fc, l.g_loss_d_fake, nullptr);
  auto gg = m.generator.zero_gradients();
  m.generator.backward(gc, dfake_in.topRows(static_cast<Eigen::Index>(data_dim)), &gg);

  const auto fd_d = oracle::fd_gradient(
      [&](const Eigen::VectorXd& v) {
        return at_params(m.discriminator, v, [&](const ToyNet& d) { return losses(m.generator, d).discriminator; });
      },
      m.discriminator.flat_params());
  const auto fd_g = oracle::fd_gradient(
      [&](const Eigen::VectorXd& v) {
        return at_params(m.generator, v, [&](const ToyNet& g) { return losses(g, m.discriminator).generator; });
      },
      m.generator.flat_params());
  return std::max(oracle::rel_error(gd.flat(), fd_d), oracle::rel_error(gg.flat(), fd_g));
}

/// R1 penalty parameter gradient (a Hessian-vector product) against finite
/// differences of the penalty value.
inline double r1_error(std::uint64_t seed) {
  using namespace gstrument::toy;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> sizes{5, 4, 4, 1};
  ToyNet d(sizes, {Activation::Tanh, Activation::Softplus, Activation::Identity}, rng);
  for (auto& l : d.layers()) l.bias = gauss(l.bias.size(), 1, rng, 0.3);
  const Eigen::MatrixXd input = gauss(5, 3, rng);
  const double gamma = 2.0;
  auto grads = d.zero_gradients();
  r1_penalty(d, input, 3, gamma, &grads);
  const auto fd = oracle::fd_gradient(
      [&](const Eigen::VectorXd& v) {
        return at_params(d, v, [&](const ToyNet& n) { return r1_penalty(n, input, 3, gamma, nullptr); });
      },
      d.flat_params());
  return oracle::rel_error(grads.flat(), fd);
}

/// Eq. 2 objective w.r.t. f and C_i (flowing through a fixed C_p) and the
/// Eq. 3 objective w.r.t. C_p.
inline double extractor_error(std::uint64_t seed) {
  using namespace gstrument::toy;
  std::mt19937_64 rng(seed);
  AdvConfig cfg;
  cfg.seed = seed;
  cfg.hidden = 5;
  cfg.feature_dim = 3;
  cfg.classifier_hidden = 4;
  cfg.lambda_adv = 0.7;
  const int ids = 3, pitches = 4;
  ExtractorModel m = init_extractor(6, ids, pitches, cfg);
  const Eigen::MatrixXd x = gauss(6, 5, rng);
  std::uniform_int_distribution<int> pi(0, ids - 1), pp(0, pitches - 1);
  std::vector<int> identity, pitch;
  for (int i = 0; i < 5; ++i) {
    identity.push_back(pi(rng));
    pitch.push_back(pp(rng));
  }

  ForwardCache fc, cic, cpc, cpc3;
  const Eigen::MatrixXd h = m.f.forward(x, &fc);
  const auto ce = cross_entropy(m.ci.forward(h, &cic), identity);
  const auto kl = kl_uniform(m.cp.forward(h, &cpc));
  auto g_f = m.f.zero_gradients();
  auto g_ci = m.ci.zero_gradients();
  Eigen::MatrixXd dh = m.ci.backward(cic, ce.grad, &g_ci);
  dh += m.cp.backward(cpc, cfg.lambda_adv * kl.grad, nullptr);
  m.f.backward(fc, dh, &g_f);
  const auto ce3 = cross_entropy(m.cp.forward(h, &cpc3), pitch);
  auto g_cp = m.cp.zero_gradients();
  m.cp.backward(cpc3, ce3.grad, &g_cp);

  auto eq2 = [&](const ExtractorModel& mm) {
    return extractor_losses(mm, x, identity, pitch, cfg.lambda_adv).eq2;
  };
  const auto fd_f = oracle::fd_gradient(
      [&](const Eigen::VectorXd& v) {
        ExtractorModel mm = m;
        mm.f.set_flat_params(v);
        return eq2(mm);
      },
      m.f.flat_params());
  const auto fd_ci = oracle::fd_gradient(
      [&](const Eigen::VectorXd& v) {
        ExtractorModel mm = m;
        mm.ci.set_flat_params(v);
        return eq2(mm);
      },
      m.ci.flat_params());
  const auto fd_cp = oracle::fd_gradient(
      [&](const Eigen::VectorXd& v) {
        ExtractorModel mm = m;
        mm.cp.set_flat_params(v);
        return extractor_losses(mm, x, identity, pitch, cfg.lambda_adv).eq3;
      },
      m.cp.flat_params());
  return std::max({oracle::rel_error(g_f.flat(), fd_f), oracle::rel_error(g_ci.flat(), fd_ci),
                   oracle::rel_error(g_cp.flat(), fd_cp)});
}

/// F^T (F x - m), the gradient used by the projected descent, against
/// differences of 0.5 ||F x - m||^2.
inline double nnls_error(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim(2, 8);
  const int rows = dim(rng), cols = dim(rng);
  const Eigen::MatrixXd f = gauss(rows, cols, rng).cwiseAbs();
  const Eigen::VectorXd mel = gauss(rows, 1, rng);
  const Eigen::VectorXd x = gauss(cols, 1, rng).cwiseAbs();
  const auto fb = gstrument::signal::MelFilterbank::from_matrix(f);
  const Eigen::VectorXd g = fb.sparse_transpose() * (fb.sparse() * x - mel);
  const auto fd = oracle::fd_gradient(
      [&](const Eigen::VectorXd& v) { return 0.5 * (oracle::matmul(f, v) - mel).squaredNorm(); }, x);
  return oracle::rel_error(g, fd);
}

}  // namespace gradcheck
