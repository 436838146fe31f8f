#include "gstrument/losses.hpp"

#include <cmath>

#include "gstrument/errors.hpp"

namespace gstrument::toy {
namespace {

double softplus(double a) { return a > 0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a)); }
double sigmoid(double a) {
  if (a >= 0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

}  // namespace

GanLosses gan_losses(double d_real, double d_fake, GeneratorLoss mode) {
  require(d_real > 0.0 && d_real < 1.0 && d_fake > 0.0 && d_fake < 1.0,
          "discriminator outputs must be probabilities in (0, 1)");
  GanLosses out;
  out.discriminator = -std::log(d_real) - std::log1p(-d_fake);
  out.generator = mode == GeneratorLoss::Minimax ? std::log1p(-d_fake) : -std::log(d_fake);
  return out;
}

GanLogitLosses gan_losses_from_logits(const Eigen::RowVectorXd& real_logits, const Eigen::RowVectorXd& fake_logits,
                                      GeneratorLoss mode) {
  require(real_logits.size() > 0 && fake_logits.size() > 0, "empty logit batch");
  const double nr = static_cast<double>(real_logits.size());
  const double nf = static_cast<double>(fake_logits.size());
  GanLogitLosses out;
  out.d_loss_d_real.resize(real_logits.size());
  out.d_loss_d_fake.resize(fake_logits.size());
  out.g_loss_d_fake.resize(fake_logits.size());
  double d_real = 0.0, d_fake = 0.0, g = 0.0;
  for (Eigen::Index i = 0; i < real_logits.size(); ++i) {
    const double a = real_logits(i);
    d_real += softplus(-a);  // -log sigmoid(a)
    out.d_loss_d_real(i) = (sigmoid(a) - 1.0) / nr;
  }
  for (Eigen::Index i = 0; i < fake_logits.size(); ++i) {
    const double a = fake_logits(i);
    const double s = sigmoid(a);
    d_fake += softplus(a);  // -log(1 - sigmoid(a))
    out.d_loss_d_fake(i) = s / nf;
    if (mode == GeneratorLoss::Minimax) {
      g += -softplus(a);
      out.g_loss_d_fake(i) = -s / nf;
    } else {
      g += softplus(-a);
      out.g_loss_d_fake(i) = (s - 1.0) / nf;
    }
  }
  out.discriminator = d_real / nr + d_fake / nf;
  out.generator = g / nf;
  return out;
}

Eigen::MatrixXd softmax(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const double m = logits.col(c).maxCoeff();
    Eigen::VectorXd e = (logits.col(c).array() - m).exp();
    out.col(c) = e / e.sum();
  }
  return out;
}

LossGrad cross_entropy(const Eigen::MatrixXd& logits, const std::vector<int>& labels) {
  require(static_cast<std::size_t>(logits.cols()) == labels.size() && !labels.empty(),
          "cross entropy needs one label per column");
  const double n = static_cast<double>(labels.size());
  LossGrad out;
  out.grad = softmax(logits);
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const int y = labels[static_cast<std::size_t>(c)];
    require(y >= 0 && y < logits.rows(), "label " + std::to_string(y) + " out of range");
    const double m = logits.col(c).maxCoeff();
    const double lse = m + std::log((logits.col(c).array() - m).exp().sum());
    out.value += lse - logits(y, c);
    out.grad(y, c) -= 1.0;
  }
  out.value /= n;
  out.grad /= n;
  return out;
}

LossGrad kl_uniform(const Eigen::MatrixXd& logits) {
  require(logits.rows() >= 1 && logits.cols() >= 1, "empty logits");
  const double k = static_cast<double>(logits.rows());
  const double n = static_cast<double>(logits.cols());
  LossGrad out;
  out.grad = softmax(logits);
  // KL(u || q) = -log K - mean_k(a_k) + logsumexp(a)
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const double m = logits.col(c).maxCoeff();
    const double lse = m + std::log((logits.col(c).array() - m).exp().sum());
    out.value += -std::log(k) - logits.col(c).mean() + lse;
  }
  out.grad.array() -= 1.0 / k;
  out.value /= n;
  out.grad /= n;
  return out;
}

double kl_uniform_to(const Eigen::VectorXd& q) {
  require(q.size() >= 1, "empty distribution");
  require((q.array() > 0.0).all(), "q must be strictly positive");
  const double u = 1.0 / static_cast<double>(q.size());
  double kl = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i) kl += u * std::log(u / q(i));
  return kl;
}

std::vector<int> argmax_columns(const Eigen::MatrixXd& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.cols()));
  for (Eigen::Index c = 0; c < scores.cols(); ++c) {
    Eigen::Index best = 0;
    scores.col(c).maxCoeff(&best);
    out[static_cast<std::size_t>(c)] = static_cast<int>(best);
  }
  return out;
}

}  // namespace gstrument::toy
