#pragma once

#include <vector>

#include <Eigen/Core>

namespace gstrument::toy {

enum class GeneratorLoss {
  Minimax,        // log(1 - D(G(z)))
  NonSaturating,  // -log D(G(z))
};

struct GanLosses {
  double discriminator = 0.0;
  double generator = 0.0;
};

/// Adversarial objective on discriminator probabilities:
///   loss_D = -log D(real) - log(1 - D(fake))
///   loss_G = log(1 - D(fake))   (minimax)   or   -log D(fake)
/// Probabilities must lie strictly inside (0, 1).
GanLosses gan_losses(double d_real, double d_fake, GeneratorLoss mode = GeneratorLoss::Minimax);

/// Batch-mean version on logits, numerically stable, with gradients of each
/// mean loss with respect to every logit.
struct GanLogitLosses {
  double discriminator = 0.0;
  double generator = 0.0;
  Eigen::RowVectorXd d_loss_d_real;  // d loss_D / d real logits
  Eigen::RowVectorXd d_loss_d_fake;  // d loss_D / d fake logits
  Eigen::RowVectorXd g_loss_d_fake;  // d loss_G / d fake logits
};
GanLogitLosses gan_losses_from_logits(const Eigen::RowVectorXd& real_logits, const Eigen::RowVectorXd& fake_logits,
                                      GeneratorLoss mode);

/// Column-wise softmax.
Eigen::MatrixXd softmax(const Eigen::MatrixXd& logits);

struct LossGrad {
  double value = 0.0;
  Eigen::MatrixXd grad;  // d value / d logits
};

/// Batch-mean cross entropy against integer labels in [0, classes).
LossGrad cross_entropy(const Eigen::MatrixXd& logits, const std::vector<int>& labels);

/// Batch-mean KL(uniform || softmax(logits)).
LossGrad kl_uniform(const Eigen::MatrixXd& logits);

/// KL(uniform || q) for a single probability vector.
double kl_uniform_to(const Eigen::VectorXd& q);

/// Predicted class per column.
std::vector<int> argmax_columns(const Eigen::MatrixXd& scores);

}  // namespace gstrument::toy
