#pragma once

#include <cstdint>
#include <vector>

#include "gstrument/losses.hpp"
#include "gstrument/neighborhood.hpp"
#include "gstrument/toydata.hpp"
#include "gstrument/toynet.hpp"
#include "gstrument/trainlog.hpp"

namespace gstrument::toy {

struct GanConfig {
  std::size_t steps = 2000;
  std::size_t batch = 16;
  std::size_t noise_dim = 8;
  std::size_t hidden = 64;
  AdamConfig adam;
  GeneratorLoss generator_loss = GeneratorLoss::NonSaturating;
  // R1 gradient penalty weight on real samples; 0 disables it.
  double r1_gamma = 0.0;
  Activation discriminator_activation = Activation::LeakyRelu;
  // Discriminator updates per generator update.
  std::size_t d_steps = 2;
  // Decay of the exponential moving average of generator weights kept as
  // the returned generator; 0 returns the last iterate.
  double g_ema = 0.99;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Generator G(z, p, h) and discriminator D(x, p, h), both conditioned by
/// concatenating the one-hot pitch and the instance feature.
struct GanModel {
  ToyNet generator;
  ToyNet discriminator;  // emits a logit; D = sigmoid(logit)
  std::size_t noise_dim = 0;
  std::size_t data_dim = 0;
  std::size_t feature_dim = 0;
  int num_pitches = 0;
};

Eigen::VectorXd one_hot(int index, int size);

/// [x; one_hot(p); h] for each column.
Eigen::MatrixXd stack_condition(const Eigen::MatrixXd& top, const std::vector<int>& pitch, int num_pitches,
                                const Eigen::MatrixXd& features);

/// D starts with a zero output layer, so D(.) = 0.5 everywhere at step 0.
GanModel init_gan(std::size_t data_dim, int num_pitches, std::size_t feature_dim, const GanConfig& cfg);

/// Features of every dataset column through the frozen extractor, stored
/// with ids 0..n-1 in dataset order.
neighborhood::FeatureStore build_store(const ToyNet& extractor, const ToyDataset& data,
                                       std::size_t k = neighborhood::kDefaultK);

/// (gamma / 2) * mean ||grad_x D||^2 over the columns of `d_input`, where x
/// is the first `data_dim` rows. When `grads` is given, the parameter
/// gradient is added to it: a central difference of grad_theta D along
/// grad_x D (a Hessian-vector product).
double r1_penalty(const ToyNet& discriminator, const Eigen::MatrixXd& d_input, std::size_t data_dim, double gamma,
                  Gradients* grads);

struct GanRun {
  GanModel model;
  std::vector<LogRow> log;
};

/// Instance-conditioned adversarial training. Store item i must describe
/// dataset column i. Each step draws x_i, a neighbor x_j from A_i, and
/// trains D on (x_j, p(x_j), h_i) against (G(z, p(x_j), h_i), p(x_j), h_i),
/// then updates G. Logged losses are measured before the D update.
GanRun train_gan(const neighborhood::FeatureStore& store, const ToyDataset& data, const GanConfig& cfg);

Eigen::VectorXd generate_from_feature(const GanModel& m, const Eigen::VectorXd& h, int pitch,
                                      const Eigen::VectorXd& z);

/// x^g = G(z, p, f(x_input)).
Eigen::VectorXd generate(const GanModel& m, const ToyNet& extractor, const Eigen::VectorXd& x_input, int pitch,
                         const Eigen::VectorXd& z);

/// G(z, p, (1 - t) h_a + t h_b), t in [0, 1].
Eigen::VectorXd interpolate(const GanModel& m, const Eigen::VectorXd& h_a, const Eigen::VectorXd& h_b, double t,
                            int pitch, const Eigen::VectorXd& z);

/// Standard-normal noise vector from the given engine.
Eigen::VectorXd sample_noise(std::size_t dim, std::mt19937_64& rng);

}  // namespace gstrument::toy
