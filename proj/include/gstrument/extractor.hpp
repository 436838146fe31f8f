#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gstrument/toydata.hpp"
#include "gstrument/toynet.hpp"
#include "gstrument/trainlog.hpp"

namespace gstrument::toy {

struct AdvConfig {
  // Weight of the KL(uniform || C_p) term.
  double lambda_adv = 1.0;
  // Alternation: eq2_steps updates of (f, C_i), then eq3_steps of C_p.
  std::size_t eq2_steps = 1;
  std::size_t eq3_steps = 1;
  AdamConfig adam;
  std::size_t rounds = 1500;
  // Fraction of rounds after which every learning rate decays linearly
  // toward zero; 1 keeps it constant.
  double decay_start = 1.0;
  std::size_t batch = 64;
  std::size_t feature_dim = 16;
  std::size_t hidden = 64;
  std::size_t classifier_hidden = 32;
  Activation feature_activation = Activation::Tanh;
  std::uint64_t seed = 0;

  void validate() const;
};

/// f_phi with its identity head C_i and adversarial pitch head C_p.
struct ExtractorModel {
  ToyNet f;
  ToyNet ci;
  ToyNet cp;
};

ExtractorModel init_extractor(std::size_t input_dim, int num_identities, int num_pitches, const AdvConfig& cfg);

struct ExtractorLosses {
  double identity_ce = 0.0;
  double pitch_kl = 0.0;
  double pitch_ce = 0.0;
  double eq2 = 0.0;  // identity_ce + lambda * pitch_kl
  double eq3 = 0.0;  // pitch_ce
};

ExtractorLosses extractor_losses(const ExtractorModel& m, const Eigen::MatrixXd& x, const std::vector<int>& identity,
                                 const std::vector<int>& pitch, double lambda_adv);

/// Alternating optimizer for the two extractor objectives. step_eq2 touches
/// only f and C_i; step_eq3 touches only C_p.
class ExtractorTrainer {
 public:
  ExtractorTrainer(ExtractorModel model, const AdvConfig& cfg);

  /// Returns the loss before the update.
  double step_eq2(const Eigen::MatrixXd& x, const std::vector<int>& identity, const std::vector<int>& pitch);
  double step_eq3(const Eigen::MatrixXd& x, const std::vector<int>& pitch);
  /// Scales all three learning rates to `factor` times the configured one.
  void scale_learning_rate(double factor);

  const ExtractorModel& model() const { return model_; }
  ExtractorModel release() { return std::move(model_); }

 private:
  ExtractorModel model_;
  AdvConfig cfg_;
  Adam adam_f_, adam_ci_, adam_cp_;
};

struct ExtractorRun {
  ExtractorModel model;
  std::vector<LogRow> log;
  std::vector<std::string> warnings;
};

/// Runs cfg.rounds alternation rounds on minibatches drawn with cfg.seed.
ExtractorRun train_extractor(const ToyDataset& data, const AdvConfig& cfg);

struct ClassifierConfig {
  std::size_t hidden = 32;
  std::size_t steps = 500;
  AdamConfig adam{1e-2, 0.9, 0.999, 1e-8};
  std::uint64_t seed = 0;
};

/// Full-batch training of a fresh one-hidden-layer classifier.
ToyNet train_classifier(const Eigen::MatrixXd& inputs, const std::vector<int>& labels, int classes,
                        const ClassifierConfig& cfg);

double accuracy(const ToyNet& classifier, const Eigen::MatrixXd& inputs, const std::vector<int>& labels);

struct ProbeResult {
  double pitch_accuracy = 0.0;
  double identity_accuracy = 0.0;
};

/// Freezes f, trains fresh pitch and identity classifiers on its features
/// over `train`, reports accuracies on `heldout`.
ProbeResult probe_retrain(const ToyNet& f, const ToyDataset& train, const ToyDataset& heldout,
                          const ClassifierConfig& cfg = {});

/// Same protocol on precomputed features (one column per sample).
ProbeResult probe_features(const Eigen::MatrixXd& train_features, const ToyDataset& train,
                           const Eigen::MatrixXd& heldout_features, const ToyDataset& heldout,
                           const ClassifierConfig& cfg = {});

}  // namespace gstrument::toy
