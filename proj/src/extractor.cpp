#include "gstrument/extractor.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "gstrument/errors.hpp"
#include "gstrument/losses.hpp"

namespace gstrument::toy {
namespace {

std::vector<int> pick(const std::vector<int>& labels, const std::vector<std::size_t>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(labels[i]);
  return out;
}

Eigen::MatrixXd pick_cols(const Eigen::MatrixXd& x, const std::vector<std::size_t>& idx) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(idx[j]));
  return out;
}

void check_labels(const std::vector<int>& labels, Eigen::Index classes, const char* what) {
  for (int y : labels)
    if (y < 0 || y >= classes) throw InvalidArgument(std::string(what) + " label " + std::to_string(y) + " out of range");
}

}  // namespace

void AdvConfig::validate() const {
  require(lambda_adv >= 0.0, "lambda_adv must be non-negative");
  require(eq2_steps + eq3_steps >= 1, "alternation schedule must contain at least one step");
  require(batch >= 1 && feature_dim >= 1 && hidden >= 1 && classifier_hidden >= 1, "extractor sizes must be positive");
  require(decay_start >= 0.0 && decay_start <= 1.0, "decay_start must lie in [0, 1]");
  adam.validate();
}

ExtractorModel init_extractor(std::size_t input_dim, int num_identities, int num_pitches, const AdvConfig& cfg) {
  cfg.validate();
  require(num_identities >= 1 && num_pitches >= 1, "need at least one identity and one pitch");
  std::mt19937_64 rng(cfg.seed);
  ExtractorModel m;
  m.f = ToyNet({input_dim, cfg.hidden, cfg.feature_dim}, {Activation::LeakyRelu, cfg.feature_activation}, rng);
  m.ci = ToyNet({cfg.feature_dim, cfg.classifier_hidden, static_cast<std::size_t>(num_identities)},
                {Activation::LeakyRelu, Activation::Identity}, rng);
  m.cp = ToyNet({cfg.feature_dim, cfg.classifier_hidden, static_cast<std::size_t>(num_pitches)},
                {Activation::LeakyRelu, Activation::Identity}, rng);
  return m;
}

ExtractorLosses extractor_losses(const ExtractorModel& m, const Eigen::MatrixXd& x, const std::vector<int>& identity,
                                 const std::vector<int>& pitch, double lambda_adv) {
  check_labels(identity, static_cast<Eigen::Index>(m.ci.output_dim()), "identity");
  check_labels(pitch, static_cast<Eigen::Index>(m.cp.output_dim()), "pitch");
  const Eigen::MatrixXd h = m.f.forward(x);
  const Eigen::MatrixXd pitch_logits = m.cp.forward(h);
  ExtractorLosses out;
  out.identity_ce = cross_entropy(m.ci.forward(h), identity).value;
  out.pitch_kl = kl_uniform(pitch_logits).value;
  out.pitch_ce = cross_entropy(pitch_logits, pitch).value;
  out.eq2 = out.identity_ce + lambda_adv * out.pitch_kl;
  out.eq3 = out.pitch_ce;
  return out;
}

ExtractorTrainer::ExtractorTrainer(ExtractorModel model, const AdvConfig& cfg)
    : model_(std::move(model)),
      cfg_(cfg),
      adam_f_(model_.f, cfg.adam),
      adam_ci_(model_.ci, cfg.adam),
      adam_cp_(model_.cp, cfg.adam) {
  cfg_.validate();
}

void ExtractorTrainer::scale_learning_rate(double factor) {
  const double lr = cfg_.adam.lr * factor;
  adam_f_.set_learning_rate(lr);
  adam_ci_.set_learning_rate(lr);
  adam_cp_.set_learning_rate(lr);
}

double ExtractorTrainer::step_eq2(const Eigen::MatrixXd& x, const std::vector<int>& identity,
                                  const std::vector<int>& pitch) {
  check_labels(identity, static_cast<Eigen::Index>(model_.ci.output_dim()), "identity");
  check_labels(pitch, static_cast<Eigen::Index>(model_.cp.output_dim()), "pitch");
  ForwardCache fc, cic, cpc;
  const Eigen::MatrixXd h = model_.f.forward(x, &fc);
  const auto ce = cross_entropy(model_.ci.forward(h, &cic), identity);
  const auto kl = kl_uniform(model_.cp.forward(h, &cpc));

  Gradients g_f = model_.f.zero_gradients();
  Gradients g_ci = model_.ci.zero_gradients();
  Eigen::MatrixXd dh = model_.ci.backward(cic, ce.grad, &g_ci);
  // C_p is only differentiated through; its parameters stay fixed here.
  if (cfg_.lambda_adv > 0.0) dh += model_.cp.backward(cpc, cfg_.lambda_adv * kl.grad, nullptr);
  model_.f.backward(fc, dh, &g_f);
  adam_f_.step(model_.f, g_f);
  adam_ci_.step(model_.ci, g_ci);
  return ce.value + cfg_.lambda_adv * kl.value;
}

double ExtractorTrainer::step_eq3(const Eigen::MatrixXd& x, const std::vector<int>& pitch) {
  check_labels(pitch, static_cast<Eigen::Index>(model_.cp.output_dim()), "pitch");
  const Eigen::MatrixXd h = model_.f.forward(x);
  ForwardCache cpc;
  const auto ce = cross_entropy(model_.cp.forward(h, &cpc), pitch);
  Gradients g_cp = model_.cp.zero_gradients();
  model_.cp.backward(cpc, ce.grad, &g_cp);
  adam_cp_.step(model_.cp, g_cp);
  return ce.value;
}

ExtractorRun train_extractor(const ToyDataset& data, const AdvConfig& cfg) {
  cfg.validate();
  data.validate();
  if (data.size() == 0) throw InvalidState("cannot train on an empty dataset");
  ExtractorRun run;
  if (std::set<int>(data.identity.begin(), data.identity.end()).size() < 2)
    run.warnings.push_back("dataset has a single instrument identity; the identity objective is trivial");
  if (std::set<int>(data.pitch.begin(), data.pitch.end()).size() < 2)
    run.warnings.push_back("dataset has a single pitch; the adversarial objective is trivial");

  ExtractorTrainer trainer(init_extractor(data.dim(), data.num_identities, data.num_pitches, cfg), cfg);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<std::size_t> draw(0, data.size() - 1);
  std::vector<std::size_t> idx(cfg.batch);
  auto next_batch = [&] {
    for (auto& i : idx) i = draw(rng);
  };

  const auto decay_from = static_cast<std::size_t>(cfg.decay_start * static_cast<double>(cfg.rounds));
  for (std::size_t round = 0; round < cfg.rounds; ++round) {
    if (round >= decay_from)
      trainer.scale_learning_rate(static_cast<double>(cfg.rounds - round) /
                                  static_cast<double>(cfg.rounds - decay_from));
    LogRow row;
    row.step = round;
    for (std::size_t s = 0; s < cfg.eq2_steps; ++s) {
      next_batch();
      row.loss_eq2 = trainer.step_eq2(pick_cols(data.x, idx), pick(data.identity, idx), pick(data.pitch, idx));
    }
    for (std::size_t s = 0; s < cfg.eq3_steps; ++s) {
      next_batch();
      row.loss_eq3 = trainer.step_eq3(pick_cols(data.x, idx), pick(data.pitch, idx));
    }
    run.log.push_back(row);
  }
  run.model = trainer.release();
  return run;
}

ToyNet train_classifier(const Eigen::MatrixXd& inputs, const std::vector<int>& labels, int classes,
                        const ClassifierConfig& cfg) {
  require(classes >= 1, "need at least one class");
  require(static_cast<std::size_t>(inputs.cols()) == labels.size() && !labels.empty(),
          "classifier needs one label per input column");
  check_labels(labels, classes, "class");
  std::mt19937_64 rng(cfg.seed);
  ToyNet net({static_cast<std::size_t>(inputs.rows()), cfg.hidden, static_cast<std::size_t>(classes)},
             {Activation::LeakyRelu, Activation::Identity}, rng);
  Adam adam(net, cfg.adam);
  for (std::size_t s = 0; s < cfg.steps; ++s) {
    ForwardCache cache;
    const auto ce = cross_entropy(net.forward(inputs, &cache), labels);
    Gradients g = net.zero_gradients();
    net.backward(cache, ce.grad, &g);
    adam.step(net, g);
  }
  return net;
}

double accuracy(const ToyNet& classifier, const Eigen::MatrixXd& inputs, const std::vector<int>& labels) {
  require(static_cast<std::size_t>(inputs.cols()) == labels.size(), "one label per input column required");
  if (labels.empty()) throw InvalidArgument("accuracy of an empty sample set");
  const auto pred = argmax_columns(classifier.forward(inputs));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += pred[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

ProbeResult probe_features(const Eigen::MatrixXd& train_features, const ToyDataset& train,
                           const Eigen::MatrixXd& heldout_features, const ToyDataset& heldout,
                           const ClassifierConfig& cfg) {
  ProbeResult r;
  ClassifierConfig pc = cfg;
  const ToyNet cp = train_classifier(train_features, train.pitch, train.num_pitches, pc);
  pc.seed = cfg.seed + 1;
  const ToyNet ci = train_classifier(train_features, train.identity, train.num_identities, pc);
  r.pitch_accuracy = accuracy(cp, heldout_features, heldout.pitch);
  r.identity_accuracy = accuracy(ci, heldout_features, heldout.identity);
  return r;
}

ProbeResult probe_retrain(const ToyNet& f, const ToyDataset& train, const ToyDataset& heldout,
                          const ClassifierConfig& cfg) {
  return probe_features(f.forward(train.x), train, f.forward(heldout.x), heldout, cfg);
}

}  // namespace gstrument::toy
