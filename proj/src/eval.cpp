#include "gstrument/eval.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "gstrument/errors.hpp"
#include "gstrument/losses.hpp"

namespace gstrument::eval {
namespace {

constexpr double kEigenClamp = 1e-8;

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  Eigen::VectorXd ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = ev(i) > kEigenClamp ? std::sqrt(ev(i)) : 0.0;
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

void GaussianStats::validate() const {
  require(cov.rows() == mean.size() && cov.cols() == mean.size(), "covariance shape does not match mean");
  require((cov - cov.transpose()).cwiseAbs().maxCoeff() <= 1e-10, "covariance is not symmetric");
  if (cov.size() == 0) return;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
  require(es.eigenvalues().minCoeff() >= -1e-8, "covariance is not positive semidefinite");
}

GaussianStats gaussian_stats(const Eigen::MatrixXd& features) {
  require(features.cols() >= 2, "need at least two samples for covariance");
  GaussianStats s;
  s.count = static_cast<std::size_t>(features.cols());
  s.mean = features.rowwise().mean();
  const Eigen::MatrixXd centered = features.colwise() - s.mean;
  s.cov = centered * centered.transpose() / static_cast<double>(features.cols() - 1);
  s.cov = 0.5 * (s.cov + s.cov.transpose());
  return s;
}

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  require(a.mean.size() == b.mean.size(), "Gaussian dimensions differ");
  a.validate();
  b.validate();
  if (a.mean == b.mean && a.cov == b.cov) return 0.0;
  const Eigen::MatrixXd root_a = psd_sqrt(a.cov);
  Eigen::MatrixXd inner = root_a * b.cov * root_a;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inner, Eigen::EigenvaluesOnly);
  double trace_root = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) > kEigenClamp) trace_root += std::sqrt(es.eigenvalues()(i));
  const double d = (a.mean - b.mean).squaredNorm() + a.cov.trace() + b.cov.trace() - 2.0 * trace_root;
  return std::max(0.0, d);
}

double pitch_accuracy(const std::vector<int>& predicted, const std::vector<int>& target) {
  require(predicted.size() == target.size(), "prediction and target counts differ");
  if (target.empty()) throw InvalidArgument("pitch accuracy of an empty sample set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < target.size(); ++i) hits += predicted[i] == target[i];
  return static_cast<double>(hits) / static_cast<double>(target.size());
}

double pitch_accuracy(const toy::ToyNet& classifier, const Eigen::MatrixXd& samples,
                      const std::vector<int>& pitches) {
  require(static_cast<std::size_t>(samples.cols()) == pitches.size(), "sample and pitch counts differ");
  if (pitches.empty()) throw InvalidArgument("pitch accuracy of an empty sample set");
  return pitch_accuracy(toy::argmax_columns(classifier.forward(samples)), pitches);
}

double feature_mse(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  require(a.cols() == b.cols(), "paired sets must have equal length");
  require(a.rows() == b.rows(), "feature dimensions differ");
  if (a.cols() == 0) throw InvalidArgument("MSE of empty sets");
  return (a - b).colwise().squaredNorm().mean();
}

std::string MetricReport::to_text() const {
  std::ostringstream out;
  out.precision(10);
  out << "fid=" << fid << "\npitch_accuracy=" << pitch_accuracy << '\n';
  if (mse) out << "mse=" << *mse << '\n';
  out << "samples=" << samples << '\n';
  for (const auto& [p, acc] : pitch_accuracy_by_pitch) out << "pitch_accuracy." << p << '=' << acc << '\n';
  return out.str();
}

std::string MetricReport::to_csv() const {
  std::ostringstream out;
  out.precision(10);
  out << "pitch,count,pitch_accuracy\n";
  for (const auto& [p, acc] : pitch_accuracy_by_pitch) out << p << ',' << count_by_pitch.at(p) << ',' << acc << '\n';
  out << "all," << samples << ',' << pitch_accuracy << '\n';
  return out.str();
}

MetricReport interpolation_eval(const GeneratorFn& generator, const EncoderFn& extractor,
                                const Eigen::MatrixXd& dataset, const EncoderFn& fid_features,
                                const ClassifierFn& predict_pitch, std::size_t n_trials, std::uint64_t seed,
                                const InterpolationSetup& setup) {
  if (dataset.cols() < 2) throw InvalidState("interpolation needs at least two inputs");
  require(n_trials >= 1, "need at least one trial");
  require(setup.num_pitches >= 1, "need at least one pitch");
  if (setup.fixed_ratio) require(*setup.fixed_ratio >= 0.0 && *setup.fixed_ratio <= 1.0, "ratio must lie in [0, 1]");

  const Eigen::MatrixXd h = extractor(dataset);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, dataset.cols() - 1);
  std::uniform_int_distribution<Eigen::Index> pick_other(0, dataset.cols() - 2);
  std::uniform_real_distribution<double> ratio(0.0, 1.0);
  std::uniform_int_distribution<int> pick_pitch(0, setup.num_pitches - 1);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const auto n = static_cast<Eigen::Index>(n_trials);
  Eigen::MatrixXd inputs(dataset.rows(), 2 * n);
  Eigen::MatrixXd outputs;
  std::vector<int> pitches(n_trials);
  for (Eigen::Index trial = 0; trial < n; ++trial) {
    const Eigen::Index a = pick(rng);
    Eigen::Index b = pick_other(rng);
    if (b >= a) ++b;
    const double t = setup.fixed_ratio ? *setup.fixed_ratio : ratio(rng);
    const int p = pick_pitch(rng);
    Eigen::VectorXd z(static_cast<Eigen::Index>(setup.noise_dim));
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = gauss(rng);
    Eigen::VectorXd mix = t == 0.0 ? Eigen::VectorXd(h.col(a))
                                   : (t == 1.0 ? Eigen::VectorXd(h.col(b)) : Eigen::VectorXd((1.0 - t) * h.col(a) + t * h.col(b)));
    const Eigen::VectorXd x = generator(z, p, mix);
    if (trial == 0) outputs.resize(x.size(), n);
    outputs.col(trial) = x;
    inputs.col(2 * trial) = dataset.col(a);
    inputs.col(2 * trial + 1) = dataset.col(b);
    pitches[static_cast<std::size_t>(trial)] = p;
  }

  MetricReport report;
  report.samples = n_trials;
  report.fid = frechet_distance(gaussian_stats(fid_features(inputs)), gaussian_stats(fid_features(outputs)));
  const auto predicted = predict_pitch(outputs);
  report.pitch_accuracy = pitch_accuracy(predicted, pitches);
  std::map<int, std::size_t> hits;
  for (std::size_t i = 0; i < n_trials; ++i) {
    ++report.count_by_pitch[pitches[i]];
    hits[pitches[i]] += predicted[i] == pitches[i];
  }
  for (const auto& [p, c] : report.count_by_pitch)
    report.pitch_accuracy_by_pitch[p] = static_cast<double>(hits[p]) / static_cast<double>(c);
  return report;
}

}  // namespace gstrument::eval
