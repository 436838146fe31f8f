#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gstrument/toynet.hpp"

namespace gstrument::eval {

struct GaussianStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  std::size_t count = 0;

  /// Symmetric to 1e-10 and eigenvalues >= -1e-8.
  void validate() const;
};

/// Sample mean and unbiased covariance of the columns of `features`.
GaussianStats gaussian_stats(const Eigen::MatrixXd& features);

/// ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^{1/2}), with the trace of
/// the square root taken from the eigenvalues of S_a^{1/2} S_b S_a^{1/2}.
/// Eigenvalues below 1e-8 in magnitude are clamped to zero.
double frechet_distance(const GaussianStats& a, const GaussianStats& b);

/// Fraction of columns whose predicted class equals `target`.
double pitch_accuracy(const std::vector<int>& predicted, const std::vector<int>& target);
/// Argmax of `classifier` over each column of `samples` against the
/// conditioning pitches. Throws on an empty set.
double pitch_accuracy(const toy::ToyNet& classifier, const Eigen::MatrixXd& samples,
                      const std::vector<int>& pitches);

/// Mean over pairs of the squared Euclidean distance between columns.
double feature_mse(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

struct MetricReport {
  double fid = 0.0;
  double pitch_accuracy = 0.0;
  std::optional<double> mse;
  std::size_t samples = 0;
  std::map<int, double> pitch_accuracy_by_pitch;
  std::map<int, std::size_t> count_by_pitch;

  std::string to_text() const;
  std::string to_csv() const;
};

using GeneratorFn = std::function<Eigen::VectorXd(const Eigen::VectorXd& z, int pitch, const Eigen::VectorXd& h)>;
using EncoderFn = std::function<Eigen::MatrixXd(const Eigen::MatrixXd& x)>;
using ClassifierFn = std::function<std::vector<int>(const Eigen::MatrixXd& x)>;

struct InterpolationSetup {
  std::size_t noise_dim = 8;
  int num_pitches = 8;
  // Overrides the U(0, 1) ratio draw when set.
  std::optional<double> fixed_ratio;
};

/// For each trial: pick two distinct inputs, t ~ U(0,1), a pitch uniformly
/// from the pitch set and noise z; generate G(z, p, (1-t) f(x_a) + t f(x_b)).
/// FID compares `fid_features` of every chosen input (both endpoints) with
/// those of the generated set; pitch accuracy scores `predict_pitch` on the
/// generated set against the conditioning pitch.
MetricReport interpolation_eval(const GeneratorFn& generator, const EncoderFn& extractor,
                                const Eigen::MatrixXd& dataset, const EncoderFn& fid_features,
                                const ClassifierFn& predict_pitch, std::size_t n_trials, std::uint64_t seed,
                                const InterpolationSetup& setup);

}  // namespace gstrument::eval
