#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

namespace gstrument::toy {

inline constexpr int kToyBaseMidi = 60;

/// Labelled toy "spectrograms", one flattened sample per column.
struct ToyDataset {
  Eigen::MatrixXd x;            // dim x n
  std::vector<int> pitch;       // class index in [0, num_pitches)
  std::vector<int> identity;    // instrument identity in [0, num_identities)
  std::vector<int> category;    // instrument category in [0, num_categories)
  int num_pitches = 0;
  int num_identities = 0;
  int num_categories = 0;
  int base_midi = kToyBaseMidi;  // MIDI note of pitch class 0

  std::size_t size() const { return static_cast<std::size_t>(x.cols()); }
  std::size_t dim() const { return static_cast<std::size_t>(x.rows()); }
  int midi(std::size_t i) const { return base_midi + pitch[i]; }
  void validate() const;

  ToyDataset subset(const std::vector<std::size_t>& idx) const;
};

struct FactorizedSpec {
  int num_pitches = 8;
  int num_identities = 4;
  int num_categories = 2;
  int per_combination = 40;
  int freq_bins = 16;
  int frames = 4;
  double noise = 0.1;
  std::uint64_t seed = 0;
};

/// Pitch and identity as independent factors: each sample is an identity
/// spectral envelope with its own decay, plus a harmonic comb placed by the
/// pitch, plus small non-negative noise. Identity i belongs to category
/// i % num_categories.
ToyDataset make_factorized_dataset(const FactorizedSpec& spec);

struct GaussianSpec {
  int dim = 16;
  int num_pitches = 2;
  int per_pitch = 500;
  std::uint64_t seed = 0;
};

/// One isotropic-per-dimension Gaussian per pitch, means in [1.5, 3] and
/// standard deviations in [0.2, 0.4] per dimension.
ToyDataset make_gaussian_dataset(const GaussianSpec& spec);

/// Deterministic shuffled split: the first `train_fraction` goes to train.
std::pair<ToyDataset, ToyDataset> split(const ToyDataset& d, double train_fraction, std::uint64_t seed);

/// data.gstm (n x dim), labels.csv and dataset.txt inside `dir`.
void save_dataset(const ToyDataset& d, const std::filesystem::path& dir);
ToyDataset load_dataset(const std::filesystem::path& dir);

}  // namespace gstrument::toy
