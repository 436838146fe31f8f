#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "gstrument/extractor.hpp"
#include "gstrument/gan.hpp"
#include "gstrument/inversion.hpp"
#include "gstrument/signal.hpp"
#include "gstrument/toydata.hpp"

namespace gstrument {

struct MelConfig {
  std::size_t bins = 512;
  double f_min = 0.0;
  // Nyquist when unset (<= 0).
  double f_max = 0.0;
  std::size_t frames = signal::kDefaultFrames;
};

struct BenchConfig {
  std::size_t inputs = 20;
  // Baseline runs stop at this many iterations; the count is then censored.
  std::size_t baseline_max_iters = 2000;
  // Relative residual-change tolerance for the baseline runs.
  double baseline_tol = 1e-12;
  // Iterations-to-target threshold is target_factor x the SVD run's final residual.
  double target_factor = 1.01;
};

/// Every tunable of the toolkit. Loaded from a key = value file; '#' starts
/// a comment.
struct Config {
  int sample_rate = signal::kDefaultSampleRate;
  signal::StftConfig stft;
  MelConfig mel;
  signal::PreprocessConfig preprocess;
  inversion::NnlsConfig nnls;
  inversion::GriffinLimConfig gl;
  toy::AdvConfig adv;
  toy::ClassifierConfig probe;
  toy::GanConfig gan;
  std::size_t gan_k = neighborhood::kDefaultK;
  toy::FactorizedSpec factorized;
  toy::GaussianSpec gaussian;
  BenchConfig bench;
  std::uint64_t seed = 0;

  double f_max_hz() const { return mel.f_max > 0.0 ? mel.f_max : sample_rate / 2.0; }
  /// Pushes `seed` into every seeded component.
  void apply_seed(std::uint64_t s);
  void validate() const;
  /// key = value lines for every known key.
  std::string to_text() const;
};

/// Applies one key. Unknown keys and unparsable or invalid values throw
/// InvalidArgument.
void set_config_value(Config& cfg, const std::string& key, const std::string& value);

Config parse_config(const std::string& text);
Config load_config(const std::filesystem::path& path);

signal::MelFilterbank make_filterbank(const Config& cfg);

}  // namespace gstrument
