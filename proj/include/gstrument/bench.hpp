#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gstrument/config.hpp"

namespace gstrument::bench {

/// One synthetic instrument-like tone: harmonics of f0 with per-harmonic
/// exponential decay, preprocessed and analyzed like real input.
struct CorpusItem {
  double f0 = 0.0;
  std::size_t harmonics = 0;
  signal::MelSpectrogram mel;
};

std::vector<CorpusItem> make_corpus(const Config& cfg, const signal::MelFilterbank& fb);

struct InitRun {
  std::size_t iterations = 0;       // iterations to target, or the cap if censored
  bool censored = false;            // target never reached within the cap
  double start_residual = 0.0;
  double final_residual = 0.0;
  std::size_t frame_violations = 0;
  double seconds = 0.0;
};

struct BenchRow {
  std::size_t index = 0;
  double f0 = 0.0;
  double target = 0.0;
  InitRun svd, random, zeros;

  /// Baseline iterations over max(svd iterations, 1).
  double ratio_random() const;
  double ratio_zeros() const;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  double median_ratio_random = 0.0;
  double median_ratio_zeros = 0.0;
  std::size_t frame_violations = 0;
  std::size_t censored_runs = 0;

  /// Deterministic per-input results (no wall times).
  std::string to_csv() const;
  /// Wall time per input and init.
  std::string timing_csv() const;
  std::string summary() const;
};

/// SVD-clip init runs under cfg.nnls; its final residual times
/// bench.target_factor is the target. Random and zero inits then run until
/// they reach the target or bench.baseline_max_iters.
BenchRow bench_one(const signal::MelFilterbank& fb, const signal::MelSpectrogram& mel, const Config& cfg,
                   std::uint64_t seed);

BenchReport run_bench(const Config& cfg);

double median(std::vector<double> v);

}  // namespace gstrument::bench
