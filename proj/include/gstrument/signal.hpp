#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace gstrument::signal {

inline constexpr int kDefaultSampleRate = 16000;
inline constexpr std::size_t kDefaultFrames = 256;

struct Waveform {
  std::vector<double> samples;
  int sample_rate = kDefaultSampleRate;

  std::size_t size() const { return samples.size(); }
};

/// Throws InvalidArgument if the rate is non-positive or any sample is not finite.
void validate(const Waveform& w);

struct StftConfig {
  std::size_t window_size = 1024;
  std::size_t hop_size = 64;
  // Power-of-two default; 2024 is accepted as an override.
  std::size_t fft_size = 2048;

  std::size_t bins() const { return fft_size / 2 + 1; }
  /// Frames produced for a signal of `length` samples.
  std::size_t frames_for(std::size_t length) const { return 1 + length / hop_size; }
  void validate() const;
};

/// bins x frames. Column t is the spectrum of frame t.
using ComplexSpectrogram = Eigen::MatrixXcd;
/// bins x frames, non-negative.
using LinearMagnitude = Eigen::MatrixXd;
/// mel_bins x frames, non-negative.
using MelSpectrogram = Eigen::MatrixXd;

/// Periodic Hann: w[n] = 0.5 (1 - cos(2 pi n / size)).
std::vector<double> hann_window(std::size_t size);

/// Center-padded (reflect, window_size / 2 each side) short-time Fourier
/// transform. Each frame is windowed and zero-padded to fft_size.
ComplexSpectrogram stft(const Waveform& w, const StftConfig& cfg);

/// Weighted overlap-add inverse of stft(), normalized by the summed squared
/// window. Returns exactly `length` samples. `s` must have
/// cfg.frames_for(length) columns.
Waveform istft(const ComplexSpectrogram& s, const StftConfig& cfg, std::size_t length,
               int sample_rate = kDefaultSampleRate);

// Frame-level primitives on an already padded signal. stft()/istft() are
// these plus reflect padding and trimming; Griffin-Lim iterates on them
// directly so that each synthesis step is an exact least-squares projection.
ComplexSpectrogram frames_to_spectrum(const std::vector<double>& padded, std::size_t frames,
                                      const StftConfig& cfg);
std::vector<double> spectrum_to_frames(const ComplexSpectrogram& s, std::size_t padded_length,
                                       const StftConfig& cfg);
/// Length of the padded signal for `length` samples: length + window_size.
inline std::size_t padded_length(std::size_t length, const StftConfig& cfg) {
  return length + cfg.window_size;
}
std::vector<double> reflect_pad(const std::vector<double>& x, std::size_t pad);

/// HTK mel scale.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular mel filterbank F_mel (mel_bins x bins) and its cached SVD.
class MelFilterbank {
 public:
  MelFilterbank(std::size_t mel_bins, std::size_t fft_size, int sample_rate, double f_min,
                double f_max);

  std::size_t mel_bins() const { return static_cast<std::size_t>(dense_.rows()); }
  std::size_t bins() const { return static_cast<std::size_t>(dense_.cols()); }
  std::size_t fft_size() const { return fft_size_; }
  int sample_rate() const { return sample_rate_; }
  double f_min() const { return f_min_; }
  double f_max() const { return f_max_; }

  const Eigen::MatrixXd& dense() const { return dense_; }
  const Eigen::SparseMatrix<double>& sparse() const { return sparse_; }
  const Eigen::SparseMatrix<double>& sparse_transpose() const { return sparse_t_; }
  /// Center frequency (Hz) of each filter.
  const std::vector<double>& centers_hz() const { return centers_hz_; }

  // Thin SVD F = U diag(S) V^T from the divide-and-conquer solver.
  const Eigen::MatrixXd& svd_u() const { return u_; }
  const Eigen::VectorXd& singular_values() const { return s_; }
  const Eigen::MatrixXd& svd_v() const { return v_; }
  double sigma_max() const { return s_.size() ? s_(0) : 0.0; }

  /// Pseudoinverse with singular values below cutoff * sigma_max dropped.
  Eigen::MatrixXd pseudoinverse(double cutoff) const;

  /// Builds a filterbank from an arbitrary non-negative matrix. Used for
  /// small synthetic systems; centers are left empty.
  static MelFilterbank from_matrix(const Eigen::MatrixXd& m);

 private:
  MelFilterbank() = default;
  void factorize();

  Eigen::MatrixXd dense_;
  Eigen::SparseMatrix<double> sparse_;
  Eigen::SparseMatrix<double> sparse_t_;
  std::vector<double> centers_hz_;
  Eigen::MatrixXd u_;
  Eigen::VectorXd s_;
  Eigen::MatrixXd v_;
  std::size_t fft_size_ = 0;
  int sample_rate_ = 0;
  double f_min_ = 0, f_max_ = 0;
};

MelFilterbank mel_filterbank(std::size_t mel_bins, std::size_t fft_size, int sample_rate,
                             double f_min, double f_max);

MelSpectrogram apply_mel(const MelFilterbank& fb, const LinearMagnitude& lin);

struct PreprocessConfig {
  double duration_s = 1.0;
  double fade_start_s = 0.75;
  double fade_tau_s = 0.1;
};

/// Trim or zero-pad to the duration, peak-normalize, then apply an
/// exponential fade past fade_start_s. Silence passes through unchanged.
Waveform preprocess(const Waveform& w, const PreprocessConfig& cfg = {});

/// |stft| -> mel -> time axis fitted to `frames` columns (zero-pad or trim).
MelSpectrogram analyze(const Waveform& w, const StftConfig& cfg, const MelFilterbank& fb,
                       std::size_t frames = kDefaultFrames);

/// Fits the time axis of `m` to exactly `frames` columns.
Eigen::MatrixXd fit_frames(const Eigen::MatrixXd& m, std::size_t frames);

}  // namespace gstrument::signal
