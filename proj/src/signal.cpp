#include "gstrument/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/SVD>
#include <unsupported/Eigen/FFT>

#include "gstrument/errors.hpp"
#include "gstrument/parallel.hpp"

namespace gstrument::signal {
namespace {

using Fft = Eigen::FFT<double>;

Fft make_half_spectrum_fft() {
  Fft fft;
  fft.SetFlag(Fft::HalfSpectrum);
  return fft;
}

}  // namespace

void validate(const Waveform& w) {
  require(w.sample_rate > 0, "sample_rate must be positive");
  for (double s : w.samples)
    if (!std::isfinite(s)) throw InvalidArgument("waveform contains non-finite samples");
}

void StftConfig::validate() const {
  require(window_size > 0 && hop_size > 0 && fft_size > 0, "STFT sizes must be positive");
  require(fft_size >= window_size, "fft_size must be >= window_size");
  require(hop_size <= window_size, "hop_size must be <= window_size");
  require(fft_size % 2 == 0, "fft_size must be even");
}

std::vector<double> hann_window(std::size_t size) {
  require(size >= 2, "Hann window size must be >= 2");
  std::vector<double> w(size);
  const double n = static_cast<double>(size);
  for (std::size_t i = 0; i < size; ++i)
    w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / n));
  return w;
}

std::vector<double> reflect_pad(const std::vector<double>& x, std::size_t pad) {
  const std::size_t len = x.size();
  require(len > 0, "cannot pad an empty signal");
  std::vector<double> out(len + 2 * pad);
  const long period = len > 1 ? 2 * static_cast<long>(len - 1) : 1;
  for (std::size_t i = 0; i < out.size(); ++i) {
    long j = static_cast<long>(i) - static_cast<long>(pad);
    if (len == 1) {
      j = 0;
    } else {
      j = ((j % period) + period) % period;
      if (j >= static_cast<long>(len)) j = period - j;
    }
    out[i] = x[static_cast<std::size_t>(j)];
  }
  return out;
}

ComplexSpectrogram frames_to_spectrum(const std::vector<double>& padded, std::size_t frames,
                                      const StftConfig& cfg) {
  cfg.validate();
  require(frames == 0 || padded.size() >= (frames - 1) * cfg.hop_size + cfg.window_size,
          "padded signal too short for the requested frame count");
  const auto window = hann_window(cfg.window_size);
  ComplexSpectrogram out(static_cast<Eigen::Index>(cfg.bins()), static_cast<Eigen::Index>(frames));
  parallel_chunks(frames, [&](std::size_t lo, std::size_t hi) {
    Fft fft = make_half_spectrum_fft();
    std::vector<double> buf(cfg.fft_size, 0.0);
    std::vector<std::complex<double>> spec;
    for (std::size_t t = lo; t < hi; ++t) {
      const std::size_t start = t * cfg.hop_size;
      for (std::size_t n = 0; n < cfg.window_size; ++n) buf[n] = padded[start + n] * window[n];
      fft.fwd(spec, buf);
      for (std::size_t k = 0; k < cfg.bins(); ++k)
        out(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t)) = spec[k];
    }
  });
  return out;
}

std::vector<double> spectrum_to_frames(const ComplexSpectrogram& s, std::size_t padded_length,
                                       const StftConfig& cfg) {
  cfg.validate();
  require(static_cast<std::size_t>(s.rows()) == cfg.bins(), "spectrogram bin count does not match fft_size");
  const auto frames = static_cast<std::size_t>(s.cols());
  require(frames == 0 || padded_length >= (frames - 1) * cfg.hop_size + cfg.window_size,
          "padded length too short for the spectrogram");
  const auto window = hann_window(cfg.window_size);

  // Inverse transforms are independent per frame; the overlap-add below runs
  // in fixed frame order.
  Eigen::MatrixXd segments(static_cast<Eigen::Index>(cfg.window_size), static_cast<Eigen::Index>(frames));
  parallel_chunks(frames, [&](std::size_t lo, std::size_t hi) {
    Fft fft = make_half_spectrum_fft();
    std::vector<std::complex<double>> spec(cfg.bins());
    std::vector<double> buf;
    for (std::size_t t = lo; t < hi; ++t) {
      for (std::size_t k = 0; k < cfg.bins(); ++k)
        spec[k] = s(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t));
      fft.inv(buf, spec, static_cast<Fft::Index>(cfg.fft_size));
      for (std::size_t n = 0; n < cfg.window_size; ++n)
        segments(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(t)) = buf[n] * window[n];
    }
  });

  std::vector<double> y(padded_length, 0.0);
  std::vector<double> norm(padded_length, 0.0);
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t start = t * cfg.hop_size;
    for (std::size_t n = 0; n < cfg.window_size; ++n) {
      y[start + n] += segments(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(t));
      norm[start + n] += window[n] * window[n];
    }
  }
  // Samples no window touches (norm == 0) are left at zero: the minimum-norm
  // least-squares choice.
  for (std::size_t i = 0; i < padded_length; ++i) y[i] = norm[i] > 0.0 ? y[i] / norm[i] : 0.0;
  return y;
}

ComplexSpectrogram stft(const Waveform& w, const StftConfig& cfg) {
  cfg.validate();
  require(!w.samples.empty(), "stft of an empty waveform");
  validate(w);
  const auto padded = reflect_pad(w.samples, cfg.window_size / 2);
  return frames_to_spectrum(padded, cfg.frames_for(w.size()), cfg);
}

Waveform istft(const ComplexSpectrogram& s, const StftConfig& cfg, std::size_t length,
               int sample_rate) {
  cfg.validate();
  require(static_cast<std::size_t>(s.rows()) == cfg.bins(), "spectrogram bin count does not match fft_size");
  require(static_cast<std::size_t>(s.cols()) == cfg.frames_for(length),
          "spectrogram frame count does not match the requested length");
  const auto padded = spectrum_to_frames(s, padded_length(length, cfg), cfg);
  Waveform out;
  out.sample_rate = sample_rate;
  const auto offset = static_cast<std::ptrdiff_t>(cfg.window_size / 2);
  out.samples.assign(padded.begin() + offset, padded.begin() + offset + static_cast<std::ptrdiff_t>(length));
  return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank::MelFilterbank(std::size_t mel_bins, std::size_t fft_size, int sample_rate,
                             double f_min, double f_max)
    : fft_size_(fft_size), sample_rate_(sample_rate), f_min_(f_min), f_max_(f_max) {
  require(mel_bins >= 1, "mel_bins must be >= 1");
  require(fft_size >= 2 && fft_size % 2 == 0, "fft_size must be even and >= 2");
  require(sample_rate > 0, "sample_rate must be positive");
  const double nyquist = sample_rate / 2.0;
  require(f_min >= 0.0 && f_min < f_max && f_max <= nyquist,
          "mel filterbank needs 0 <= f_min < f_max <= sample_rate / 2");

  const std::size_t bins = fft_size / 2 + 1;
  const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(fft_size);
  const double mel_lo = hz_to_mel(f_min);
  const double mel_hi = hz_to_mel(f_max);
  std::vector<double> edges(mel_bins + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / static_cast<double>(mel_bins + 1));

  dense_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(mel_bins), static_cast<Eigen::Index>(bins));
  centers_hz_.resize(mel_bins);
  for (std::size_t m = 0; m < mel_bins; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    centers_hz_[m] = mid;
    double peak = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      const double rise = (f - lo) / (mid - lo);
      const double fall = (hi - f) / (hi - mid);
      const double v = std::max(0.0, std::min(rise, fall));
      dense_(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) = v;
      peak = std::max(peak, v);
    }
    auto row = dense_.row(static_cast<Eigen::Index>(m));
    if (peak > 0.0) {
      row /= peak;
    } else {
      // Filter narrower than the bin spacing: put its unit peak on the
      // nearest bin so that no row is empty.
      const auto k = static_cast<Eigen::Index>(std::clamp(std::lround(mid / bin_hz), 0L, static_cast<long>(bins - 1)));
      row(k) = 1.0;
    }
  }
  factorize();
}

void MelFilterbank::factorize() {
  sparse_ = dense_.sparseView();
  sparse_.makeCompressed();
  sparse_t_ = sparse_.transpose();
  sparse_t_.makeCompressed();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(dense_, Eigen::ComputeThinU | Eigen::ComputeThinV);
  u_ = svd.matrixU();
  s_ = svd.singularValues();
  v_ = svd.matrixV();
}

MelFilterbank MelFilterbank::from_matrix(const Eigen::MatrixXd& m) {
  require(m.rows() >= 1 && m.cols() >= 1, "filterbank matrix must be non-empty");
  require(m.allFinite() && (m.array() >= 0.0).all(), "filterbank entries must be finite and non-negative");
  MelFilterbank fb;
  fb.dense_ = m;
  fb.fft_size_ = static_cast<std::size_t>(2 * (m.cols() - 1));
  fb.factorize();
  return fb;
}

Eigen::MatrixXd MelFilterbank::pseudoinverse(double cutoff) const {
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s_.size());
  const double floor = cutoff * sigma_max();
  for (Eigen::Index i = 0; i < s_.size(); ++i)
    if (s_(i) > floor && s_(i) > 0.0) inv(i) = 1.0 / s_(i);
  return v_ * inv.asDiagonal() * u_.transpose();
}

MelFilterbank mel_filterbank(std::size_t mel_bins, std::size_t fft_size, int sample_rate,
                             double f_min, double f_max) {
  return MelFilterbank(mel_bins, fft_size, sample_rate, f_min, f_max);
}

MelSpectrogram apply_mel(const MelFilterbank& fb, const LinearMagnitude& lin) {
  require(static_cast<std::size_t>(lin.rows()) == fb.bins(),
          "linear magnitude has " + std::to_string(lin.rows()) + " bins, filterbank expects " +
              std::to_string(fb.bins()));
  return fb.sparse() * lin;
}

Waveform preprocess(const Waveform& w, const PreprocessConfig& cfg) {
  require(cfg.duration_s > 0.0, "duration must be positive");
  require(cfg.fade_tau_s > 0.0, "fade time constant must be positive");
  validate(w);
  const auto target = static_cast<std::size_t>(std::lround(cfg.duration_s * w.sample_rate));
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.assign(target, 0.0);
  std::copy_n(w.samples.begin(), std::min(target, w.size()), out.samples.begin());

  double peak = 0.0;
  for (double s : out.samples) peak = std::max(peak, std::abs(s));
  if (peak > 0.0)
    for (double& s : out.samples) s /= peak;

  const double rate = static_cast<double>(w.sample_rate);
  for (std::size_t n = 0; n < target; ++n) {
    const double t = static_cast<double>(n) / rate;
    if (t > cfg.fade_start_s) out.samples[n] *= std::exp(-(t - cfg.fade_start_s) / cfg.fade_tau_s);
  }
  return out;
}

Eigen::MatrixXd fit_frames(const Eigen::MatrixXd& m, std::size_t frames) {
  const auto cols = static_cast<Eigen::Index>(frames);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m.rows(), cols);
  const Eigen::Index keep = std::min(cols, m.cols());
  out.leftCols(keep) = m.leftCols(keep);
  return out;
}

MelSpectrogram analyze(const Waveform& w, const StftConfig& cfg, const MelFilterbank& fb,
                       std::size_t frames) {
  require(cfg.bins() == fb.bins(), "filterbank does not match fft_size");
  const LinearMagnitude mag = stft(w, cfg).cwiseAbs();
  return fit_frames(apply_mel(fb, mag), frames);
}

}  // namespace gstrument::signal
