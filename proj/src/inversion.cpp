#include "gstrument/inversion.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "gstrument/errors.hpp"

namespace gstrument::inversion {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void check_dims(const MelFilterbank& fb, const Eigen::MatrixXd& mel) {
  require(static_cast<std::size_t>(mel.rows()) == fb.mel_bins(),
          "mel spectrogram has " + std::to_string(mel.rows()) + " rows, filterbank has " +
              std::to_string(fb.mel_bins()));
}

double half_sq(const Eigen::MatrixXd& r) { return 0.5 * r.squaredNorm(); }

}  // namespace

Init parse_init(const std::string& name) {
  if (name == "svd" || name == "svd_clip") return Init::SvdClip;
  if (name == "random") return Init::Random;
  if (name == "zeros" || name == "zero") return Init::Zeros;
  throw InvalidArgument("unknown init '" + name + "' (expected svd, random or zeros)");
}

std::string to_string(Init init) {
  switch (init) {
    case Init::SvdClip: return "svd";
    case Init::Random: return "random";
    case Init::Zeros: return "zeros";
  }
  return "?";
}

void NnlsConfig::validate() const {
  require(max_iters >= 1, "max_iters must be >= 1");
  require(tol > 0.0, "tol must be positive");
  require(svd_cutoff > 0.0 && svd_cutoff < 1.0, "svd_cutoff must lie in (0, 1)");
  if (target_residual) require(*target_residual >= 0.0, "target residual must be non-negative");
}

void GriffinLimConfig::validate() const {
  require(iters >= 1, "Griffin-Lim iters must be >= 1");
  require(momentum >= 0.0 && momentum < 1.0, "Griffin-Lim momentum must lie in [0, 1)");
}

std::optional<std::size_t> ConvergenceTrace::iterations_to(double target) const {
  if (initial <= target) return 0;
  for (std::size_t k = 0; k < residuals.size(); ++k)
    if (residuals[k] <= target) return k + 1;
  return std::nullopt;
}

std::string ConvergenceTrace::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "iteration,residual\n0," << initial << '\n';
  for (std::size_t k = 0; k < residuals.size(); ++k) out << k + 1 << ',' << residuals[k] << '\n';
  return out.str();
}

double residual(const MelFilterbank& fb, const MelSpectrogram& mel, const Eigen::MatrixXd& x) {
  check_dims(fb, mel);
  require(static_cast<std::size_t>(x.rows()) == fb.bins() && x.cols() == mel.cols(),
          "linear magnitude shape does not match");
  return (fb.sparse() * x - mel).norm();
}

Eigen::MatrixXd lstsq_svd(const MelFilterbank& fb, const MelSpectrogram& mel, double svd_cutoff) {
  check_dims(fb, mel);
  require(svd_cutoff > 0.0 && svd_cutoff < 1.0, "svd_cutoff must lie in (0, 1)");
  if (!(fb.sigma_max() > 0.0)) throw SingularOperator("filterbank is the zero operator");
  const auto& s = fb.singular_values();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  const double floor = svd_cutoff * fb.sigma_max();
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > floor) inv(i) = 1.0 / s(i);
  return fb.svd_v() * (inv.asDiagonal() * (fb.svd_u().transpose() * mel));
}

LinearMagnitude clip_nonneg(const Eigen::MatrixXd& x) { return x.cwiseMax(0.0); }

std::pair<LinearMagnitude, ConvergenceTrace> nnls_refine(const MelFilterbank& fb, const MelSpectrogram& mel,
                                                         const LinearMagnitude& x0, const NnlsConfig& cfg) {
  cfg.validate();
  check_dims(fb, mel);
  require(static_cast<std::size_t>(x0.rows()) == fb.bins() && x0.cols() == mel.cols(),
          "initial guess shape does not match");
  require((x0.array() >= 0.0).all(), "initial guess must be non-negative");
  if (!(fb.sigma_max() > 0.0)) throw SingularOperator("filterbank is the zero operator");

  const auto t0 = Clock::now();
  const auto& F = fb.sparse();
  const auto& Ft = fb.sparse_transpose();
  const double lipschitz_step = 1.0 / (fb.sigma_max() * fb.sigma_max());

  ConvergenceTrace trace;
  LinearMagnitude x = x0;
  Eigen::MatrixXd r = F * x - mel;
  Eigen::RowVectorXd frame_res = r.colwise().norm();
  double prev = r.norm();
  trace.initial = prev;
  double step = lipschitz_step;

  auto done = [&](double cur) {
    if (cfg.target_residual && cur <= *cfg.target_residual) return true;
    if (cur == 0.0) return true;
    return std::abs(prev - cur) < cfg.tol * prev;
  };
  if (cfg.target_residual && prev <= *cfg.target_residual) {
    trace.seconds = seconds_since(t0);
    return {x, trace};
  }
  if (prev == 0.0) {
    trace.seconds = seconds_since(t0);
    return {x, trace};
  }

  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    const Eigen::MatrixXd grad = Ft * r;
    LinearMagnitude next;
    Eigen::MatrixXd next_r;
    if (cfg.step_rule == StepRule::Lipschitz) {
      next = (x - step * grad).cwiseMax(0.0);
      next_r = F * next - mel;
    } else {
      // Backtracking on the quadratic upper bound, starting from twice the
      // previous accepted step.
      const double f0 = half_sq(r);
      step *= 2.0;
      for (;;) {
        next = (x - step * grad).cwiseMax(0.0);
        next_r = F * next - mel;
        const Eigen::MatrixXd dx = next - x;
        const double bound = f0 + (grad.array() * dx.array()).sum() + dx.squaredNorm() / (2.0 * step);
        if (half_sq(next_r) <= bound || step <= lipschitz_step) break;
        step *= 0.5;
      }
    }
    x = std::move(next);
    r = std::move(next_r);

    const Eigen::RowVectorXd cur_frames = r.colwise().norm();
    for (Eigen::Index j = 0; j < cur_frames.size(); ++j) {
      const double inc = cur_frames(j) - frame_res(j);
      if (inc > kMonotoneSlack) {
        ++trace.frame_violations;
        trace.worst_frame_increase = std::max(trace.worst_frame_increase, inc);
      }
    }
    frame_res = cur_frames;

    const double cur = r.norm();
    trace.residuals.push_back(cur);
    const bool stop = done(cur);
    prev = cur;
    if (stop) break;
  }
  trace.seconds = seconds_since(t0);
  return {x, trace};
}

LinearMagnitude initial_guess(const MelFilterbank& fb, const MelSpectrogram& mel, const NnlsConfig& cfg) {
  check_dims(fb, mel);
  const auto rows = static_cast<Eigen::Index>(fb.bins());
  switch (cfg.init) {
    case Init::SvdClip:
      return clip_nonneg(lstsq_svd(fb, mel, cfg.svd_cutoff));
    case Init::Zeros:
      return LinearMagnitude::Zero(rows, mel.cols());
    case Init::Random: {
      const double hi = mel.size() ? mel.maxCoeff() : 0.0;
      LinearMagnitude x = LinearMagnitude::Zero(rows, mel.cols());
      if (hi <= 0.0) return x;
      std::mt19937_64 rng(cfg.seed);
      std::uniform_real_distribution<double> u(0.0, hi);
      for (Eigen::Index c = 0; c < x.cols(); ++c)
        for (Eigen::Index r = 0; r < rows; ++r) x(r, c) = u(rng);
      return x;
    }
  }
  throw InvalidArgument("unknown init");
}

std::pair<LinearMagnitude, ConvergenceTrace> mel_to_linear(const MelFilterbank& fb, const MelSpectrogram& mel,
                                                           const NnlsConfig& cfg) {
  cfg.validate();
  const auto t0 = Clock::now();
  LinearMagnitude x0 = initial_guess(fb, mel, cfg);
  auto result = nnls_refine(fb, mel, x0, cfg);
  result.second.seconds = seconds_since(t0);
  return result;
}

std::pair<signal::Waveform, ConvergenceTrace> griffin_lim(const LinearMagnitude& mag,
                                                          const signal::StftConfig& stft_cfg,
                                                          const GriffinLimConfig& gl, std::size_t length,
                                                          int sample_rate) {
  stft_cfg.validate();
  gl.validate();
  require(static_cast<std::size_t>(mag.rows()) == stft_cfg.bins(), "magnitude bin count does not match fft_size");
  require(static_cast<std::size_t>(mag.cols()) == stft_cfg.frames_for(length),
          "magnitude frame count does not match the requested length");
  require(mag.allFinite() && (mag.array() >= 0.0).all(), "magnitude must be finite and non-negative");

  const auto t0 = Clock::now();
  const std::size_t frames = static_cast<std::size_t>(mag.cols());
  const std::size_t padded_len = signal::padded_length(length, stft_cfg);

  // Interior bins stand for a conjugate pair in the two-sided spectrum.
  Eigen::VectorXd bin_weight = Eigen::VectorXd::Constant(mag.rows(), 2.0);
  bin_weight(0) = 1.0;
  bin_weight(mag.rows() - 1) = 1.0;

  signal::ComplexSpectrogram target = mag.cast<std::complex<double>>();
  if (gl.init_phase == PhaseInit::Random) {
    std::mt19937_64 rng(gl.seed);
    std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
    for (Eigen::Index c = 0; c < target.cols(); ++c)
      for (Eigen::Index r = 0; r < target.rows(); ++r) target(r, c) = std::polar(mag(r, c), u(rng));
  }

  auto project = [&](const signal::ComplexSpectrogram& x) {
    signal::ComplexSpectrogram p(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c)
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double a = std::abs(x(r, c));
        p(r, c) = a > 0.0 ? x(r, c) * (mag(r, c) / a) : std::complex<double>(mag(r, c), 0.0);
      }
    return p;
  };

  ConvergenceTrace trace;
  {
    const Eigen::MatrixXd diff = -mag;
    trace.initial = std::sqrt((bin_weight.asDiagonal() * diff.cwiseAbs2()).sum());
  }
  std::vector<double> padded;
  signal::ComplexSpectrogram prev_proj = target;
  for (std::size_t it = 0; it < gl.iters; ++it) {
    padded = signal::spectrum_to_frames(target, padded_len, stft_cfg);
    const signal::ComplexSpectrogram est = signal::frames_to_spectrum(padded, frames, stft_cfg);
    const Eigen::MatrixXd diff = est.cwiseAbs() - mag;
    trace.residuals.push_back(std::sqrt((bin_weight.asDiagonal() * diff.cwiseAbs2()).sum()));
    if (it + 1 == gl.iters) break;
    signal::ComplexSpectrogram proj = project(est);
    if (gl.momentum > 0.0) {
      target = proj + gl.momentum * (proj - prev_proj);
      prev_proj = std::move(proj);
    } else {
      target = std::move(proj);
    }
  }

  signal::Waveform out;
  out.sample_rate = sample_rate;
  const auto offset = static_cast<std::ptrdiff_t>(stft_cfg.window_size / 2);
  out.samples.assign(padded.begin() + offset, padded.begin() + offset + static_cast<std::ptrdiff_t>(length));
  trace.seconds = seconds_since(t0);
  return {out, trace};
}

std::pair<signal::Waveform, InversionReport> invert_mel(const MelFilterbank& fb, const MelSpectrogram& mel,
                                                        const signal::StftConfig& stft_cfg,
                                                        const NnlsConfig& nnls_cfg, const GriffinLimConfig& gl_cfg,
                                                        std::size_t length, int sample_rate) {
  require(fb.bins() == stft_cfg.bins(), "filterbank does not match fft_size");
  check_dims(fb, mel);
  const auto t0 = Clock::now();
  InversionReport report;
  auto [lin, nnls_trace] = mel_to_linear(fb, mel, nnls_cfg);
  report.nnls = std::move(nnls_trace);
  report.mel_to_linear_seconds = report.nnls.seconds;

  const LinearMagnitude mag = signal::fit_frames(lin, stft_cfg.frames_for(length));
  auto [wave, gl_trace] = griffin_lim(mag, stft_cfg, gl_cfg, length, sample_rate);
  report.griffin_lim = std::move(gl_trace);
  report.griffin_lim_seconds = report.griffin_lim.seconds;
  report.total_seconds = seconds_since(t0);
  return {std::move(wave), std::move(report)};
}

}  // namespace gstrument::inversion
