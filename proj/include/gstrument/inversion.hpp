#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gstrument/signal.hpp"

namespace gstrument::inversion {

using signal::LinearMagnitude;
using signal::MelFilterbank;
using signal::MelSpectrogram;

enum class Init { SvdClip, Random, Zeros };
enum class StepRule { Lipschitz, Backtracking };

Init parse_init(const std::string& name);
std::string to_string(Init init);

struct NnlsConfig {
  std::size_t max_iters = 200;
  StepRule step_rule = StepRule::Lipschitz;
  // Stop once |r_{k-1} - r_k| / r_{k-1} < tol.
  double tol = 1e-6;
  Init init = Init::SvdClip;
  // Singular values below svd_cutoff * sigma_max are treated as zero.
  double svd_cutoff = 1e-8;
  // Seed for Init::Random.
  std::uint64_t seed = 0;
  // Optional early exit once the Frobenius residual reaches this value.
  std::optional<double> target_residual;

  void validate() const;
};

enum class PhaseInit { Zero, Random };

struct GriffinLimConfig {
  std::size_t iters = 64;
  double momentum = 0.0;
  PhaseInit init_phase = PhaseInit::Zero;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Residual history of an iterative solve. `residuals[k]` is the value after
/// iteration k + 1; `initial` is the value at the starting point.
struct ConvergenceTrace {
  double initial = 0.0;
  std::vector<double> residuals;
  double seconds = 0.0;
  // Per-frame checks of r_{k+1} <= r_k + 1e-12 that failed (NNLS only).
  std::size_t frame_violations = 0;
  double worst_frame_increase = 0.0;

  std::size_t iterations() const { return residuals.size(); }
  double final_residual() const { return residuals.empty() ? initial : residuals.back(); }
  /// Number of iterations until the residual first drops to `target` or
  /// below (0 if the start already does); nullopt if it never does.
  std::optional<std::size_t> iterations_to(double target) const;
  /// "iteration,residual" rows, iteration 0 being the starting point.
  std::string to_csv() const;
};

inline constexpr double kMonotoneSlack = 1e-12;

/// Minimum-norm unconstrained solution V S^+ U^T mel (may contain negatives).
/// Throws SingularOperator for an all-zero filterbank.
Eigen::MatrixXd lstsq_svd(const MelFilterbank& fb, const MelSpectrogram& mel, double svd_cutoff = 1e-8);

LinearMagnitude clip_nonneg(const Eigen::MatrixXd& x);

/// Projected gradient x <- max(x - eta F^T (F x - m), 0), all frames in lock
/// step; the Frobenius residual over all frames drives the stopping rule.
std::pair<LinearMagnitude, ConvergenceTrace> nnls_refine(const MelFilterbank& fb, const MelSpectrogram& mel,
                                                         const LinearMagnitude& x0, const NnlsConfig& cfg);

/// Starting point for mel_to_linear under cfg.init.
LinearMagnitude initial_guess(const MelFilterbank& fb, const MelSpectrogram& mel, const NnlsConfig& cfg);

std::pair<LinearMagnitude, ConvergenceTrace> mel_to_linear(const MelFilterbank& fb, const MelSpectrogram& mel,
                                                           const NnlsConfig& cfg);

/// Frobenius norm of F x - m.
double residual(const MelFilterbank& fb, const MelSpectrogram& mel, const Eigen::MatrixXd& x);

/// Griffin-Lim phase recovery. `mag` must have stft_cfg.bins() rows and
/// stft_cfg.frames_for(length) columns. The trace records the spectral
/// inconsistency || |STFT(x_n)| - mag || measured over the full two-sided
/// spectrum, the norm in which each synthesis step is a least-squares
/// projection.
std::pair<signal::Waveform, ConvergenceTrace> griffin_lim(const LinearMagnitude& mag,
                                                          const signal::StftConfig& stft_cfg,
                                                          const GriffinLimConfig& gl, std::size_t length,
                                                          int sample_rate = signal::kDefaultSampleRate);

struct InversionReport {
  ConvergenceTrace nnls;
  ConvergenceTrace griffin_lim;
  double mel_to_linear_seconds = 0.0;
  double griffin_lim_seconds = 0.0;
  double total_seconds = 0.0;
};

/// mel -> linear magnitude -> Griffin-Lim. The linear magnitude is trimmed
/// or zero-padded to the frame count `length` implies.
std::pair<signal::Waveform, InversionReport> invert_mel(const MelFilterbank& fb, const MelSpectrogram& mel,
                                                        const signal::StftConfig& stft_cfg,
                                                        const NnlsConfig& nnls_cfg, const GriffinLimConfig& gl_cfg,
                                                        std::size_t length,
                                                        int sample_rate = signal::kDefaultSampleRate);

}  // namespace gstrument::inversion
