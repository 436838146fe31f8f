#include <doctest.h>

#include <cmath>
#include <random>

#include "gstrument/errors.hpp"
#include "gstrument/inversion.hpp"
#include "oracles.hpp"

using namespace gstrument;
using namespace gstrument::inversion;
using signal::MelFilterbank;

namespace {

Eigen::MatrixXd random_nonneg(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = u(rng);
  return m;
}

Eigen::MatrixXd random_gauss(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = g(rng);
  return m;
}

NnlsConfig tight() {
  NnlsConfig c;
  c.max_iters = 200000;
  c.tol = 1e-15;
  return c;
}

int dominant_bin(const std::vector<double>& s, const signal::StftConfig& cfg) {
  const auto spec = signal::stft(signal::Waveform{s, 16000}, cfg);
  Eigen::Index peak = 0;
  spec.cwiseAbs().rowwise().sum().maxCoeff(&peak);
  return static_cast<int>(peak);
}

}  // namespace

TEST_CASE("lstsq_svd closed forms") {
  const auto id = MelFilterbank::from_matrix(Eigen::MatrixXd::Identity(4, 4));
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd m = random_nonneg(4, 3, rng);
  CHECK((lstsq_svd(id, m) - m).cwiseAbs().maxCoeff() <= 1e-14);

  Eigen::MatrixXd d(2, 2);
  d << 1, 0, 0, 2;
  Eigen::MatrixXd col(2, 1);
  col << 3, 8;
  const Eigen::MatrixXd x = lstsq_svd(MelFilterbank::from_matrix(d), col);
  CHECK(x(0, 0) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(x(1, 0) == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("lstsq_svd matches the normal equations") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd f = random_nonneg(6, 4, rng) + 0.5 * Eigen::MatrixXd::Identity(6, 4);
    const Eigen::MatrixXd m = random_gauss(6, 3, rng);
    const Eigen::MatrixXd ref = (f.transpose() * f).ldlt().solve(f.transpose() * m);
    const Eigen::MatrixXd got = lstsq_svd(MelFilterbank::from_matrix(f), m);
    CHECK((got - ref).norm() <= 1e-8 * ref.norm());
  }
}

TEST_CASE("lstsq_svd errors") {
  CHECK_THROWS_AS(lstsq_svd(MelFilterbank::from_matrix(Eigen::MatrixXd::Zero(3, 2)), Eigen::MatrixXd::Ones(3, 1)),
                  SingularOperator);
  CHECK_THROWS_AS(lstsq_svd(MelFilterbank::from_matrix(Eigen::MatrixXd::Ones(3, 2)), Eigen::MatrixXd::Ones(2, 1)),
                  InvalidArgument);
}

TEST_CASE("clip_nonneg") {
  Eigen::MatrixXd x(3, 1);
  x << -1, 0, 2;
  const auto c = clip_nonneg(x);
  CHECK(c(0, 0) == 0.0);
  CHECK(c(1, 0) == 0.0);
  CHECK(c(2, 0) == 2.0);
  CHECK(clip_nonneg(-Eigen::MatrixXd::Ones(2, 2)).cwiseAbs().maxCoeff() == 0.0);
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd r = random_gauss(5, 5, rng);
  CHECK(clip_nonneg(clip_nonneg(r)) == clip_nonneg(r));
}

TEST_CASE("nnls_refine from the optimum does not move") {
  Eigen::MatrixXd f(3, 2);
  f << 1, 0.2, 0.3, 1, 0.5, 0.5;
  Eigen::VectorXd m(3);
  m << 1.0, -2.0, 0.4;  // optimum has x2 = 0 active
  const auto fb = MelFilterbank::from_matrix(f);
  const Eigen::VectorXd opt = oracle::nnls_exhaustive(f, m);
  CHECK(opt(1) == 0.0);
  auto [x, trace] = nnls_refine(fb, Eigen::MatrixXd(m), Eigen::MatrixXd(opt), NnlsConfig{});
  CHECK(trace.iterations() <= 1);
  CHECK(std::abs(trace.final_residual() - trace.initial) <= 1e-12);
  CHECK((x - opt).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("nnls_refine with identity converges to m") {
  const auto id = MelFilterbank::from_matrix(Eigen::MatrixXd::Identity(5, 5));
  std::mt19937_64 rng(6);
  const Eigen::MatrixXd m = random_nonneg(5, 4, rng);
  auto [x, trace] = nnls_refine(id, m, Eigen::MatrixXd::Zero(5, 4), NnlsConfig{});
  CHECK((x - m).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(trace.final_residual() <= 1e-12);
}

TEST_CASE("nnls_refine matches exhaustive NNLS on random 5x3 systems") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd f = random_nonneg(5, 3, rng);
    const Eigen::VectorXd m = random_gauss(5, 1, rng);
    const Eigen::VectorXd opt = oracle::nnls_exhaustive(f, m);
    const double ref = (f * opt - m).norm();
    const auto fb = MelFilterbank::from_matrix(f);
    auto [x, trace] = mel_to_linear(fb, Eigen::MatrixXd(m), tight());
    CHECK(std::abs(trace.final_residual() - ref) <= 1e-5 * std::max(ref, 1e-12));
    CHECK(x.minCoeff() >= 0.0);
    CHECK(trace.frame_violations == 0);
  }
}

TEST_CASE("backtracking step rule also reaches the optimum") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd f = random_nonneg(6, 4, rng);
    const Eigen::VectorXd m = random_gauss(6, 1, rng);
    const double ref = (f * oracle::nnls_exhaustive(f, m) - m).norm();
    NnlsConfig cfg = tight();
    cfg.step_rule = StepRule::Backtracking;
    auto [x, trace] = mel_to_linear(MelFilterbank::from_matrix(f), Eigen::MatrixXd(m), cfg);
    CHECK(std::abs(trace.final_residual() - ref) <= 1e-5 * std::max(ref, 1e-12));
    CHECK(trace.frame_violations == 0);
  }
}

TEST_CASE("nnls_refine rejects negative or misshapen starts") {
  const auto fb = MelFilterbank::from_matrix(Eigen::MatrixXd::Identity(2, 2));
  Eigen::MatrixXd x0(2, 1);
  x0 << -0.1, 1.0;
  CHECK_THROWS_AS(nnls_refine(fb, Eigen::MatrixXd::Ones(2, 1), x0, NnlsConfig{}), InvalidArgument);
  CHECK_THROWS_AS(nnls_refine(fb, Eigen::MatrixXd::Ones(2, 1), Eigen::MatrixXd::Zero(3, 1), NnlsConfig{}),
                  InvalidArgument);
}

TEST_CASE("nnls config validation") {
  NnlsConfig c;
  CHECK_NOTHROW(c.validate());
  c.max_iters = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = NnlsConfig{};
  c.tol = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = NnlsConfig{};
  c.svd_cutoff = 1.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  CHECK(parse_init("svd") == Init::SvdClip);
  CHECK(parse_init("random") == Init::Random);
  CHECK(parse_init("zeros") == Init::Zeros);
  CHECK_THROWS_AS(parse_init("lbfgs"), InvalidArgument);
}

TEST_CASE("gradient F^T(Fx - m) matches central differences") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd f = random_nonneg(5, 4, rng);
    const Eigen::VectorXd m = random_gauss(5, 1, rng);
    const Eigen::VectorXd x = random_nonneg(4, 1, rng);
    const auto fb = MelFilterbank::from_matrix(f);
    const Eigen::VectorXd g = fb.sparse_transpose() * (fb.sparse() * x - m);
    const auto fd = oracle::fd_gradient([&](const Eigen::VectorXd& v) { return 0.5 * (f * v - m).squaredNorm(); }, x);
    CHECK(oracle::rel_error(g, fd) <= 1e-5);
  }
}

TEST_CASE("mel_to_linear recovers a constructed overdetermined system") {
  std::mt19937_64 rng(10);
  const Eigen::MatrixXd f = random_nonneg(12, 6, rng);
  const Eigen::MatrixXd x = random_nonneg(6, 3, rng);
  const Eigen::MatrixXd mel = f * x;
  NnlsConfig cfg;
  cfg.max_iters = 5000;
  auto [lin, trace] = mel_to_linear(MelFilterbank::from_matrix(f), mel, cfg);
  CHECK(trace.final_residual() <= 1e-4 * mel.norm());
  CHECK(lin.minCoeff() >= 0.0);
}

TEST_CASE("mel_to_linear on zero mel") {
  std::mt19937_64 rng(12);
  const auto fb = MelFilterbank::from_matrix(random_nonneg(4, 6, rng));
  for (Init init : {Init::SvdClip, Init::Random, Init::Zeros}) {
    NnlsConfig cfg;
    cfg.init = init;
    auto [lin, trace] = mel_to_linear(fb, Eigen::MatrixXd::Zero(4, 3), cfg);
    CHECK(lin.cwiseAbs().maxCoeff() == 0.0);
    CHECK(trace.final_residual() == 0.0);
  }
}

TEST_CASE("random init is seeded and non-negative") {
  std::mt19937_64 rng(13);
  const auto fb = MelFilterbank::from_matrix(random_nonneg(4, 6, rng));
  const Eigen::MatrixXd mel = random_nonneg(4, 5, rng);
  NnlsConfig cfg;
  cfg.init = Init::Random;
  cfg.seed = 5;
  const auto a = initial_guess(fb, mel, cfg);
  const auto b = initial_guess(fb, mel, cfg);
  CHECK(a == b);
  CHECK(a.minCoeff() >= 0.0);
  CHECK(a.maxCoeff() < mel.maxCoeff());
}

TEST_CASE("convergence trace helpers") {
  ConvergenceTrace t;
  t.initial = 10.0;
  t.residuals = {5.0, 2.0, 1.0};
  CHECK(t.iterations_to(10.0) == 0u);
  CHECK(t.iterations_to(2.5) == 2u);
  CHECK(t.iterations_to(1.0) == 3u);
  CHECK_FALSE(t.iterations_to(0.5).has_value());
  CHECK(t.to_csv() == "iteration,residual\n0,10\n1,5\n2,2\n3,1\n");
}

TEST_CASE("griffin-lim on a sine") {
  const signal::StftConfig cfg;
  const std::size_t len = 16000;
  const auto s = oracle::sine(1000.0, len, 16000);
  const Eigen::MatrixXd mag = signal::stft(signal::Waveform{s, 16000}, cfg).cwiseAbs();
  auto [w, trace] = griffin_lim(mag, cfg, GriffinLimConfig{}, len);
  REQUIRE(w.size() == len);
  CHECK(trace.iterations() == 64);
  for (std::size_t k = 0; k < trace.residuals.size(); ++k) {
    const double prev = k == 0 ? trace.initial : trace.residuals[k - 1];
    CHECK(trace.residuals[k] <= prev);
  }
  CHECK(oracle::aligned_snr_db(w.samples, s, cfg.window_size, len - cfg.window_size, 16) >= 20.0);
  CHECK(std::abs(dominant_bin(w.samples, cfg) - dominant_bin(s, cfg)) <= 1);
}

TEST_CASE("griffin-lim inconsistency never increases on random magnitudes") {
  const signal::StftConfig cfg;
  const std::size_t len = 3000;
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 3; ++trial) {
    const Eigen::MatrixXd mag = random_nonneg(1025, static_cast<Eigen::Index>(cfg.frames_for(len)), rng);
    GriffinLimConfig gl;
    gl.iters = 16;
    auto [w, trace] = griffin_lim(mag, cfg, gl, len);
    for (std::size_t k = 0; k < trace.residuals.size(); ++k) {
      const double prev = k == 0 ? trace.initial : trace.residuals[k - 1];
      CHECK(trace.residuals[k] <= prev);
    }
  }
}

TEST_CASE("griffin-lim edge cases and determinism") {
  const signal::StftConfig cfg;
  const std::size_t len = 4000;
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(1025, static_cast<Eigen::Index>(cfg.frames_for(len)));
  auto [w, trace] = griffin_lim(zero, cfg, GriffinLimConfig{}, len);
  for (double v : w.samples) CHECK(v == 0.0);

  Eigen::MatrixXd neg = zero;
  neg(3, 3) = -1.0;
  CHECK_THROWS_AS(griffin_lim(neg, cfg, GriffinLimConfig{}, len), InvalidArgument);

  std::mt19937_64 rng(21);
  const Eigen::MatrixXd mag = random_nonneg(1025, static_cast<Eigen::Index>(cfg.frames_for(len)), rng);
  GriffinLimConfig gl;
  gl.iters = 8;
  gl.init_phase = PhaseInit::Random;
  gl.seed = 4;
  const auto a = griffin_lim(mag, cfg, gl, len);
  const auto b = griffin_lim(mag, cfg, gl, len);
  CHECK(a.first.samples == b.first.samples);
  CHECK(a.second.residuals == b.second.residuals);

  gl.momentum = 0.99;
  CHECK_NOTHROW(griffin_lim(mag, cfg, gl, len));
  gl.momentum = 1.0;
  CHECK_THROWS_AS(griffin_lim(mag, cfg, gl, len), InvalidArgument);
  gl = GriffinLimConfig{};
  gl.iters = 0;
  CHECK_THROWS_AS(griffin_lim(mag, cfg, gl, len), InvalidArgument);
}

TEST_CASE("invert_mel round trip keeps the dominant frequency") {
  const signal::StftConfig cfg;
  const auto fb = signal::mel_filterbank(512, 2048, 16000, 0.0, 8000.0);
  const auto s = signal::preprocess(signal::Waveform{oracle::sine(1000.0, 16000, 16000), 16000});
  const auto mel = signal::analyze(s, cfg, fb);
  auto [w, report] = invert_mel(fb, mel, cfg, NnlsConfig{}, GriffinLimConfig{}, 16000);
  REQUIRE(w.size() == 16000);
  CHECK(std::abs(dominant_bin(w.samples, cfg) - dominant_bin(s.samples, cfg)) <= 1);
  CHECK(oracle::aligned_snr_db(w.samples, s.samples, cfg.window_size, 16000 - cfg.window_size, 16) >= 20.0);
  CHECK(report.nnls.iterations() >= 1);
  CHECK(report.griffin_lim.iterations() == 64);
  CHECK(report.mel_to_linear_seconds > 0.0);
  CHECK(report.griffin_lim_seconds > 0.0);
  CHECK(report.total_seconds >= report.mel_to_linear_seconds + report.griffin_lim_seconds);

  auto [silent, r2] = invert_mel(fb, Eigen::MatrixXd::Zero(512, 256), cfg, NnlsConfig{}, GriffinLimConfig{}, 16000);
  for (double v : silent.samples) CHECK(v == 0.0);
  CHECK_THROWS_AS(invert_mel(fb, Eigen::MatrixXd::Zero(500, 256), cfg, NnlsConfig{}, GriffinLimConfig{}, 16000),
                  InvalidArgument);
}
