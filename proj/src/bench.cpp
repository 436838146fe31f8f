#include "gstrument/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "gstrument/errors.hpp"
#include "gstrument/parallel.hpp"

namespace gstrument::bench {
namespace {

InitRun run_init(const signal::MelFilterbank& fb, const signal::MelSpectrogram& mel,
                 const inversion::NnlsConfig& cfg, std::optional<double> target) {
  const auto t0 = std::chrono::steady_clock::now();
  auto [x, trace] = inversion::mel_to_linear(fb, mel, cfg);
  InitRun run;
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  run.start_residual = trace.initial;
  run.final_residual = trace.final_residual();
  run.frame_violations = trace.frame_violations;
  if (target) {
    const auto hit = trace.iterations_to(*target);
    run.censored = !hit.has_value();
    run.iterations = hit.value_or(trace.iterations());
  }
  return run;
}

std::string num(double v) {
  std::ostringstream o;
  o.precision(12);
  o << v;
  return o.str();
}

}  // namespace

double BenchRow::ratio_random() const {
  return static_cast<double>(random.iterations) / static_cast<double>(std::max<std::size_t>(svd.iterations, 1));
}

double BenchRow::ratio_zeros() const {
  return static_cast<double>(zeros.iterations) / static_cast<double>(std::max<std::size_t>(svd.iterations, 1));
}

double median(std::vector<double> v) {
  require(!v.empty(), "median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<CorpusItem> make_corpus(const Config& cfg, const signal::MelFilterbank& fb) {
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> log_f0(std::log(65.0), std::log(1000.0));
  std::uniform_int_distribution<int> n_harm(4, 16);
  std::uniform_real_distribution<double> rolloff(0.5, 1.5);
  std::uniform_real_distribution<double> decay(1.5, 8.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const auto length = static_cast<std::size_t>(std::llround(cfg.preprocess.duration_s * cfg.sample_rate));
  const double nyquist = cfg.sample_rate / 2.0;
  std::vector<CorpusItem> corpus(cfg.bench.inputs);
  for (auto& item : corpus) {
    item.f0 = std::exp(log_f0(rng));
    const int harmonics = n_harm(rng);
    const double tilt = rolloff(rng);
    const double base_decay = decay(rng);
    std::vector<double> amp, rate, phase, freq;
    for (int h = 1; h <= harmonics; ++h) {
      const double f = item.f0 * h;
      const double a = std::pow(h, -tilt) * (0.5 + 0.5 * unit(rng));
      const double r = base_decay * (1.0 + 0.3 * (h - 1));
      const double ph = 2.0 * std::numbers::pi * unit(rng);
      if (f >= nyquist) continue;
      freq.push_back(f);
      amp.push_back(a);
      rate.push_back(r);
      phase.push_back(ph);
    }
    item.harmonics = freq.size();
    const double attack = 0.005 + 0.02 * unit(rng);
    signal::Waveform w;
    w.sample_rate = cfg.sample_rate;
    w.samples.resize(length);
    for (std::size_t n = 0; n < length; ++n) {
      const double t = static_cast<double>(n) / cfg.sample_rate;
      const double env_attack = std::min(1.0, t / attack);
      double s = 0.0;
      for (std::size_t h = 0; h < freq.size(); ++h)
        s += amp[h] * std::exp(-rate[h] * t) * std::sin(2.0 * std::numbers::pi * freq[h] * t + phase[h]);
      w.samples[n] = env_attack * s;
    }
    item.mel = signal::analyze(signal::preprocess(w, cfg.preprocess), cfg.stft, fb, cfg.mel.frames);
  }
  return corpus;
}

BenchRow bench_one(const signal::MelFilterbank& fb, const signal::MelSpectrogram& mel, const Config& cfg,
                   std::uint64_t seed) {
  BenchRow row;
  inversion::NnlsConfig svd_cfg = cfg.nnls;
  svd_cfg.init = inversion::Init::SvdClip;
  svd_cfg.target_residual.reset();
  {
    const auto t0 = std::chrono::steady_clock::now();
    auto [x, trace] = inversion::mel_to_linear(fb, mel, svd_cfg);
    row.svd.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    row.svd.start_residual = trace.initial;
    row.svd.final_residual = trace.final_residual();
    row.svd.frame_violations = trace.frame_violations;
    row.target = cfg.bench.target_factor * trace.final_residual();
    // The run converged to its own final value, so the target is always reached.
    row.svd.iterations = trace.iterations_to(row.target).value_or(trace.iterations());
  }

  inversion::NnlsConfig base = cfg.nnls;
  base.max_iters = cfg.bench.baseline_max_iters;
  base.tol = cfg.bench.baseline_tol;
  base.target_residual = row.target;
  base.seed = seed;
  base.init = inversion::Init::Random;
  row.random = run_init(fb, mel, base, row.target);
  base.init = inversion::Init::Zeros;
  row.zeros = run_init(fb, mel, base, row.target);
  return row;
}

BenchReport run_bench(const Config& cfg) {
  cfg.validate();
  const auto fb = make_filterbank(cfg);
  const auto corpus = make_corpus(cfg, fb);
  BenchReport report;
  report.rows.resize(corpus.size());
  parallel_for(corpus.size(), [&](std::size_t i) {
    BenchRow row = bench_one(fb, corpus[i].mel, cfg, cfg.seed + 1000 + i);
    row.index = i;
    row.f0 = corpus[i].f0;
    report.rows[i] = std::move(row);
  });
  std::vector<double> rr, rz;
  for (const auto& row : report.rows) {
    rr.push_back(row.ratio_random());
    rz.push_back(row.ratio_zeros());
    report.frame_violations += row.svd.frame_violations + row.random.frame_violations + row.zeros.frame_violations;
    report.censored_runs += row.random.censored + row.zeros.censored;
  }
  report.median_ratio_random = median(rr);
  report.median_ratio_zeros = median(rz);
  return report;
}

std::string BenchReport::to_csv() const {
  std::ostringstream out;
  out << "index,f0_hz,target_residual,svd_start_residual,svd_final_residual,svd_iters,"
         "random_start_residual,random_iters,random_censored,zeros_start_residual,zeros_iters,zeros_censored,"
         "ratio_random,ratio_zeros,frame_violations\n";
  for (const auto& r : rows) {
    out << r.index << ',' << num(r.f0) << ',' << num(r.target) << ',' << num(r.svd.start_residual) << ','
        << num(r.svd.final_residual) << ',' << r.svd.iterations << ',' << num(r.random.start_residual) << ','
        << r.random.iterations << ',' << r.random.censored << ',' << num(r.zeros.start_residual) << ','
        << r.zeros.iterations << ',' << r.zeros.censored << ',' << num(r.ratio_random()) << ','
        << num(r.ratio_zeros()) << ','
        << r.svd.frame_violations + r.random.frame_violations + r.zeros.frame_violations << '\n';
  }
  return out.str();
}

std::string BenchReport::timing_csv() const {
  std::ostringstream out;
  out << "index,svd_seconds,random_seconds,zeros_seconds\n";
  for (const auto& r : rows)
    out << r.index << ',' << num(r.svd.seconds) << ',' << num(r.random.seconds) << ',' << num(r.zeros.seconds)
        << '\n';
  return out.str();
}

std::string BenchReport::summary() const {
  std::ostringstream out;
  out << "inputs=" << rows.size() << "\nmedian_ratio_random=" << num(median_ratio_random)
      << "\nmedian_ratio_zeros=" << num(median_ratio_zeros) << "\ncensored_runs=" << censored_runs
      << "\nframe_violations=" << frame_violations << '\n';
  return out.str();
}

}  // namespace gstrument::bench
