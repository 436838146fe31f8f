// gstrument command-line front end.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "gstrument/bench.hpp"
#include "gstrument/checkpoint.hpp"
#include "gstrument/config.hpp"
#include "gstrument/errors.hpp"
#include "gstrument/eval.hpp"
#include "gstrument/extractor.hpp"
#include "gstrument/gan.hpp"
#include "gstrument/inversion.hpp"
#include "gstrument/losses.hpp"
#include "gstrument/tensor_io.hpp"
#include "gstrument/wav.hpp"

namespace fs = std::filesystem;
using namespace gstrument;

namespace {

constexpr double kTrainFraction = 0.75;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* sub, Common& c, bool out_required = true) {
  sub->add_option("--config", c.config, "key = value configuration file")->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "seed for every random component");
  auto* o = sub->add_option("--out", c.out, "output path");
  if (out_required) o->required();
}

Config load(const Common& c) {
  Config cfg = c.config.empty() ? Config{} : load_config(c.config);
  if (c.seed) cfg.apply_seed(*c.seed);
  cfg.validate();
  return cfg;
}

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(6);
  o << v;
  return o.str();
}

fs::path sibling(const fs::path& p, const std::string& suffix) {
  return p.parent_path() / (p.stem().string() + suffix);
}

std::size_t signal_length(const Config& cfg) {
  return static_cast<std::size_t>(std::llround(cfg.preprocess.duration_s * cfg.sample_rate));
}

toy::ToyNet extractor_net(const fs::path& dir) { return toy::load_checkpoint(dir).net("f"); }

toy::GanModel gan_from_checkpoint(const fs::path& dir) {
  const auto ck = toy::load_checkpoint(dir);
  toy::GanModel m;
  m.generator = ck.net("generator");
  m.discriminator = ck.net("discriminator");
  m.noise_dim = std::stoul(ck.value("noise_dim"));
  m.data_dim = std::stoul(ck.value("data_dim"));
  m.feature_dim = std::stoul(ck.value("feature_dim"));
  m.num_pitches = std::stoi(ck.value("num_pitches"));
  return m;
}

Eigen::VectorXd noise_for(const Config& cfg, std::size_t dim) {
  std::mt19937_64 rng(cfg.seed);
  return toy::sample_noise(dim, rng);
}

void check_column(const toy::ToyDataset& d, std::size_t index) {
  if (index >= d.size())
    throw InvalidArgument("index " + std::to_string(index) + " outside dataset of " + std::to_string(d.size()));
}

void check_pitch(const toy::GanModel& m, int pitch) {
  if (pitch < 0 || pitch >= m.num_pitches)
    throw InvalidArgument("pitch " + std::to_string(pitch) + " outside [0, " + std::to_string(m.num_pitches) + ")");
}

// Samples are stored one per row (n x dim); the library works on columns.
Eigen::MatrixXd read_sample_set(const fs::path& p) {
  const Tensor t = read_gstm(p);
  if (t.dims.size() == 1) return to_matrix(t);
  return to_matrix(t).transpose();
}

int cmd_analyze(const Common& c, const std::string& in) {
  const Config cfg = load(c);
  signal::Waveform w = read_wav(in);
  if (w.sample_rate != cfg.sample_rate)
    throw InvalidArgument("input rate " + std::to_string(w.sample_rate) + " Hz differs from configured " +
                          std::to_string(cfg.sample_rate) + " Hz");
  const auto fb = make_filterbank(cfg);
  const auto mel = signal::analyze(signal::preprocess(w, cfg.preprocess), cfg.stft, fb, cfg.mel.frames);
  write_gstm(c.out, to_tensor(mel));
  std::cout << "shape=" << mel.rows() << "x" << mel.cols() << " min=" << fmt(mel.minCoeff())
            << " max=" << fmt(mel.maxCoeff()) << " mean=" << fmt(mel.mean()) << '\n';
  return 0;
}

int cmd_invert(const Common& c, const std::string& in, const std::optional<std::string>& init,
               std::optional<std::size_t> iters) {
  Config cfg = load(c);
  if (init) cfg.nnls.init = inversion::parse_init(*init);
  if (iters) cfg.nnls.max_iters = *iters;
  cfg.nnls.validate();
  const Eigen::MatrixXd mel = to_matrix(read_gstm(in));
  if (static_cast<std::size_t>(mel.rows()) != cfg.mel.bins)
    throw InvalidArgument("tensor has " + std::to_string(mel.rows()) + " mel bins, config expects " +
                          std::to_string(cfg.mel.bins));
  const auto fb = make_filterbank(cfg);
  auto [wave, report] = inversion::invert_mel(fb, mel, cfg.stft, cfg.nnls, cfg.gl, signal_length(cfg), cfg.sample_rate);
  const fs::path out(c.out);
  write_file_atomic(sibling(out, ".nnls_trace.csv"), report.nnls.to_csv());
  write_file_atomic(sibling(out, ".gl_trace.csv"), report.griffin_lim.to_csv());
  write_wav(out, wave);
  std::cout << "init=" << inversion::to_string(cfg.nnls.init) << " nnls_iterations=" << report.nnls.iterations()
            << " nnls_residual=" << fmt(report.nnls.final_residual())
            << " gl_inconsistency=" << fmt(report.griffin_lim.final_residual()) << '\n'
            << "mel_to_linear_s=" << fmt(report.mel_to_linear_seconds)
            << " griffin_lim_s=" << fmt(report.griffin_lim_seconds) << " total_s=" << fmt(report.total_seconds)
            << '\n';
  return 0;
}

int cmd_bench(const Common& c) {
  const Config cfg = load(c);
  const auto report = bench::run_bench(cfg);
  const fs::path out(c.out);
  write_file_atomic(sibling(out, ".timing.csv"), report.timing_csv());
  write_file_atomic(out, report.to_csv());
  std::cout << report.summary();
  return 0;
}

int cmd_dataset(const Common& c, const std::string& kind) {
  const Config cfg = load(c);
  toy::ToyDataset d;
  if (kind == "factorized") d = toy::make_factorized_dataset(cfg.factorized);
  else if (kind == "gaussian") d = toy::make_gaussian_dataset(cfg.gaussian);
  else throw InvalidArgument("unknown dataset kind '" + kind + "'");
  toy::save_dataset(d, c.out);
  std::cout << "samples=" << d.size() << " dim=" << d.dim() << " pitches=" << d.num_pitches
            << " identities=" << d.num_identities << '\n';
  return 0;
}

void print_probe(const std::string& label, const toy::ProbeResult& r, int pitches) {
  std::cout << label << "pitch_accuracy=" << fmt(r.pitch_accuracy) << " identity_accuracy=" << fmt(r.identity_accuracy)
            << " pitch_chance=" << fmt(1.0 / pitches) << '\n';
}

int cmd_train_extractor(const Common& c, const std::string& data_dir, std::optional<double> lambda) {
  Config cfg = load(c);
  if (lambda) cfg.adv.lambda_adv = *lambda;
  cfg.adv.validate();
  const auto data = toy::load_dataset(data_dir);
  auto [train, held] = toy::split(data, kTrainFraction, cfg.seed);
  auto run = toy::train_extractor(train, cfg.adv);
  for (const auto& w : run.warnings) std::cerr << "warning: " << w << '\n';
  const auto probe = toy::probe_retrain(run.model.f, train, held, cfg.probe);

  toy::Checkpoint ck;
  ck.nets["f"] = run.model.f;
  ck.nets["ci"] = run.model.ci;
  ck.nets["cp"] = run.model.cp;
  ck.meta["kind"] = "extractor";
  ck.meta["lambda_adv"] = fmt(cfg.adv.lambda_adv);
  ck.meta["rounds"] = std::to_string(cfg.adv.rounds);
  ck.meta["seed"] = std::to_string(cfg.seed);
  const fs::path out(c.out);
  write_file_atomic(sibling(out, ".log.csv"), toy::log_to_csv(run.log));
  toy::save_checkpoint(out, ck);
  print_probe("", probe, data.num_pitches);
  return 0;
}

int cmd_probe(const Common& c, const std::string& data_dir, const std::string& extractor) {
  const Config cfg = load(c);
  const auto data = toy::load_dataset(data_dir);
  auto [train, held] = toy::split(data, kTrainFraction, cfg.seed);
  const auto r = toy::probe_retrain(extractor_net(extractor), train, held, cfg.probe);
  std::ostringstream text;
  text.precision(10);
  text << "pitch_accuracy=" << r.pitch_accuracy << "\nidentity_accuracy=" << r.identity_accuracy << '\n';
  if (!c.out.empty()) write_file_atomic(c.out, text.str());
  print_probe("", r, data.num_pitches);
  return 0;
}

int cmd_train_classifiers(const Common& c, const std::string& data_dir) {
  const Config cfg = load(c);
  const auto data = toy::load_dataset(data_dir);
  auto [train, held] = toy::split(data, kTrainFraction, cfg.seed);
  auto category = toy::train_classifier(train.x, train.category, data.num_categories, cfg.probe);
  auto pitch = toy::train_classifier(train.x, train.pitch, data.num_pitches, cfg.probe);
  const double cat_acc = toy::accuracy(category, held.x, held.category);
  const double pitch_acc = toy::accuracy(pitch, held.x, held.pitch);
  toy::Checkpoint ck;
  ck.nets["category"] = std::move(category);
  ck.nets["pitch"] = std::move(pitch);
  ck.meta["kind"] = "classifiers";
  ck.meta["seed"] = std::to_string(cfg.seed);
  toy::save_checkpoint(c.out, ck);
  std::cout << "category_accuracy=" << fmt(cat_acc) << " pitch_accuracy=" << fmt(pitch_acc) << '\n';
  return 0;
}

int cmd_train_gan(const Common& c, const std::string& data_dir, const std::string& extractor) {
  const Config cfg = load(c);
  const auto data = toy::load_dataset(data_dir);
  const auto f = extractor_net(extractor);
  if (f.input_dim() != data.dim()) throw InvalidArgument("extractor input dimension does not match the dataset");
  const auto store = toy::build_store(f, data, cfg.gan_k);
  auto run = toy::train_gan(store, data, cfg.gan);
  toy::Checkpoint ck;
  ck.nets["generator"] = run.model.generator;
  ck.nets["discriminator"] = run.model.discriminator;
  ck.meta["kind"] = "gan";
  ck.meta["noise_dim"] = std::to_string(run.model.noise_dim);
  ck.meta["data_dim"] = std::to_string(run.model.data_dim);
  ck.meta["feature_dim"] = std::to_string(run.model.feature_dim);
  ck.meta["num_pitches"] = std::to_string(run.model.num_pitches);
  ck.meta["steps"] = std::to_string(cfg.gan.steps);
  ck.meta["seed"] = std::to_string(cfg.seed);
  const fs::path out(c.out);
  write_file_atomic(sibling(out, ".log.csv"), toy::log_to_csv(run.log));
  toy::save_checkpoint(out, ck);
  const auto& last = run.log.back();
  std::cout << "steps=" << run.log.size() << " loss_D=" << fmt(last.loss_d) << " loss_G=" << fmt(last.loss_g) << '\n';
  return 0;
}

int cmd_generate(const Common& c, const std::string& gan, const std::string& extractor, const std::string& data_dir,
                 std::size_t index, int pitch) {
  const Config cfg = load(c);
  const auto m = gan_from_checkpoint(gan);
  const auto f = extractor_net(extractor);
  const auto data = toy::load_dataset(data_dir);
  check_column(data, index);
  check_pitch(m, pitch);
  const Eigen::VectorXd x =
      toy::generate(m, f, data.x.col(static_cast<Eigen::Index>(index)), pitch, noise_for(cfg, m.noise_dim));
  write_gstm(c.out, to_tensor(x));
  std::cout << "dim=" << x.size() << " min=" << fmt(x.minCoeff()) << " max=" << fmt(x.maxCoeff()) << '\n';
  return 0;
}

int cmd_interpolate(const Common& c, const std::string& gan, const std::string& extractor,
                    const std::string& data_dir, std::size_t a, std::size_t b, double t, int pitch) {
  require(t >= 0.0 && t <= 1.0, "interpolation ratio must lie in [0, 1]");
  const Config cfg = load(c);
  const auto m = gan_from_checkpoint(gan);
  const auto f = extractor_net(extractor);
  const auto data = toy::load_dataset(data_dir);
  check_column(data, a);
  check_column(data, b);
  check_pitch(m, pitch);
  const Eigen::VectorXd ha = f.forward(Eigen::VectorXd(data.x.col(static_cast<Eigen::Index>(a))));
  const Eigen::VectorXd hb = f.forward(Eigen::VectorXd(data.x.col(static_cast<Eigen::Index>(b))));
  const Eigen::VectorXd x = toy::interpolate(m, ha, hb, t, pitch, noise_for(cfg, m.noise_dim));
  write_gstm(c.out, to_tensor(x));
  std::cout << "dim=" << x.size() << " t=" << fmt(t) << '\n';
  return 0;
}

struct EvalArgs {
  std::string classifiers;
  std::string real, fake;
  std::string gan, extractor, data;
  std::size_t trials = 500;
};

int cmd_eval(const Common& c, const EvalArgs& a) {
  const Config cfg = load(c);
  const auto ck = toy::load_checkpoint(a.classifiers);
  const toy::ToyNet& category = ck.net("category");
  const toy::ToyNet& pitch_net = ck.net("pitch");
  auto fid_features = [&category](const Eigen::MatrixXd& x) { return category.penultimate(x); };

  eval::MetricReport report;
  if (!a.real.empty() || !a.fake.empty()) {
    if (a.real.empty() || a.fake.empty()) throw InvalidArgument("--real and --fake go together");
    const Eigen::MatrixXd real = read_sample_set(a.real);
    const Eigen::MatrixXd fake = read_sample_set(a.fake);
    const Eigen::MatrixXd fr = fid_features(real), ff = fid_features(fake);
    report.fid = eval::frechet_distance(eval::gaussian_stats(fr), eval::gaussian_stats(ff));
    report.samples = static_cast<std::size_t>(fake.cols());
    if (real.cols() == fake.cols()) report.mse = eval::feature_mse(fr, ff);
    const auto pr = toy::argmax_columns(pitch_net.forward(real));
    report.pitch_accuracy = eval::pitch_accuracy(toy::argmax_columns(pitch_net.forward(fake)), pr);
  } else {
    if (a.gan.empty() || a.extractor.empty() || a.data.empty())
      throw InvalidArgument("eval needs --real/--fake or --gan, --extractor and --data");
    const auto m = gan_from_checkpoint(a.gan);
    const auto f = extractor_net(a.extractor);
    const auto data = toy::load_dataset(a.data);
    eval::InterpolationSetup setup;
    setup.noise_dim = m.noise_dim;
    setup.num_pitches = m.num_pitches;
    report = eval::interpolation_eval(
        [&m](const Eigen::VectorXd& z, int p, const Eigen::VectorXd& h) {
          return toy::generate_from_feature(m, h, p, z);
        },
        [&f](const Eigen::MatrixXd& x) { return f.forward(x); }, data.x, fid_features,
        [&pitch_net](const Eigen::MatrixXd& x) { return toy::argmax_columns(pitch_net.forward(x)); }, a.trials,
        cfg.seed, setup);
  }
  const fs::path out(c.out);
  write_file_atomic(sibling(out, ".csv"), report.to_csv());
  write_file_atomic(out, report.to_text());
  std::cout << "fid=" << fmt(report.fid) << " pitch_accuracy=" << fmt(report.pitch_accuracy);
  if (report.mse) std::cout << " mse=" << fmt(*report.mse);
  std::cout << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gstrument: mel analysis, optimization-based inversion and toy instance-conditioned models"};
  app.require_subcommand(1);

  Common c;
  std::string in, data_dir, extractor, gan, kind = "factorized";
  std::optional<std::string> init;
  std::optional<std::size_t> iters;
  std::optional<double> lambda;
  std::size_t index = 0, index_b = 1;
  int pitch = 0;
  double t = 0.0;
  EvalArgs ea;

  auto* analyze = app.add_subcommand("analyze", "WAV -> mel-spectrogram tensor");
  add_common(analyze, c);
  analyze->add_option("input", in, "input WAV")->required();

  auto* invert = app.add_subcommand("invert", "mel tensor -> WAV via NNLS and Griffin-Lim");
  add_common(invert, c);
  invert->add_option("input", in, "input GSTM mel tensor")->required();
  invert->add_option("--init", init, "svd, random or zeros");
  invert->add_option("--iters", iters, "NNLS iteration cap");

  auto* bench_cmd = app.add_subcommand("bench-inversion", "initialization benchmark on a synthetic corpus");
  add_common(bench_cmd, c);

  auto* dataset = app.add_subcommand("dataset", "write a synthetic toy dataset directory");
  add_common(dataset, c);
  dataset->add_option("--kind", kind, "factorized or gaussian");

  auto* train_ex = app.add_subcommand("train-extractor", "adversarial pitch-invariant feature extractor");
  add_common(train_ex, c);
  train_ex->add_option("--data", data_dir, "dataset directory")->required();
  train_ex->add_option("--lambda-adv", lambda, "weight of the adversarial KL term");

  auto* probe = app.add_subcommand("probe", "re-train fresh classifiers on frozen extractor features");
  add_common(probe, c, false);
  probe->add_option("--data", data_dir, "dataset directory")->required();
  probe->add_option("--extractor", extractor, "extractor checkpoint")->required();

  auto* train_cls = app.add_subcommand("train-classifiers", "category (FID features) and pitch classifiers");
  add_common(train_cls, c);
  train_cls->add_option("--data", data_dir, "dataset directory")->required();

  auto* train_gan = app.add_subcommand("train-gan", "instance-conditioned GAN on a frozen extractor");
  add_common(train_gan, c);
  train_gan->add_option("--data", data_dir, "dataset directory")->required();
  train_gan->add_option("--extractor", extractor, "extractor checkpoint")->required();

  auto* generate = app.add_subcommand("generate", "G(z, p, f(x)) for one dataset input");
  add_common(generate, c);
  generate->add_option("--gan", gan, "GAN checkpoint")->required();
  generate->add_option("--extractor", extractor, "extractor checkpoint")->required();
  generate->add_option("--data", data_dir, "dataset directory")->required();
  generate->add_option("--index", index, "input column");
  generate->add_option("--pitch", pitch, "pitch class");

  auto* interp = app.add_subcommand("interpolate", "G(z, p, (1 - t) h_a + t h_b)");
  add_common(interp, c);
  interp->add_option("--gan", gan, "GAN checkpoint")->required();
  interp->add_option("--extractor", extractor, "extractor checkpoint")->required();
  interp->add_option("--data", data_dir, "dataset directory")->required();
  interp->add_option("--index-a", index, "first input column");
  interp->add_option("--index-b", index_b, "second input column");
  interp->add_option("-t,--ratio", t, "interpolation ratio in [0, 1]");
  interp->add_option("--pitch", pitch, "pitch class");

  auto* eval_cmd = app.add_subcommand("eval", "FID / pitch accuracy / MSE report");
  add_common(eval_cmd, c);
  eval_cmd->add_option("--classifiers", ea.classifiers, "classifier checkpoint")->required();
  eval_cmd->add_option("--real", ea.real, "real sample set (GSTM, one sample per row)");
  eval_cmd->add_option("--fake", ea.fake, "generated sample set (GSTM, one sample per row)");
  eval_cmd->add_option("--gan", ea.gan, "GAN checkpoint for the interpolation protocol");
  eval_cmd->add_option("--extractor", ea.extractor, "extractor checkpoint");
  eval_cmd->add_option("--data", ea.data, "dataset directory");
  eval_cmd->add_option("--trials", ea.trials, "interpolation trials");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*analyze) return cmd_analyze(c, in);
    if (*invert) return cmd_invert(c, in, init, iters);
    if (*bench_cmd) return cmd_bench(c);
    if (*dataset) return cmd_dataset(c, kind);
    if (*train_ex) return cmd_train_extractor(c, data_dir, lambda);
    if (*probe) return cmd_probe(c, data_dir, extractor);
    if (*train_cls) return cmd_train_classifiers(c, data_dir);
    if (*train_gan) return cmd_train_gan(c, data_dir, extractor);
    if (*generate) return cmd_generate(c, gan, extractor, data_dir, index, pitch);
    if (*interp) return cmd_interpolate(c, gan, extractor, data_dir, index, index_b, t, pitch);
    if (*eval_cmd) return cmd_eval(c, ea);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
