#include "gstrument/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "gstrument/errors.hpp"

namespace gstrument {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw InvalidArgument(key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

std::size_t to_size(const std::string& key, const std::string& v) { return static_cast<std::size_t>(to_u64(key, v)); }

int to_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw InvalidArgument(key + ": expected an integer, got '" + v + "'");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size() && std::isfinite(d)) return d;
  } catch (const std::exception&) {
  }
  throw InvalidArgument(key + ": expected a number, got '" + v + "'");
}

using Setter = std::function<void(Config&, const std::string&, const std::string&)>;
using Getter = std::function<std::string(const Config&)>;

struct Field {
  Setter set;
  Getter get;
};

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(17);
  o << v;
  return o.str();
}

#define GS_SIZE(name, member) \
  {name, {[](Config& c, const std::string& k, const std::string& v) { c.member = to_size(k, v); }, [](const Config& c) { return std::to_string(c.member); }}}
#define GS_INT(name, member) \
  {name, {[](Config& c, const std::string& k, const std::string& v) { c.member = to_int(k, v); }, [](const Config& c) { return std::to_string(c.member); }}}
#define GS_DOUBLE(name, member) \
  {name, {[](Config& c, const std::string& k, const std::string& v) { c.member = to_double(k, v); }, [](const Config& c) { return fmt(c.member); }}}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      GS_INT("sample_rate", sample_rate),
      GS_SIZE("stft.window_size", stft.window_size),
      GS_SIZE("stft.hop_size", stft.hop_size),
      GS_SIZE("stft.fft_size", stft.fft_size),
      GS_SIZE("mel.bins", mel.bins),
      GS_DOUBLE("mel.f_min", mel.f_min),
      GS_DOUBLE("mel.f_max", mel.f_max),
      GS_SIZE("mel.frames", mel.frames),
      GS_DOUBLE("preprocess.duration", preprocess.duration_s),
      GS_DOUBLE("preprocess.fade_start", preprocess.fade_start_s),
      GS_DOUBLE("preprocess.fade_tau", preprocess.fade_tau_s),
      GS_SIZE("nnls.max_iters", nnls.max_iters),
      {"nnls.step_rule",
       {[](Config& c, const std::string& k, const std::string& v) {
          if (v == "lipschitz") c.nnls.step_rule = inversion::StepRule::Lipschitz;
          else if (v == "backtracking") c.nnls.step_rule = inversion::StepRule::Backtracking;
          else throw InvalidArgument(k + ": expected lipschitz or backtracking, got '" + v + "'");
        },
        [](const Config& c) { return std::string(c.nnls.step_rule == inversion::StepRule::Lipschitz ? "lipschitz" : "backtracking"); }}},
      GS_DOUBLE("nnls.tol", nnls.tol),
      {"nnls.init",
       {[](Config& c, const std::string&, const std::string& v) { c.nnls.init = inversion::parse_init(v); },
        [](const Config& c) { return inversion::to_string(c.nnls.init); }}},
      GS_DOUBLE("nnls.svd_cutoff", nnls.svd_cutoff),
      GS_SIZE("gl.iters", gl.iters),
      GS_DOUBLE("gl.momentum", gl.momentum),
      {"gl.init_phase",
       {[](Config& c, const std::string& k, const std::string& v) {
          if (v == "zero") c.gl.init_phase = inversion::PhaseInit::Zero;
          else if (v == "random") c.gl.init_phase = inversion::PhaseInit::Random;
          else throw InvalidArgument(k + ": expected zero or random, got '" + v + "'");
        },
        [](const Config& c) { return std::string(c.gl.init_phase == inversion::PhaseInit::Zero ? "zero" : "random"); }}},
      GS_DOUBLE("adv.lambda", adv.lambda_adv),
      GS_SIZE("adv.eq2_steps", adv.eq2_steps),
      GS_SIZE("adv.eq3_steps", adv.eq3_steps),
      GS_SIZE("adv.rounds", adv.rounds),
      GS_SIZE("adv.batch", adv.batch),
      GS_DOUBLE("adv.decay_start", adv.decay_start),
      GS_SIZE("adv.feature_dim", adv.feature_dim),
      GS_SIZE("adv.hidden", adv.hidden),
      GS_SIZE("adv.classifier_hidden", adv.classifier_hidden),
      {"adv.feature_activation",
       {[](Config& c, const std::string&, const std::string& v) { c.adv.feature_activation = toy::parse_activation(v); },
        [](const Config& c) { return toy::to_string(c.adv.feature_activation); }}},
      GS_DOUBLE("adam.lr", adv.adam.lr),
      GS_DOUBLE("adam.beta1", adv.adam.beta1),
      GS_DOUBLE("adam.beta2", adv.adam.beta2),
      GS_DOUBLE("adam.eps", adv.adam.eps),
      GS_SIZE("probe.hidden", probe.hidden),
      GS_SIZE("probe.steps", probe.steps),
      GS_DOUBLE("probe.lr", probe.adam.lr),
      GS_SIZE("gan.steps", gan.steps),
      GS_SIZE("gan.batch", gan.batch),
      GS_SIZE("gan.noise_dim", gan.noise_dim),
      GS_SIZE("gan.hidden", gan.hidden),
      GS_SIZE("gan.k", gan_k),
      GS_DOUBLE("gan.r1_gamma", gan.r1_gamma),
      GS_SIZE("gan.d_steps", gan.d_steps),
      GS_DOUBLE("gan.g_ema", gan.g_ema),
      GS_DOUBLE("gan.lr", gan.adam.lr),
      {"gan.generator_loss",
       {[](Config& c, const std::string& k, const std::string& v) {
          if (v == "minimax") c.gan.generator_loss = toy::GeneratorLoss::Minimax;
          else if (v == "non_saturating") c.gan.generator_loss = toy::GeneratorLoss::NonSaturating;
          else throw InvalidArgument(k + ": expected minimax or non_saturating, got '" + v + "'");
        },
        [](const Config& c) { return std::string(c.gan.generator_loss == toy::GeneratorLoss::Minimax ? "minimax" : "non_saturating"); }}},
      GS_INT("data.pitches", factorized.num_pitches),
      GS_INT("data.identities", factorized.num_identities),
      GS_INT("data.categories", factorized.num_categories),
      GS_INT("data.per_combination", factorized.per_combination),
      GS_INT("data.freq_bins", factorized.freq_bins),
      GS_INT("data.frames", factorized.frames),
      GS_DOUBLE("data.noise", factorized.noise),
      GS_INT("gaussian.dim", gaussian.dim),
      GS_INT("gaussian.pitches", gaussian.num_pitches),
      GS_INT("gaussian.per_pitch", gaussian.per_pitch),
      GS_SIZE("bench.inputs", bench.inputs),
      GS_SIZE("bench.baseline_max_iters", bench.baseline_max_iters),
      GS_DOUBLE("bench.baseline_tol", bench.baseline_tol),
      GS_DOUBLE("bench.target_factor", bench.target_factor),
      {"seed",
       {[](Config& c, const std::string& k, const std::string& v) { c.apply_seed(to_u64(k, v)); },
        [](const Config& c) { return std::to_string(c.seed); }}},
  };
  return table;
}

#undef GS_SIZE
#undef GS_INT
#undef GS_DOUBLE

}  // namespace

void Config::apply_seed(std::uint64_t s) {
  seed = s;
  nnls.seed = s;
  gl.seed = s;
  adv.seed = s;
  probe.seed = s + 1;
  gan.seed = s + 2;
  factorized.seed = s;
  gaussian.seed = s;
}

void Config::validate() const {
  require(sample_rate > 0, "sample_rate must be positive");
  stft.validate();
  require(mel.bins >= 1, "mel.bins must be at least 1");
  require(mel.frames >= 1, "mel.frames must be at least 1");
  require(mel.f_min >= 0.0 && mel.f_min < f_max_hz() && f_max_hz() <= sample_rate / 2.0,
          "mel frequency range must satisfy 0 <= f_min < f_max <= sample_rate / 2");
  require(preprocess.duration_s > 0.0, "preprocess.duration must be positive");
  require(preprocess.fade_tau_s > 0.0, "preprocess.fade_tau must be positive");
  require(preprocess.fade_start_s >= 0.0, "preprocess.fade_start must be non-negative");
  nnls.validate();
  gl.validate();
  adv.validate();
  require(probe.steps >= 1 && probe.hidden >= 1, "probe.steps and probe.hidden must be positive");
  probe.adam.validate();
  gan.validate();
  require(gan_k >= 1, "gan.k must be at least 1");
  require(factorized.num_pitches >= 1 && factorized.num_identities >= 1 && factorized.num_categories >= 1 &&
              factorized.per_combination >= 1 && factorized.freq_bins >= 1 && factorized.frames >= 1,
          "data.* sizes must be positive");
  require(factorized.noise >= 0.0, "data.noise must be non-negative");
  require(gaussian.dim >= 1 && gaussian.num_pitches >= 1 && gaussian.per_pitch >= 2, "gaussian.* sizes out of range");
  require(bench.inputs >= 1, "bench.inputs must be at least 1");
  require(bench.baseline_max_iters >= 1, "bench.baseline_max_iters must be at least 1");
  require(bench.baseline_tol > 0.0, "bench.baseline_tol must be positive");
  require(bench.target_factor >= 1.0, "bench.target_factor must be at least 1");
}

std::string Config::to_text() const {
  std::string out;
  for (const auto& [key, field] : fields()) out += key + " = " + field.get(*this) + "\n";
  return out;
}

void set_config_value(Config& cfg, const std::string& key, const std::string& value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw InvalidArgument("unknown config key '" + key + "'");
  it->second.set(cfg, key, value);
}

Config parse_config(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  // "seed" is applied before the other keys regardless of its position.
  std::vector<std::pair<std::string, std::string>> entries;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key = value");
    entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  for (const auto& [k, v] : entries)
    if (k == "seed") set_config_value(cfg, k, v);
  for (const auto& [k, v] : entries)
    if (k != "seed") set_config_value(cfg, k, v);
  cfg.validate();
  return cfg;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

signal::MelFilterbank make_filterbank(const Config& cfg) {
  return signal::mel_filterbank(cfg.mel.bins, cfg.stft.fft_size, cfg.sample_rate, cfg.mel.f_min, cfg.f_max_hz());
}

}  // namespace gstrument
