#include "gstrument/toydata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "gstrument/errors.hpp"
#include "gstrument/tensor_io.hpp"

namespace gstrument::toy {

void ToyDataset::validate() const {
  const std::size_t n = size();
  require(pitch.size() == n && identity.size() == n && category.size() == n, "label counts do not match samples");
  require(x.allFinite(), "dataset contains non-finite values");
  for (std::size_t i = 0; i < n; ++i) {
    require(pitch[i] >= 0 && pitch[i] < num_pitches, "pitch label out of range");
    require(identity[i] >= 0 && identity[i] < num_identities, "identity label out of range");
    require(category[i] >= 0 && category[i] < num_categories, "category label out of range");
  }
}

ToyDataset ToyDataset::subset(const std::vector<std::size_t>& idx) const {
  ToyDataset out;
  out.num_pitches = num_pitches;
  out.num_identities = num_identities;
  out.num_categories = num_categories;
  out.base_midi = base_midi;
  out.x.resize(x.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const std::size_t i = idx[j];
    require(i < size(), "subset index out of range");
    out.x.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(i));
    out.pitch.push_back(pitch[i]);
    out.identity.push_back(identity[i]);
    out.category.push_back(category[i]);
  }
  return out;
}

ToyDataset make_factorized_dataset(const FactorizedSpec& spec) {
  require(spec.num_pitches >= 1 && spec.num_identities >= 1 && spec.num_categories >= 1, "need at least one class per factor");
  require(spec.per_combination >= 1 && spec.freq_bins >= 2 && spec.frames >= 1, "invalid dataset size");
  require(spec.noise >= 0.0, "noise must be non-negative");
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int F = spec.freq_bins, T = spec.frames;

  // Identity: two-bump spectral envelope and an exponential decay.
  std::vector<Eigen::VectorXd> env(static_cast<std::size_t>(spec.num_identities));
  std::vector<Eigen::VectorXd> decay(static_cast<std::size_t>(spec.num_identities));
  for (int i = 0; i < spec.num_identities; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(F);
    for (int bump = 0; bump < 2; ++bump) {
      const double center = unit(rng) * (F - 1);
      const double width = 1.0 + 2.0 * unit(rng);
      const double height = 0.5 + unit(rng);
      for (int f = 0; f < F; ++f) e(f) += height * std::exp(-0.5 * std::pow((f - center) / width, 2));
    }
    env[static_cast<std::size_t>(i)] = e;
    const double rate = 0.2 + 1.3 * unit(rng);
    Eigen::VectorXd d(T);
    for (int t = 0; t < T; ++t) d(t) = std::exp(-rate * t);
    decay[static_cast<std::size_t>(i)] = d;
  }

  // Pitch: harmonic comb with fundamental spacing set by the pitch class.
  std::vector<Eigen::VectorXd> comb(static_cast<std::size_t>(spec.num_pitches));
  const double lowest = 1.0;
  const double spread = static_cast<double>(F - 1) / 2.0;
  for (int p = 0; p < spec.num_pitches; ++p) {
    const double f0 = lowest + spread * p / std::max(1, spec.num_pitches);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(F);
    for (int h = 1; h * f0 < F; ++h)
      for (int f = 0; f < F; ++f) c(f) += std::exp(-0.5 * std::pow((f - h * f0) / 0.4, 2)) / h;
    comb[static_cast<std::size_t>(p)] = c;
  }
  Eigen::VectorXd pitch_decay(T);
  for (int t = 0; t < T; ++t) pitch_decay(t) = std::exp(-0.5 * t);

  ToyDataset d;
  d.num_pitches = spec.num_pitches;
  d.num_identities = spec.num_identities;
  d.num_categories = spec.num_categories;
  const int n = spec.num_pitches * spec.num_identities * spec.per_combination;
  d.x.resize(F * T, n);
  int col = 0;
  for (int p = 0; p < spec.num_pitches; ++p)
    for (int i = 0; i < spec.num_identities; ++i)
      for (int s = 0; s < spec.per_combination; ++s, ++col) {
        const double gain = 0.8 + 0.4 * unit(rng);
        const auto& e = env[static_cast<std::size_t>(i)];
        const auto& dec = decay[static_cast<std::size_t>(i)];
        const auto& c = comb[static_cast<std::size_t>(p)];
        for (int t = 0; t < T; ++t)
          for (int f = 0; f < F; ++f)
            d.x(t * F + f, col) = gain * e(f) * dec(t) + c(f) * pitch_decay(t) + spec.noise * std::abs(gauss(rng));
        d.pitch.push_back(p);
        d.identity.push_back(i);
        d.category.push_back(i % spec.num_categories);
      }
  return d;
}

ToyDataset make_gaussian_dataset(const GaussianSpec& spec) {
  require(spec.dim >= 1 && spec.num_pitches >= 1 && spec.per_pitch >= 2, "invalid Gaussian dataset spec");
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ToyDataset d;
  d.num_pitches = spec.num_pitches;
  d.num_identities = spec.num_pitches;
  d.num_categories = 1;
  d.x.resize(spec.dim, spec.num_pitches * spec.per_pitch);
  int col = 0;
  for (int p = 0; p < spec.num_pitches; ++p) {
    Eigen::VectorXd mean(spec.dim), sd(spec.dim);
    for (int k = 0; k < spec.dim; ++k) {
      mean(k) = 1.5 + 1.5 * unit(rng);
      sd(k) = 0.2 + 0.2 * unit(rng);
    }
    for (int s = 0; s < spec.per_pitch; ++s, ++col) {
      for (int k = 0; k < spec.dim; ++k) d.x(k, col) = mean(k) + sd(k) * gauss(rng);
      d.pitch.push_back(p);
      d.identity.push_back(p);
      d.category.push_back(0);
    }
  }
  return d;
}

std::pair<ToyDataset, ToyDataset> split(const ToyDataset& d, double train_fraction, std::uint64_t seed) {
  require(train_fraction > 0.0 && train_fraction < 1.0, "train fraction must lie in (0, 1)");
  std::vector<std::size_t> idx(d.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto cut = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(d.size())));
  std::vector<std::size_t> a(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(cut));
  std::vector<std::size_t> b(idx.begin() + static_cast<std::ptrdiff_t>(cut), idx.end());
  return {d.subset(a), d.subset(b)};
}

void save_dataset(const ToyDataset& d, const std::filesystem::path& dir) {
  d.validate();
  std::filesystem::create_directories(dir);
  write_gstm(dir / "data.gstm", to_tensor(Eigen::MatrixXd(d.x.transpose())));
  std::ostringstream csv;
  csv << "id,pitch,instrument_id,category\n";
  for (std::size_t i = 0; i < d.size(); ++i)
    csv << i << ',' << d.midi(i) << ',' << d.identity[i] << ',' << d.category[i] << '\n';
  write_file_atomic(dir / "labels.csv", csv.str());
  std::ostringstream meta;
  meta << "num_pitches=" << d.num_pitches << "\nnum_identities=" << d.num_identities
       << "\nnum_categories=" << d.num_categories << "\nbase_midi=" << d.base_midi << '\n';
  write_file_atomic(dir / "dataset.txt", meta.str());
}

ToyDataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream meta(dir / "dataset.txt");
  if (!meta) throw IoError("missing " + (dir / "dataset.txt").string());
  std::map<std::string, int> kv;
  std::string line;
  while (std::getline(meta, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = std::stoi(line.substr(eq + 1));
  }
  ToyDataset d;
  for (const char* key : {"num_pitches", "num_identities", "num_categories", "base_midi"})
    if (!kv.count(key)) throw IoError(std::string("dataset.txt lacks ") + key);
  d.num_pitches = kv["num_pitches"];
  d.num_identities = kv["num_identities"];
  d.num_categories = kv["num_categories"];
  d.base_midi = kv["base_midi"];
  d.x = to_matrix(read_gstm(dir / "data.gstm")).transpose();

  std::ifstream csv(dir / "labels.csv");
  if (!csv) throw IoError("missing " + (dir / "labels.csv").string());
  std::getline(csv, line);
  if (line != "id,pitch,instrument_id,category") throw IoError("unexpected label header");
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    long id;
    int midi, ident, cat;
    char c1, c2, c3;
    if (!(row >> id >> c1 >> midi >> c2 >> ident >> c3 >> cat)) throw IoError("malformed label row: " + line);
    d.pitch.push_back(midi - d.base_midi);
    d.identity.push_back(ident);
    d.category.push_back(cat);
  }
  d.validate();
  return d;
}

}  // namespace gstrument::toy
