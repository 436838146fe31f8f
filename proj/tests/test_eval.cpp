#include <doctest.h>

#include <cmath>
#include <random>

#include "gstrument/errors.hpp"
#include "gstrument/eval.hpp"
#include "gstrument/losses.hpp"
#include "oracles.hpp"

using namespace gstrument;
using namespace gstrument::eval;

namespace {

GaussianStats stats1d(double mu, double var) {
  GaussianStats s;
  s.mean = Eigen::VectorXd::Constant(1, mu);
  s.cov = Eigen::MatrixXd::Constant(1, 1, var);
  s.count = 10;
  return s;
}

GaussianStats random_stats(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd a(dim, dim + 2);
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = g(rng);
  GaussianStats s;
  s.mean = Eigen::VectorXd(dim);
  for (int i = 0; i < dim; ++i) s.mean(i) = g(rng);
  s.cov = a * a.transpose() / static_cast<double>(dim);
  s.count = 100;
  return s;
}

// Tr sqrt(M) for a 2x2 matrix with positive eigenvalues.
double trace_sqrt_2x2(const Eigen::Matrix2d& m) { return std::sqrt(m.trace() + 2.0 * std::sqrt(m.determinant())); }

}  // namespace

TEST_CASE("gaussian_stats examples") {
  Eigen::MatrixXd two(1, 2);
  two << 0, 2;
  const auto s = gaussian_stats(two);
  CHECK(s.mean(0) == 1.0);
  CHECK(s.cov(0, 0) == 2.0);
  CHECK(s.count == 2);
  const auto same = gaussian_stats(Eigen::MatrixXd::Constant(3, 5, 1.5));
  CHECK(same.cov.cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(gaussian_stats(Eigen::MatrixXd::Zero(3, 1)), InvalidArgument);
}

TEST_CASE("gaussian_stats matches a two-pass oracle") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(3.0, 2.0);
  Eigen::MatrixXd x(4, 100);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = g(rng);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(4);
  for (Eigen::Index c = 0; c < 100; ++c) mu += x.col(c);
  mu /= 100.0;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(4, 4);
  for (Eigen::Index c = 0; c < 100; ++c)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) cov(i, j) += (x(i, c) - mu(i)) * (x(j, c) - mu(j));
  cov /= 99.0;
  const auto s = gaussian_stats(x);
  CHECK((s.mean - mu).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((s.cov - cov).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("GaussianStats validation") {
  auto s = stats1d(0.0, 1.0);
  CHECK_NOTHROW(s.validate());
  s.cov(0, 0) = -1.0;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  GaussianStats t;
  t.mean = Eigen::VectorXd::Zero(2);
  t.cov = (Eigen::MatrixXd(2, 2) << 1, 0.5, 0.4, 1).finished();
  CHECK_THROWS_AS(t.validate(), InvalidArgument);
}

TEST_CASE("frechet_distance closed forms") {
  CHECK(frechet_distance(stats1d(0, 1), stats1d(0, 1)) == 0.0);
  CHECK(std::abs(frechet_distance(stats1d(0, 1), stats1d(3, 1)) - 9.0) <= 1e-8);
  CHECK(std::abs(frechet_distance(stats1d(0, 1), stats1d(0, 4)) - 1.0) <= 1e-8);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.1, 5.0), m(-3.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double m1 = m(rng), m2 = m(rng), v1 = u(rng), v2 = u(rng);
    const double ref = (m1 - m2) * (m1 - m2) + std::pow(std::sqrt(v1) - std::sqrt(v2), 2);
    CHECK(std::abs(frechet_distance(stats1d(m1, v1), stats1d(m2, v2)) - ref) <= 1e-8);
  }
}

TEST_CASE("frechet_distance against a 2x2 trace-sqrt oracle") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_stats(2, rng);
    const auto b = random_stats(2, rng);
    const Eigen::Matrix2d prod = a.cov * b.cov;
    const double ref = (a.mean - b.mean).squaredNorm() + a.cov.trace() + b.cov.trace() - 2.0 * trace_sqrt_2x2(prod);
    CHECK(std::abs(frechet_distance(a, b) - ref) <= 1e-8 * std::max(1.0, ref));
  }
}

TEST_CASE("frechet_distance is symmetric, non-negative and zero on identical stats") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_stats(6, rng);
    const auto b = random_stats(6, rng);
    const double ab = frechet_distance(a, b), ba = frechet_distance(b, a);
    CHECK(std::abs(ab - ba) <= 1e-8);
    CHECK(ab >= 0.0);
    CHECK(frechet_distance(a, a) == 0.0);
  }
  GaussianStats singular;
  singular.mean = Eigen::VectorXd::Zero(3);
  singular.cov = Eigen::MatrixXd::Zero(3, 3);
  singular.cov(0, 0) = 1.0;
  auto shifted = singular;
  shifted.cov(1, 1) = 1e-12;
  CHECK(frechet_distance(singular, shifted) >= 0.0);
  CHECK_THROWS_AS(frechet_distance(stats1d(0, 1), singular), InvalidArgument);
}

TEST_CASE("pitch_accuracy") {
  CHECK(pitch_accuracy({1, 2, 3, 4}, {1, 2, 0, 4}) == 0.75);
  CHECK_THROWS_AS(pitch_accuracy(std::vector<int>{}, std::vector<int>{}), InvalidArgument);
  CHECK_THROWS_AS(pitch_accuracy({1}, {1, 2}), InvalidArgument);

  std::mt19937_64 rng(5);
  const toy::ToyNet random_classifier({6, 16, 8}, {toy::Activation::Tanh, toy::Activation::Identity}, rng);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<int> p(0, 7);
  const std::size_t n = 10000;
  Eigen::MatrixXd x(6, static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = g(rng);
  std::vector<int> pitches(n);
  for (auto& v : pitches) v = p(rng);
  const double acc = pitch_accuracy(random_classifier, x, pitches);
  CHECK(oracle::within_3sigma(static_cast<std::size_t>(std::lround(acc * n)), n, 1.0 / 8.0));
  CHECK_THROWS_AS(pitch_accuracy(random_classifier, Eigen::MatrixXd(6, 0), {}), InvalidArgument);

  // Labels produced by the classifier itself are always recovered.
  const auto self = toy::argmax_columns(random_classifier.forward(x));
  CHECK(pitch_accuracy(random_classifier, x, self) == 1.0);
}

TEST_CASE("feature_mse") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd a(5, 30), b(5, 30);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    a(i) = g(rng);
    b(i) = g(rng);
  }
  CHECK(feature_mse(a, a) == 0.0);
  Eigen::MatrixXd p0(1, 2), p1(1, 2);
  p0 << 0, 0;
  p1 << 1, 3;
  CHECK(feature_mse(p0, p1) == 5.0);
  double ref = 0.0;
  for (Eigen::Index c = 0; c < 30; ++c)
    for (Eigen::Index r = 0; r < 5; ++r) ref += (a(r, c) - b(r, c)) * (a(r, c) - b(r, c));
  ref /= 30.0;
  CHECK(std::abs(feature_mse(a, b) - ref) <= 1e-12);
  CHECK_THROWS_AS(feature_mse(a, b.leftCols(3)), InvalidArgument);
  CHECK_THROWS_AS(feature_mse(Eigen::MatrixXd(2, 0), Eigen::MatrixXd(2, 0)), InvalidArgument);
}

TEST_CASE("interpolation_eval") {
  Eigen::MatrixXd dataset(2, 2);
  dataset << 0, 1, 0, 2;
  const EncoderFn identity = [](const Eigen::MatrixXd& x) { return x; };
  const GeneratorFn memorizer = [](const Eigen::VectorXd&, int, const Eigen::VectorXd& h) { return h; };
  const ClassifierFn always0 = [](const Eigen::MatrixXd& x) { return std::vector<int>(x.cols(), 0); };
  InterpolationSetup setup;
  setup.num_pitches = 4;
  setup.fixed_ratio = 0.0;

  const auto r = interpolation_eval(memorizer, identity, dataset, identity, always0, 4000, 11, setup);
  CHECK(r.fid <= 1e-2);
  CHECK(r.samples == 4000);
  CHECK(oracle::within_3sigma(static_cast<std::size_t>(std::lround(r.pitch_accuracy * 4000)), 4000, 0.25));
  std::size_t total = 0;
  for (const auto& [p, c] : r.count_by_pitch) total += c;
  CHECK(total == 4000);
  CHECK(r.pitch_accuracy_by_pitch.at(0) == 1.0);
  CHECK(r.pitch_accuracy_by_pitch.at(3) == 0.0);
  CHECK_FALSE(r.mse.has_value());

  const auto again = interpolation_eval(memorizer, identity, dataset, identity, always0, 4000, 11, setup);
  CHECK(again.to_text() == r.to_text());
  CHECK(again.to_csv() == r.to_csv());

  // Interior mixes fall between the two inputs, away from both.
  setup.fixed_ratio.reset();
  const auto mixed = interpolation_eval(memorizer, identity, dataset, identity, always0, 500, 12, setup);
  CHECK(mixed.fid > r.fid);

  const ClassifierFn by_first = [](const Eigen::MatrixXd& x) {
    std::vector<int> out;
    for (Eigen::Index c = 0; c < x.cols(); ++c) out.push_back(x(0, c) > 0.5 ? 1 : 0);
    return out;
  };
  CHECK_NOTHROW(interpolation_eval(memorizer, identity, dataset, identity, by_first, 10, 1, setup));
  CHECK_THROWS_AS(interpolation_eval(memorizer, identity, dataset.leftCols(1), identity, always0, 10, 1, setup),
                  InvalidState);
  setup.fixed_ratio = 1.5;
  CHECK_THROWS_AS(interpolation_eval(memorizer, identity, dataset, identity, always0, 10, 1, setup), InvalidArgument);
}

TEST_CASE("metric report formats") {
  MetricReport r;
  r.fid = 1.5;
  r.pitch_accuracy = 0.5;
  r.samples = 4;
  r.count_by_pitch = {{0, 2}, {1, 2}};
  r.pitch_accuracy_by_pitch = {{0, 1.0}, {1, 0.0}};
  const auto text = r.to_text();
  CHECK(text.find("fid=1.5") != std::string::npos);
  CHECK(text.find("pitch_accuracy=0.5") != std::string::npos);
  CHECK(text.find("mse") == std::string::npos);
  r.mse = 2.0;
  CHECK(r.to_text().find("mse=2") != std::string::npos);
  const auto csv = r.to_csv();
  CHECK(csv.rfind("pitch,count,pitch_accuracy\n", 0) == 0);
  CHECK(csv.find("\n0,2,1\n") != std::string::npos);
  CHECK(csv.find("all,4,0.5") != std::string::npos);
}
