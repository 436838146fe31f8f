#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Nothing here calls into the library's numerical code.

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// Direct O(N^2) DFT of a real sequence, bins 0..N/2.
inline std::vector<std::complex<double>> dft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t)
      acc += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * t % n) / static_cast<double>(n));
    out[k] = acc;
  }
  return out;
}

/// Inverse DFT of a Hermitian half spectrum to N real samples.
inline std::vector<double> idft(const std::vector<std::complex<double>>& half, std::size_t n) {
  std::vector<double> out(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::complex<double> v = k <= n / 2 ? half[k] : std::conj(half[n - k]);
      acc += (v * std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(k * t % n) / static_cast<double>(n))).real();
    }
    out[t] = acc / static_cast<double>(n);
  }
  return out;
}

inline Eigen::MatrixXd matmul(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j)
      for (Eigen::Index k = 0; k < a.cols(); ++k) c(i, j) += a(i, k) * b(k, j);
  return c;
}

/// Exhaustive NNLS: for every support S, the unconstrained least-squares
/// solution on S; the best one that is non-negative is the optimum.
inline Eigen::VectorXd nnls_exhaustive(const Eigen::MatrixXd& f, const Eigen::VectorXd& m) {
  const auto n = f.cols();
  Eigen::VectorXd best = Eigen::VectorXd::Zero(n);
  double best_obj = (m).squaredNorm();
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < n; ++j)
      if (mask & (1u << j)) cols.push_back(j);
    Eigen::MatrixXd fs(f.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) fs.col(static_cast<Eigen::Index>(c)) = f.col(cols[c]);
    const Eigen::VectorXd xs = fs.completeOrthogonalDecomposition().solve(m);
    if ((xs.array() < 0.0).any()) continue;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    for (std::size_t c = 0; c < cols.size(); ++c) x(cols[c]) = xs(static_cast<Eigen::Index>(c));
    const double obj = (f * x - m).squaredNorm();
    if (obj < best_obj) {
      best_obj = obj;
      best = x;
    }
  }
  return best;
}

/// Central-difference gradient of a scalar function.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& fn, const Eigen::VectorXd& x,
                                   double h = 1e-6) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd p = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    p(i) = x(i) + h;
    const double up = fn(p);
    p(i) = x(i) - h;
    const double down = fn(p);
    p(i) = x(i);
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

/// max_i |a_i - b_i| / max(|a|_inf, |b|_inf, floor): relative to the
/// gradient's scale so near-zero entries do not dominate.
inline double rel_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double floor = 1e-8) {
  const double scale = std::max({a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), floor});
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

inline std::vector<double> sine(double hz, std::size_t n, int sr, double amp = 0.5, double phase = 0.0) {
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i)
    s[i] = amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / sr + phase);
  return s;
}

/// Waveform SNR (dB) of `y` against `ref` over [lo, hi), maximized over
/// integer shifts of the reference within +-max_lag. Magnitude-only
/// reconstructions are defined up to such a shift.
inline double aligned_snr_db(const std::vector<double>& y, const std::vector<double>& ref, std::size_t lo,
                             std::size_t hi, int max_lag) {
  double best = -std::numeric_limits<double>::infinity();
  for (int lag = -max_lag; lag <= max_lag; ++lag) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const double r = ref[static_cast<std::size_t>(static_cast<long>(i) + lag)];
      num += (y[i] - r) * (y[i] - r);
      den += r * r;
    }
    best = std::max(best, 10.0 * std::log10(den / num));
  }
  return best;
}

/// Binomial 3-sigma bound for `count` hits out of `n` at probability p.
inline bool within_3sigma(std::size_t count, std::size_t n, double p) {
  const double mean = static_cast<double>(n) * p;
  const double sd = std::sqrt(static_cast<double>(n) * p * (1.0 - p));
  return std::abs(static_cast<double>(count) - mean) <= 3.0 * sd;
}

}  // namespace oracle
