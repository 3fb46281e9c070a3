#pragma once

// Scalar numeric helpers shared across the library. Everything here is
// header-only and allocation-free.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace dynssv {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLog2Pi = 1.83787706640934548356;
inline constexpr double kSqrt2 = 1.41421356237309504880;
inline constexpr double kTwoOverPi = 0.63661977236758134308;
inline constexpr double kSqrtTwoOverPi = 0.79788456080286535588;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Raised when an internal numeric routine cannot meet its accuracy target
// (quadrature failure, non-finite intermediate, ...). Distinct from
// std::domain_error, which signals invalid caller input.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double square(double x) { return x * x; }

inline double norm_logpdf(double x) { return -0.5 * (kLog2Pi + x * x); }

inline double norm_logpdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * (kLog2Pi + z * z) - std::log(sd);
}

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

// log Phi(x), finite for all finite x. erfc underflows near x = -37.5, so the
// far left tail switches to the standard continued-fraction-derived expansion
// log Phi(x) ~ -x^2/2 - log(-x) - log(2 pi)/2 + log1p(sum); the two branches
// agree to ~1e-13 at the switch point.
inline double norm_logcdf(double x) {
  if (x > -30.0) {
    return std::log(0.5 * std::erfc(-x / kSqrt2));
  }
  const double x2 = x * x;
  const double inv2 = 1.0 / x2;
  const double series = inv2 * (-1.0 + inv2 * (3.0 + inv2 * (-15.0 + inv2 * 105.0)));
  return -0.5 * x2 - 0.5 * kLog2Pi - std::log(-x) + std::log1p(series);
}

inline double logistic(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

inline double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = a > b ? a : b;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

inline double log_sum_exp(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v) m = x > m ? x : m;
  if (m == kNegInf || !std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// Neumaier compensated accumulator: running sum with first-order error
// compensation, so the total is invariant to input ordering at ~1e-16.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double mean_of(std::span<const double> v) {
  CompensatedSum s;
  for (double x : v) s.add(x);
  return s.value() / static_cast<double>(v.size());
}

inline double variance_of(std::span<const double> v) {
  const double m = mean_of(v);
  CompensatedSum s;
  for (double x : v) s.add(square(x - m));
  return s.value() / static_cast<double>(v.size());
}

// Streaming mean/variance (Welford). Used by the sampler's metric adaptation
// and by diagnostics that cannot afford a second pass.
class Welford {
 public:
  void add(double x) {
    n_ += 1;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double sample_variance() const {
    return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// splitmix64: cheap stateless stream splitter. Used to derive independent
// chain/replicate seeds from one root seed without correlated streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Row-major dense matrix, just enough for draw blocks and log-lik tables.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(data).subspan(i * cols, cols);
  }
  std::span<double> row(std::size_t i) {
    return std::span<double>(data).subspan(i * cols, cols);
  }
};

}  // namespace dynssv
