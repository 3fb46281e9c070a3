#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "dynssv/diagnostics.hpp"

using namespace dynssv;

namespace {

std::vector<double> iid_normal(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<double> x(n);
  for (auto& v : x) v = nd(rng);
  return x;
}

std::vector<double> ar1(std::size_t n, double rho, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<double> x(n);
  const double s = std::sqrt(1.0 - rho * rho);
  x[0] = nd(rng);
  for (std::size_t i = 1; i < n; ++i) x[i] = rho * x[i - 1] + s * nd(rng);
  return x;
}

}  // namespace

TEST_CASE("geweke is zero for segments built from the same block") {
  // First 10% and last 50% are whole copies of one integer-valued block, so
  // both segment means are exactly equal in floating point.
  std::vector<double> block{1.0, -2.0, 3.0, 0.5, -1.5, 2.0, -0.5, 1.0, -3.0, 0.0};
  std::vector<double> chain(1000, 0.0);
  for (std::size_t i = 0; i < 100; ++i) chain[i] = block[i % block.size()];
  for (std::size_t i = 100; i < 500; ++i) chain[i] = 0.25;
  for (std::size_t i = 500; i < 1000; ++i) chain[i] = block[i % block.size()];
  CHECK(geweke_cd(chain) == 0.0);
}

TEST_CASE("geweke null calibration on white noise") {
  int pass = 0;
  for (int seed = 0; seed < 500; ++seed) {
    const auto chain = iid_normal(2000, 1000 + std::uint64_t(seed));
    if (std::fabs(geweke_cd(chain)) < 1.96) ++pass;
  }
  CHECK(pass >= 460);  // 95% +- 3% of 500
  CHECK(pass <= 490);
}

TEST_CASE("geweke flags a linear trend") {
  auto chain = iid_normal(2000, 7);
  for (std::size_t i = 0; i < chain.size(); ++i)
    chain[i] += 2.0 * double(i) / double(chain.size() - 1);
  CHECK(std::fabs(geweke_cd(chain)) > 1.96);
}

TEST_CASE("geweke is scale and shift invariant") {
  const auto chain = ar1(5000, 0.3, 11);
  const double z = geweke_cd(chain);
  std::vector<double> scaled(chain.size());
  for (std::size_t i = 0; i < chain.size(); ++i)
    scaled[i] = -3.7 * chain[i] + 42.0;
  CHECK(geweke_cd(scaled) == doctest::Approx(-z).epsilon(1e-10));
}

TEST_CASE("geweke rejects short or degenerate chains") {
  std::vector<double> tiny(50, 1.0);
  CHECK_THROWS_AS(geweke_cd(tiny), std::invalid_argument);
  std::vector<double> flat(500, 2.5);
  CHECK_THROWS_AS(geweke_cd(flat), std::runtime_error);
}

TEST_CASE("inefficiency factor matches analytic values") {
  CHECK(inefficiency_factor(iid_normal(10000, 3)) ==
        doctest::Approx(1.0).epsilon(0.1));
  // AR(1) rho=0.5: IF = (1+rho)/(1-rho) = 3
  CHECK(inefficiency_factor(ar1(100000, 0.5, 5)) ==
        doctest::Approx(3.0).epsilon(0.1));
  std::vector<double> flat(500, 1.0);
  CHECK_THROWS_AS(inefficiency_factor(flat), std::runtime_error);
  std::vector<double> tiny{1.0, 2.0};
  CHECK_THROWS_AS(inefficiency_factor(tiny), std::invalid_argument);
}

TEST_CASE("hpd picks the shortest window") {
  std::vector<double> grid(100);
  for (std::size_t i = 0; i < 100; ++i) grid[i] = double(i);
  auto [lo, hi] = hpd(grid, 0.95);
  CHECK(lo == 0.0);
  CHECK(hi == 94.0);

  // Large normal sample: endpoints near the analytic 95% quantiles.
  const auto draws = iid_normal(1000000, 13);
  auto [nlo, nhi] = hpd(draws, 0.95);
  CHECK(nlo == doctest::Approx(-1.959964).epsilon(0.011));
  CHECK(nhi == doctest::Approx(1.959964).epsilon(0.011));

  // Mass ~1 returns the whole range.
  std::vector<double> few(20);
  for (std::size_t i = 0; i < 20; ++i) few[i] = double(i) * 0.5;
  auto [flo, fhi] = hpd(few, 0.999999);
  CHECK(flo == 0.0);
  CHECK(fhi == 9.5);

  // The interval always contains at least ceil(mass*n) draws.
  const auto sample = ar1(400, 0.6, 17);
  for (double mass : {0.5, 0.9, 0.95}) {
    auto [a, b] = hpd(sample, mass);
    std::size_t inside = 0;
    for (double v : sample) inside += (v >= a && v <= b);
    CHECK(inside >= std::size_t(std::ceil(mass * 400.0)));
  }

  std::vector<double> small(19, 1.0);
  CHECK_THROWS_AS(hpd(small, 0.95), std::invalid_argument);
  CHECK_THROWS_AS(hpd(grid, 1.0), std::invalid_argument);
}

TEST_CASE("dic bookkeeping identities") {
  std::vector<double> same(50, 123.5);
  CHECK(dic(same, 123.5) == doctest::Approx(123.5).epsilon(1e-12));

  std::vector<double> dev{10.0, 12.0, 11.0, 13.0};
  const double base = dic(dev, 9.0);
  std::vector<double> shifted(dev);
  for (double& d : shifted) d += 5.0;
  CHECK(dic(shifted, 14.0) == doctest::Approx(base + 5.0).epsilon(1e-12));
  CHECK_THROWS_AS(dic(std::vector<double>{}, 1.0), std::invalid_argument);
}

TEST_CASE("dic matches the analytic value of a conjugate mean model") {
  // y_i ~ N(theta, 1) with a flat-limit normal prior: posterior is
  // N(ybar, 1/n), the effective parameter count is exactly 1, and
  // DIC = D(ybar) + 2.
  std::mt19937_64 rng(23);
  std::normal_distribution<double> nd;
  const std::size_t n = 25;
  std::vector<double> y(n);
  for (auto& v : y) v = 1.3 + nd(rng);
  double ybar = mean_of(y);

  auto deviance = [&](double theta) {
    double s = 0.0;
    for (double v : y) s += norm_logpdf(v, theta, 1.0);
    return -2.0 * s;
  };

  const std::size_t S = 200000;
  std::vector<double> dev(S);
  for (auto& d : dev) d = deviance(ybar + nd(rng) / std::sqrt(double(n)));
  const double got = dic(dev, deviance(ybar));
  CHECK(got == doctest::Approx(deviance(ybar) + 2.0).epsilon(0.0005));
}

TEST_CASE("waic closed forms") {
  // Identical rows: zero effective parameters.
  Matrix ll(4, 3);
  for (std::size_t r = 0; r < 4; ++r) {
    ll(r, 0) = std::log(0.5);
    ll(r, 1) = std::log(0.2);
    ll(r, 2) = std::log(0.8);
  }
  const double want = -2.0 * (std::log(0.5) + std::log(0.2) + std::log(0.8));
  CHECK(waic(ll) == doctest::Approx(want).epsilon(1e-12));

  // Two draws, one observation.
  const double a = 0.7, b = 0.2;
  Matrix two(2, 1);
  two(0, 0) = std::log(a);
  two(1, 0) = std::log(b);
  const double var = square(std::log(a) - std::log(b)) / 2.0;
  CHECK(waic(two) ==
        doctest::Approx(-2.0 * (std::log((a + b) / 2.0) - var)).epsilon(1e-12));

  // Row duplication changes only the S-1 variance denominator; the effect
  // vanishes at realistic draw counts.
  std::mt19937_64 rng(31);
  std::normal_distribution<double> nd;
  Matrix big(2000, 5);
  for (auto& v : big.data) v = -1.0 + 0.3 * nd(rng);
  Matrix dup(4000, 5);
  for (std::size_t r = 0; r < 2000; ++r)
    for (std::size_t t = 0; t < 5; ++t)
      dup(r, t) = dup(r + 2000, t) = big(r, t);
  CHECK(waic(dup) == doctest::Approx(waic(big)).epsilon(1e-4));

  Matrix badshape(1, 2);
  CHECK_THROWS_AS(waic(badshape), std::invalid_argument);
  Matrix nonfinite(3, 1);
  nonfinite(1, 0) = kNegInf;
  CHECK_THROWS_AS(waic(nonfinite), std::invalid_argument);
}

TEST_CASE("loo equals waic on zero-variance draws and matches plain IS") {
  Matrix ll(6, 2);
  for (std::size_t r = 0; r < 6; ++r) {
    ll(r, 0) = std::log(0.4);
    ll(r, 1) = std::log(0.9);
  }
  const double want = -2.0 * (std::log(0.4) + std::log(0.9));
  CHECK(loo_cv(ll).loo == doctest::Approx(want).epsilon(1e-12));
  CHECK(waic(ll) == doctest::Approx(want).epsilon(1e-12));
  CHECK(dic(std::vector<double>(6, want), want) ==
        doctest::Approx(want).epsilon(1e-12));

  // S=3: harmonic-mean identity of unsmoothed importance sampling.
  Matrix tiny(3, 2);
  tiny(0, 0) = std::log(0.5);
  tiny(1, 0) = std::log(0.25);
  tiny(2, 0) = std::log(0.125);
  tiny(0, 1) = std::log(0.9);
  tiny(1, 1) = std::log(0.7);
  tiny(2, 1) = std::log(0.2);
  double expect = 0.0;
  for (std::size_t t = 0; t < 2; ++t) {
    double inv = 0.0;
    for (std::size_t s = 0; s < 3; ++s) inv += std::exp(-tiny(s, t));
    expect += std::log(3.0) - std::log(inv);
  }
  const auto res = loo_cv(tiny);
  CHECK(res.loo == doctest::Approx(-2.0 * expect).epsilon(1e-12));
  CHECK(std::isnan(res.khat[0]));  // no smoothing below S=500
  CHECK(res.flagged == 0);
}

TEST_CASE("pareto smoothing engages on large draw counts") {
  // Well-behaved weights: khat low, nothing flagged.
  std::mt19937_64 rng(41);
  std::normal_distribution<double> nd;
  const std::size_t S = 1000;
  Matrix ll(S, 2);
  for (std::size_t s = 0; s < S; ++s) {
    const double theta = 0.1 * nd(rng);
    ll(s, 0) = norm_logpdf(1.2, theta, 1.0);
    ll(s, 1) = norm_logpdf(-0.4, theta, 1.0);
  }
  const auto good = loo_cv(ll);
  CHECK(std::isfinite(good.loo));
  REQUIRE(good.khat.size() == 2);
  CHECK(good.khat[0] < 0.7);
  CHECK(good.khat[1] < 0.7);
  CHECK(good.flagged == 0);

  // Pareto(alpha=1) importance weights: true shape k = 1, flagged.
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  Matrix heavy(S, 1);
  for (std::size_t s = 0; s < S; ++s) heavy(s, 0) = std::log(ud(rng));
  const auto flagged = loo_cv(heavy);
  CHECK(flagged.khat[0] > 0.7);
  CHECK(flagged.khat[0] < 1.5);
  CHECK(flagged.flagged == 1);

  // Row order never matters.
  Matrix shuffled = ll;
  std::vector<std::size_t> idx(S);
  for (std::size_t i = 0; i < S; ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  for (std::size_t i = 0; i < S; ++i)
    for (std::size_t t = 0; t < 2; ++t) shuffled(i, t) = ll(idx[i], t);
  CHECK(loo_cv(shuffled).loo == doctest::Approx(good.loo).epsilon(1e-10));
  CHECK(waic(shuffled) == doctest::Approx(waic(ll)).epsilon(1e-10));
}

TEST_CASE("summarize_chain combines the pieces") {
  const auto chain = ar1(4000, 0.4, 19);
  const auto s = summarize_chain("theta", chain);
  CHECK(s.name == "theta");
  CHECK(s.mean == doctest::Approx(mean_of(chain)).epsilon(1e-12));
  const auto [lo, hi] = hpd(chain);
  CHECK(s.hpd_low == lo);
  CHECK(s.hpd_high == hi);
  CHECK(s.cd == doctest::Approx(geweke_cd(chain)).epsilon(1e-12));
  CHECK(s.inefficiency >= 1.0);
  CHECK(lo < hi);
}
