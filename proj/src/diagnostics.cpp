#include "dynssv/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dynssv {

namespace {

double segment_mean(std::span<const double> x) { return mean_of(x); }

// Autocovariance at lag k with the population (1/n) denominator.
double autocov(std::span<const double> x, double mean, std::size_t k) {
  CompensatedSum s;
  for (std::size_t i = 0; i + k < x.size(); ++i)
    s.add((x[i] - mean) * (x[i + k] - mean));
  return s.value() / double(x.size());
}

// Spectral density at zero via a Bartlett window over the first 4% of lags.
double spectral_variance(std::span<const double> x) {
  const double m = segment_mean(x);
  const double g0 = autocov(x, m, 0);
  if (!(g0 > 0.0))
    throw std::runtime_error("geweke_cd: degenerate (zero-variance) segment");
  const std::size_t L = std::max<std::size_t>(
      1, std::size_t(0.04 * double(x.size())));
  double s = g0;
  for (std::size_t k = 1; k <= L; ++k)
    s += 2.0 * (1.0 - double(k) / double(L + 1)) * autocov(x, m, k);
  return s > 0.0 ? s : g0;
}

}  // namespace

double geweke_cd(std::span<const double> chain) {
  const std::size_t n = chain.size();
  if (n < 100) throw std::invalid_argument("geweke_cd: need length >= 100");
  const std::size_t na = std::max<std::size_t>(1, n / 10);
  const std::size_t nb = std::max<std::size_t>(1, n / 2);
  const auto a = chain.first(na);
  const auto b = chain.last(nb);
  const double ma = segment_mean(a), mb = segment_mean(b);
  const double sa = spectral_variance(a), sb = spectral_variance(b);
  return (ma - mb) / std::sqrt(sa / double(na) + sb / double(nb));
}

double inefficiency_factor(std::span<const double> chain) {
  const std::size_t n = chain.size();
  if (n < 100)
    throw std::invalid_argument("inefficiency_factor: need length >= 100");
  const double m = segment_mean(chain);
  const double g0 = autocov(chain, m, 0);
  if (!(g0 > 0.0))
    throw std::runtime_error("inefficiency_factor: degenerate chain");
  // Sum paired autocorrelations while the pair sums stay positive.
  double sum = 0.0;  // rho_1 + rho_2 + ... up to the truncation lag
  for (std::size_t k = 1; k + 1 < n; k += 2) {
    const double pair = autocov(chain, m, k) + autocov(chain, m, k + 1);
    if (!(pair > 0.0)) break;
    sum += pair / g0;
  }
  return 1.0 + 2.0 * sum;
}

std::pair<double, double> hpd(std::span<const double> chain, double mass) {
  const std::size_t n = chain.size();
  if (n < 20) throw std::invalid_argument("hpd: need at least 20 draws");
  if (!(mass > 0.0 && mass < 1.0))
    throw std::invalid_argument("hpd: mass must be in (0,1)");
  std::vector<double> x(chain.begin(), chain.end());
  std::sort(x.begin(), x.end());
  const std::size_t k =
      std::min<std::size_t>(n, std::size_t(std::ceil(mass * double(n))));
  std::size_t best = 0;
  double width = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + k <= n; ++i) {
    const double w = x[i + k - 1] - x[i];
    if (w < width) {
      width = w;
      best = i;
    }
  }
  return {x[best], x[best + k - 1]};
}

ParamSummary summarize_chain(const std::string& name,
                             std::span<const double> chain) {
  ParamSummary s;
  s.name = name;
  s.mean = mean_of(chain);
  const auto [lo, hi] = hpd(chain);
  s.hpd_low = lo;
  s.hpd_high = hi;
  s.cd = geweke_cd(chain);
  const double raw = inefficiency_factor(chain);
  s.inefficiency_clipped = raw < 1.0;
  s.inefficiency = std::max(1.0, raw);
  return s;
}

double dic(std::span<const double> deviance_draws, double deviance_at_mean) {
  if (deviance_draws.empty())
    throw std::invalid_argument("dic: no deviance draws");
  const double dbar = mean_of(deviance_draws);
  return 2.0 * dbar - deviance_at_mean;
}

namespace {

void check_loglik(const Matrix& ll) {
  if (ll.rows < 2 || ll.cols < 1)
    throw std::invalid_argument("pointwise log-likelihood: need S >= 2, T >= 1");
  for (double v : ll.data)
    if (!std::isfinite(v))
      throw std::invalid_argument(
          "pointwise log-likelihood: non-finite entry");
}

// Generalized-Pareto fit to sorted excesses by the Zhang-Stephens posterior
// mean over a profile grid; returns the shape (regularized toward 0.5) and
// scale.
struct GpdFit {
  double k = 0.0;
  double sigma = 1.0;
};

GpdFit gpd_fit(const std::vector<double>& x) {  // x ascending, x.back() > 0
  const std::size_t n = x.size();
  const std::size_t grid = 30 + std::size_t(std::sqrt(double(n)));
  double xstar = x[std::size_t(double(n) / 4.0 + 0.5) - 1];
  if (!(xstar > 0.0))
    for (double xi : x)
      if (xi > 0.0) {
        xstar = xi;
        break;
      }
  const double inv_max = 1.0 / x[n - 1];
  std::vector<double> theta(grid), logl(grid);
  for (std::size_t j = 0; j < grid; ++j) {
    theta[j] = inv_max + (1.0 - std::sqrt(double(grid) / (double(j) + 0.5))) /
                             (3.0 * xstar);
    double kj = 0.0;
    for (double xi : x) kj += std::log1p(-theta[j] * xi);
    kj /= double(n);
    logl[j] = double(n) * (std::log(-theta[j] / kj) - kj - 1.0);
  }
  const double lse = log_sum_exp(logl);
  double theta_hat = 0.0;
  for (std::size_t j = 0; j < grid; ++j)
    theta_hat += theta[j] * std::exp(logl[j] - lse);
  GpdFit fit;
  double k = 0.0;
  for (double xi : x) k += std::log1p(-theta_hat * xi);
  k /= double(n);
  fit.sigma = -k / theta_hat;
  // Weak shrinkage of the shape toward 0.5 stabilizes small tails.
  fit.k = k * double(n) / (double(n) + 10.0) + 0.5 * 10.0 / (double(n) + 10.0);
  return fit;
}

double gpd_quantile(double p, const GpdFit& fit) {
  if (std::fabs(fit.k) < 1e-12) return -fit.sigma * std::log1p(-p);
  return fit.sigma * std::expm1(-fit.k * std::log1p(-p)) / fit.k;
}

}  // namespace

double waic(const Matrix& ll) {
  check_loglik(ll);
  const std::size_t S = ll.rows, T = ll.cols;
  CompensatedSum acc;
  std::vector<double> col(S);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t s = 0; s < S; ++s) col[s] = ll(s, t);
    const double lppd = log_sum_exp(col) - std::log(double(S));
    const double mean = mean_of(col);
    CompensatedSum v;
    for (double c : col) v.add(square(c - mean));
    const double p = v.value() / double(S - 1);
    acc.add(lppd - p);
  }
  return -2.0 * acc.value();
}

LooResult loo_cv(const Matrix& ll) {
  check_loglik(ll);
  const std::size_t S = ll.rows, T = ll.cols;
  const bool smooth = S >= 500;
  LooResult out;
  out.khat.assign(T, std::numeric_limits<double>::quiet_NaN());

  CompensatedSum elpd;
  std::vector<double> logw(S), col(S);
  std::vector<std::size_t> order(S);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      col[s] = ll(s, t);
      logw[s] = -col[s];
    }
    const std::size_t m = S / 5;  // top 20% of weights form the tail
    if (smooth && m >= 5) {
      order.resize(S);
      for (std::size_t s = 0; s < S; ++s) order[s] = s;
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return logw[a] < logw[b];
      });
      const double log_cut = logw[order[S - m - 1]];
      std::vector<double> excess(m);
      bool positive = false;
      for (std::size_t j = 0; j < m; ++j) {
        excess[j] = std::exp(logw[order[S - m + j]] - log_cut) - 1.0;
        positive = positive || excess[j] > 0.0;
      }
      if (positive) {
        for (double& e : excess) e = std::max(e, 0.0);
        const GpdFit fit = gpd_fit(excess);
        out.khat[t] = fit.k;
        if (fit.k > 0.7) ++out.flagged;
        for (std::size_t j = 0; j < m; ++j) {
          const double p = (double(j) + 0.5) / double(m);
          const double w = 1.0 + gpd_quantile(p, fit);
          // Smoothed tail weights never exceed the largest raw weight.
          logw[order[S - m + j]] = std::min(
              log_cut + std::log(w), logw[order[S - 1]]);
        }
      } else {
        out.khat[t] = 0.0;
      }
    }
    double num, den;
    {
      std::vector<double> tmp(S);
      for (std::size_t s = 0; s < S; ++s) tmp[s] = logw[s] + col[s];
      num = log_sum_exp(tmp);
      den = log_sum_exp(logw);
    }
    elpd.add(num - den);
  }
  out.loo = -2.0 * elpd.value();
  return out;
}

}  // namespace dynssv
