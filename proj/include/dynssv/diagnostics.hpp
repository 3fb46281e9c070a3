#pragma once

// Chain summaries (mean, shortest credible interval, Geweke convergence
// z-score, inefficiency factor) and model-comparison criteria (DIC, WAIC,
// importance-sampling LOO-CV with Pareto-smoothed weights).

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dynssv/math.hpp"

namespace dynssv {

// Geweke convergence diagnostic: z-score of the mean difference between the
// first 10% and last 50% of the chain, each variance estimated by the
// Bartlett-windowed autocovariance sum (window 4% of the segment).
// Requires length >= 100 and positive variance in both segments.
double geweke_cd(std::span<const double> chain);

// 1 + 2 sum of autocorrelations, truncated where Geyer's paired
// autocorrelation sums turn non-positive. Requires length >= 100 and
// positive variance.
double inefficiency_factor(std::span<const double> chain);

// Shortest interval among contiguous windows of ceil(mass*n) sorted draws;
// ties resolved toward the smallest lower endpoint. Requires n >= 20.
std::pair<double, double> hpd(std::span<const double> chain,
                              double mass = 0.95);

struct ParamSummary {
  std::string name;
  double mean = 0.0;
  double hpd_low = 0.0;
  double hpd_high = 0.0;
  double cd = 0.0;
  double inefficiency = 1.0;
  bool inefficiency_clipped = false;  // raw estimate fell below 1
};

ParamSummary summarize_chain(const std::string& name,
                             std::span<const double> chain);

// DIC = mean deviance + (mean deviance - deviance at the posterior mean).
double dic(std::span<const double> deviance_draws, double deviance_at_mean);

// WAIC = -2 sum_t (lppd_t - p_t), lppd via log-sum-exp over draws, p_t the
// sample variance (S-1 denominator) of the pointwise log-likelihood.
double waic(const Matrix& pointwise_loglik);

struct LooResult {
  double loo = 0.0;           // -2 * elpd_loo
  std::vector<double> khat;   // per-observation Pareto shape (NaN: unsmoothed)
  std::size_t flagged = 0;    // observations with khat > 0.7
};

// Importance-sampling leave-one-out estimate with inverse-likelihood
// weights; the top 20% of weights per observation are replaced by fitted
// generalized-Pareto quantiles when S >= 500 (plain IS below that).
LooResult loo_cv(const Matrix& pointwise_loglik);

}  // namespace dynssv
