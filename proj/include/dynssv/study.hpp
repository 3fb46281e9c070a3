#pragma once

// Monte Carlo replication harness: simulate from known parameters, refit
// under a menu of scale priors, and aggregate bias / RMSE / coverage /
// convergence metrics per parameter.

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dynssv/model.hpp"
#include "dynssv/sampler.hpp"

namespace dynssv {

struct Scenario {
  ModelParams true_params;
  std::size_t T = 500;
  std::size_t replicates = 20;
  ModelConfig model;
  std::vector<PriorConfig> prior_menu;  // one fit per entry per replicate
  SamplerConfig sampler;                // sampler.seed is the study root seed

  void validate() const;

  // JSON round trip used by scenario files.
  static Scenario from_json_text(const std::string& text);
  std::string to_json_text() const;
};

// mean(est - truth)/truth, or plain mean error when truth == 0.
double relative_bias(std::span<const double> estimates, double truth);

// sqrt(mean((est - truth)^2))/|truth|, unscaled when truth == 0.
double relative_rmse(std::span<const double> estimates, double truth);

// Fraction of intervals containing truth.
double coverage(const std::vector<std::pair<double, double>>& intervals,
                double truth);

// Binomial band mass +- 1.96 sqrt(mass(1-mass)/m), clipped to [0, 1].
std::pair<double, double> coverage_band(double mass, std::size_t m);

// Parameters the aggregated study table reports: level, persistence and
// scale of log-volatility, the skewness-walk scale when the fitted model is
// dynamic, and the tail parameter when the family has one.
std::vector<std::string> table_parameters(MixKind kind, bool dynamic);

struct ParamMetrics {
  std::string name;
  double truth = 0.0;
  // Metrics stay NaN when every replicate for the prior failed.
  double mean = std::numeric_limits<double>::quiet_NaN();
  double inf = std::numeric_limits<double>::quiet_NaN();   // mean HPD lower bound
  double sup = std::numeric_limits<double>::quiet_NaN();   // mean HPD upper bound
  double cd = std::numeric_limits<double>::quiet_NaN();    // mean Geweke CD
  double bias_rel = std::numeric_limits<double>::quiet_NaN();
  double rmse_rel = std::numeric_limits<double>::quiet_NaN();
  double coverage = std::numeric_limits<double>::quiet_NaN();
};

// Per-replicate outcome; metric vectors align with table_parameters order
// and stay empty for failed replicates.
struct RepRecord {
  bool ok = false;
  std::string error;
  std::vector<double> means, lows, highs, cds;
};

struct PriorMetrics {
  std::string prior_label;
  std::vector<ParamMetrics> rows;
  std::vector<RepRecord> reps;  // one per replicate, failures included
  std::size_t included = 0;     // replicates that finished
  std::size_t failed = 0;       // replicates whose sampler aborted
  std::vector<std::string> failure_messages;
};

struct StudyResult {
  std::vector<PriorMetrics> priors;
  std::size_t replicates = 0;
};

// Runs the full grid; replicate r uses a sub-seed split from sampler.seed,
// so results are a deterministic function of the scenario.
StudyResult run_scenario(const Scenario& s);

// CSV table with the metric column order Mean, Inf, Sup, CD, Bias_rel,
// RMSE_rel, Coverage.
std::string study_csv(const StudyResult& r);

}  // namespace dynssv
