#pragma once

// Adaptive Hamiltonian Monte Carlo with trajectory doubling, U-turn
// termination, multinomial sampling across the trajectory, dual-averaging
// step-size adaptation and a windowed diagonal metric, following
// Hoffman & Gelman (2014) and the Stan warmup layout.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dynssv/math.hpp"
#include "dynssv/model.hpp"
#include "dynssv/target.hpp"

namespace dynssv {

struct SamplerConfig {
  std::size_t iterations = 3000;
  std::size_t warmup = 1500;
  std::size_t chains = 1;
  std::uint64_t seed = 1;
  double target_accept = 0.8;
  int max_tree_depth = 10;
  double init_jitter = 0.5;

  std::size_t kept() const { return iterations - warmup; }
  void validate() const;
};

struct ChainOutput {
  Matrix draws;             // kept x dim, unconstrained sampled scale
  Matrix constrained;       // kept x n_scalars, natural scale (fit only)
  std::vector<std::string> constrained_names;
  Matrix pointwise_loglik;  // kept x T (fit only)
  std::vector<double> accept_stats;  // per kept iteration
  std::vector<double> step_sizes;
  std::vector<int> tree_depths;
  std::vector<std::uint8_t> divergent;
  std::size_t divergences = 0;  // post-warmup count
  double step_size_final = 0.0;
  std::vector<double> inv_metric;
  double wall_seconds = 0.0;
};

// One leapfrog step under a diagonal metric: half momentum kick, position
// drift, half kick. Updates q, p, grad in place and returns the new log
// density. eps may be negative (backward integration).
double leapfrog_step(const LogDensity& target,
                     std::span<const double> inv_metric, double eps,
                     std::vector<double>& q, std::vector<double>& p,
                     std::vector<double>& grad);

// One adaptive chain. init must be finite with finite target value.
ChainOutput run_chain(const LogDensity& target, const SamplerConfig& config,
                      std::span<const double> init);

struct FitResult {
  std::vector<ChainOutput> chains;
  ModelConfig model;
  PriorConfig priors;
  SamplerConfig sampler;
  Dataset data;

  // Pooled posterior means of the latent paths (all chains, kept draws).
  std::vector<double> h_mean, alpha_mean, u_mean, w_mean;
  // Pooled thinned latent draws for plotting and interval bands.
  Matrix h_draws, alpha_draws;

  std::size_t T() const { return data.size(); }
  // Pooled kept draws of one named scalar parameter.
  std::vector<double> scalar_draws(const std::string& name) const;
  // Per-chain draws of one named scalar parameter.
  std::vector<double> scalar_draws(const std::string& name,
                                   std::size_t chain) const;
  // Pooled pointwise log-likelihood, rows stacked across chains.
  Matrix pooled_loglik() const;
};

// Full pipeline: builds the non-centered target, initializes each chain
// near the prior medians with +- init_jitter uniform noise on the
// unconstrained scale, runs the chains (in parallel when DYNSSV_THREADS
// allows) and fills constrained draws, pointwise log-likelihoods and latent
// summaries.
FitResult fit(const Dataset& data, const ModelConfig& model,
              const PriorConfig& priors, const SamplerConfig& sampler);

// Thread budget: DYNSSV_THREADS when set, otherwise 1.
std::size_t thread_budget();

// Deviance (-2 log-likelihood) per pooled kept draw, and at the posterior
// mean of parameters and latent paths, for information criteria.
std::vector<double> deviance_draws(const FitResult& fit);
double deviance_at_mean(const FitResult& fit);

}  // namespace dynssv
