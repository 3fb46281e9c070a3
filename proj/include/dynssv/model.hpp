#pragma once

// Stochastic-volatility model with time-varying skewness:
//   y_t     = exp(h_t / 2) z_t,
//   h_t     = mu + phi (h_{t-1} - mu) + sigma_h eps_t,   h_1 stationary,
//   alpha_t = alpha_{t-1} + sigma_alpha eps_t^a,          alpha_1 = alpha1,
//   z_t     ~ SMSN(alpha_t) standardized to mean 0, variance 1.
// The static variant pins alpha_t == alpha1 and removes sigma_alpha.
//
// Augmented with the mixing variables U_t and half-normal W_t the
// observation law is conditionally Gaussian; log_posterior evaluates that
// augmented joint on the centered (natural) scale.

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dynssv/smsn.hpp"

namespace dynssv {

struct ModelParams {
  double mu = 0.0;
  double phi = 0.95;
  double sigma_h = 0.15;
  double alpha1 = 0.0;
  double kappa = 1.0;
  double sigma_alpha = 0.1;
  MixingFamily family = MixingFamily::normal();

  // allow_zero_scales permits the degenerate sigma_h = 0 / sigma_alpha = 0
  // corners used by simulation checks; inference configs require > 0.
  void validate(bool allow_zero_scales = false) const;
};

struct LatentPath {
  std::vector<double> h;      // length T
  std::vector<double> alpha;  // length T, alpha[0] == alpha1
  std::vector<double> u;      // length T, all 1 for the normal family
  std::vector<double> w;      // length T, half-normal draws
};

struct Dataset {
  std::vector<double> y;
  std::string label = "data";

  std::size_t size() const { return y.size(); }
  void validate() const;  // T >= 2, all finite
};

// Rate of the penalizing exponential prior on sigma_alpha implied by the
// tail condition P(sigma_alpha > u) = p.
double pcp_lambda(double u, double p);

enum class SigmaAlphaPriorKind { Pcp, ExpHier, InvGamma };

struct SigmaAlphaPrior {
  SigmaAlphaPriorKind kind = SigmaAlphaPriorKind::Pcp;
  double u = 0.5;      // Pcp threshold
  double p = 0.5;      // Pcp tail probability
  double shape = 2.5;  // InvGamma on sigma_alpha^2
  double scale = 0.025;

  double lambda() const { return pcp_lambda(u, p); }
  // Rates >= 100 push essentially all mass onto a frozen skewness path;
  // accepted, but surfaced as a warning by the front end.
  bool near_degenerate() const;
  std::string describe() const;

  // Text form used by config files: "pcp:U,P", "exp", "ig:shape,scale".
  static SigmaAlphaPrior parse(const std::string& text);
};

struct PriorConfig {
  double mu_mean = 0.0;
  double mu_var = 10.0;  // variance, not standard deviation
  double phi_beta_a = 20.0;
  double phi_beta_b = 1.5;
  double sh2_shape = 2.5;  // inverse-gamma on sigma_h^2
  double sh2_scale = 0.025;
  double kappa_shape = 0.1;  // gamma, rate parameterization
  double kappa_rate = 0.1;
  double nu_shape = 2.0;  // gamma, rate parameterization; family-dependent
  double nu_rate = 0.1;
  SigmaAlphaPrior sigma_alpha;

  static PriorConfig defaults(const MixingFamily& family);
  void validate() const;
};

struct ModelConfig {
  MixKind kind = MixKind::Normal;
  bool dynamic_skewness = true;
};

struct Simulation {
  Dataset data;
  LatentPath latents;
};

Simulation simulate(const ModelParams& params, std::size_t T,
                    std::mt19937_64& rng);

// Sum of log prior densities on the constrained scale. No sampling-transform
// Jacobians here; fixed reparameterizations inside a prior's own definition
// (variance-scale inverse-gamma, Beta on (phi+1)/2) are part of its density.
// Returns -inf out of support.
double log_prior(const ModelParams& params, const PriorConfig& priors,
                 bool dynamic_skewness = true);

// log N(y; m, s) of the conditionally Gaussian observation law with
//   m = (gamma + omega delta w / sqrt(u)) e^{h/2},
//   s = omega sqrt(1 - delta^2) e^{h/2} / sqrt(u),
// gamma/omega from standardize(alpha, family).
double obs_loglik(double y, double h, double alpha, double u, double w,
                  const MixingFamily& family);

// Unnormalized augmented log joint on the centered scale.
double log_posterior(const ModelParams& params, const LatentPath& latents,
                     const Dataset& data, const PriorConfig& priors,
                     bool dynamic_skewness = true);

// Packing of (params, latents) into one unconstrained vector and back.
// Layout: [mu, phi', log sigma_h, alpha1, log kappa, (log sigma_alpha),
// (nu'), h_1..h_T, alpha_2..alpha_T, (u'_1..u'_T), log w_1..log w_T] where
// phi' is the scaled inverse logistic, nu' = log(nu - nu_min) and u' is
// log u (student_t) or logit u (slash).
class ParamLayout {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  ParamLayout(MixKind kind, bool dynamic_skewness, std::size_t T);

  std::size_t dim() const { return dim_; }
  std::size_t T() const { return T_; }
  MixKind kind() const { return kind_; }
  bool dynamic() const { return dynamic_; }
  bool has_mixing() const { return kind_ != MixKind::Normal; }
  double nu_min() const;
  std::size_t n_scalars() const { return n_scalars_; }

  std::size_t i_mu() const { return 0; }
  std::size_t i_phi() const { return 1; }
  std::size_t i_sigma_h() const { return 2; }
  std::size_t i_alpha1() const { return 3; }
  std::size_t i_kappa() const { return 4; }
  std::size_t i_sigma_alpha() const { return dynamic_ ? 5 : npos; }
  std::size_t i_nu() const { return has_mixing() ? n_scalars_ - 1 : npos; }
  std::size_t off_h() const { return n_scalars_; }
  std::size_t off_alpha() const { return off_h() + T_; }  // alpha_2..alpha_T
  std::size_t off_u() const { return off_alpha() + (dynamic_ ? T_ - 1 : 0); }
  std::size_t off_w() const { return off_u() + (has_mixing() ? T_ : 0); }

  std::vector<std::string> scalar_names() const;

  void to_unconstrained(const ModelParams& params, const LatentPath& latents,
                        std::span<double> x) const;
  // Returns the log |det| of the constraining map (added to the target).
  // Throws NumericError on non-finite entries.
  double to_constrained(std::span<const double> x, ModelParams& params,
                        LatentPath& latents) const;

 private:
  MixKind kind_;
  bool dynamic_;
  std::size_t T_;
  std::size_t n_scalars_;
  std::size_t dim_;
};

}  // namespace dynssv
