#include "dynssv/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "dynssv/math.hpp"

namespace dynssv {

namespace {

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

double gamma_logpdf(double x, double shape, double rate) {
  if (!(x > 0.0)) return kNegInf;
  return shape * std::log(rate) - std::lgamma(shape) +
         (shape - 1.0) * std::log(x) - rate * x;
}

// Inverse-gamma density in shape/scale form: b^a/Gamma(a) v^-(a+1) e^{-b/v}.
double invgamma_logpdf(double v, double shape, double scale) {
  if (!(v > 0.0)) return kNegInf;
  return shape * std::log(scale) - std::lgamma(shape) -
         (shape + 1.0) * std::log(v) - scale / v;
}

double beta_logpdf(double x, double a, double b) {
  if (!(x > 0.0) || !(x < 1.0)) return kNegInf;
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) +
         std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
}

// Mixing-variable prior density for one latent u.
double mixing_logpdf(double u, const MixingFamily& family) {
  switch (family.kind) {
    case MixKind::Normal:
      return 0.0;  // u is degenerate at 1; no density term
    case MixKind::StudentT:
      return gamma_logpdf(u, 0.5 * family.nu, 0.5 * family.nu);
    case MixKind::Slash:
      if (!(u > 0.0) || !(u < 1.0)) return kNegInf;
      return std::log(family.nu) + (family.nu - 1.0) * std::log(u);
  }
  return kNegInf;
}

}  // namespace

void ModelParams::validate(bool allow_zero_scales) const {
  family.validate();
  if (!std::isfinite(mu) || !std::isfinite(alpha1)) {
    throw std::domain_error("mu and alpha1 must be finite");
  }
  if (!std::isfinite(phi) || std::abs(phi) >= 1.0) {
    throw std::domain_error("phi must lie in (-1, 1)");
  }
  if (!std::isfinite(kappa) || kappa <= 0.0) {
    throw std::domain_error("kappa must be positive");
  }
  if (!std::isfinite(sigma_h) || sigma_h < 0.0 ||
      (!allow_zero_scales && sigma_h == 0.0)) {
    throw std::domain_error("sigma_h out of range");
  }
  if (!std::isfinite(sigma_alpha) || sigma_alpha < 0.0 ||
      (!allow_zero_scales && sigma_alpha == 0.0)) {
    throw std::domain_error("sigma_alpha out of range");
  }
}

void Dataset::validate() const {
  if (y.size() < 2) {
    throw std::domain_error("series length must be at least 2");
  }
  if (!all_finite(y)) {
    throw std::domain_error("series contains non-finite values");
  }
}

double pcp_lambda(double u, double p) {
  if (!std::isfinite(u) || u <= 0.0) {
    throw std::domain_error("tail threshold must be positive");
  }
  if (!std::isfinite(p) || p <= 0.0 || p >= 1.0) {
    throw std::domain_error("tail probability must lie in (0,1)");
  }
  return -std::log(p) / u;
}

bool SigmaAlphaPrior::near_degenerate() const {
  return kind == SigmaAlphaPriorKind::Pcp && lambda() >= 100.0;
}

std::string SigmaAlphaPrior::describe() const {
  std::ostringstream s;
  switch (kind) {
    case SigmaAlphaPriorKind::Pcp:
      s << "pcp:" << u << "," << p;
      break;
    case SigmaAlphaPriorKind::ExpHier:
      s << "exp";
      break;
    case SigmaAlphaPriorKind::InvGamma:
      s << "ig:" << shape << "," << scale;
      break;
  }
  return s.str();
}

SigmaAlphaPrior SigmaAlphaPrior::parse(const std::string& text) {
  SigmaAlphaPrior out;
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string args =
      colon == std::string::npos ? "" : text.substr(colon + 1);
  auto two_args = [&](double& a, double& b) {
    const auto comma = args.find(',');
    if (comma == std::string::npos) {
      throw std::domain_error("prior '" + head + "' expects two arguments");
    }
    std::size_t used = 0;
    a = std::stod(args.substr(0, comma), &used);
    b = std::stod(args.substr(comma + 1), &used);
  };
  if (head == "pcp") {
    out.kind = SigmaAlphaPriorKind::Pcp;
    if (!args.empty()) two_args(out.u, out.p);
    pcp_lambda(out.u, out.p);  // validates
  } else if (head == "exp") {
    out.kind = SigmaAlphaPriorKind::ExpHier;
  } else if (head == "ig") {
    out.kind = SigmaAlphaPriorKind::InvGamma;
    if (!args.empty()) two_args(out.shape, out.scale);
    if (!(out.shape > 0.0) || !(out.scale > 0.0)) {
      throw std::domain_error("inverse-gamma prior needs positive shape/scale");
    }
  } else {
    throw std::domain_error("unknown sigma_alpha prior: " + text);
  }
  return out;
}

PriorConfig PriorConfig::defaults(const MixingFamily& family) {
  PriorConfig c;
  if (family.kind == MixKind::Slash) {
    c.nu_shape = 0.08;
    c.nu_rate = 0.04;
  } else {
    c.nu_shape = 2.0;
    c.nu_rate = 0.1;
  }
  return c;
}

void PriorConfig::validate() const {
  for (double v : {mu_var, phi_beta_a, phi_beta_b, sh2_shape, sh2_scale,
                   kappa_shape, kappa_rate, nu_shape, nu_rate}) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw std::domain_error("prior hyperparameters must be positive");
    }
  }
  if (sigma_alpha.kind == SigmaAlphaPriorKind::Pcp) {
    pcp_lambda(sigma_alpha.u, sigma_alpha.p);
  }
}

Simulation simulate(const ModelParams& params, std::size_t T,
                    std::mt19937_64& rng) {
  params.validate(/*allow_zero_scales=*/true);
  if (T < 2) {
    throw std::domain_error("series length must be at least 2");
  }
  Simulation out;
  out.data.label = "sim";
  out.data.y.resize(T);
  out.latents.h.resize(T);
  out.latents.alpha.resize(T);
  out.latents.u.resize(T);
  out.latents.w.resize(T);

  std::normal_distribution<double> normal(0.0, 1.0);
  const double stat_sd =
      params.sigma_h / std::sqrt(1.0 - params.phi * params.phi);
  out.latents.h[0] = params.mu + stat_sd * normal(rng);
  for (std::size_t t = 1; t < T; ++t) {
    out.latents.h[t] = params.mu + params.phi * (out.latents.h[t - 1] - params.mu) +
                       params.sigma_h * normal(rng);
  }
  out.latents.alpha[0] = params.alpha1;
  for (std::size_t t = 1; t < T; ++t) {
    out.latents.alpha[t] =
        out.latents.alpha[t - 1] + params.sigma_alpha * normal(rng);
  }
  for (std::size_t t = 0; t < T; ++t) {
    const SnParams sp = standardize(out.latents.alpha[t], params.family);
    const AugmentedDraw d = smsn_draw_augmented(rng, sp, params.family);
    out.latents.u[t] = d.u;
    out.latents.w[t] = d.w;
    out.data.y[t] = std::exp(0.5 * out.latents.h[t]) * d.z;
  }
  return out;
}

double log_prior(const ModelParams& params, const PriorConfig& priors,
                 bool dynamic_skewness) {
  priors.validate();
  CompensatedSum lp;
  // mu ~ N(mean, var)
  if (!std::isfinite(params.mu)) return kNegInf;
  lp.add(norm_logpdf(params.mu, priors.mu_mean, std::sqrt(priors.mu_var)));
  // (phi+1)/2 ~ Beta(a, b); constant Jacobian 1/2 of the fixed rescaling
  if (!(std::abs(params.phi) < 1.0)) return kNegInf;
  lp.add(beta_logpdf(0.5 * (params.phi + 1.0), priors.phi_beta_a,
                     priors.phi_beta_b) -
         std::log(2.0));
  // sigma_h^2 ~ IG(shape, scale), evaluated for sigma_h
  if (!(params.sigma_h > 0.0)) return kNegInf;
  lp.add(invgamma_logpdf(params.sigma_h * params.sigma_h, priors.sh2_shape,
                         priors.sh2_scale) +
         std::log(2.0 * params.sigma_h));
  // alpha1 | kappa ~ Laplace(0, 1/kappa)
  if (!(params.kappa > 0.0)) return kNegInf;
  lp.add(std::log(0.5 * params.kappa) - params.kappa * std::abs(params.alpha1));
  // kappa ~ Gamma(shape, rate)
  lp.add(gamma_logpdf(params.kappa, priors.kappa_shape, priors.kappa_rate));
  if (dynamic_skewness) {
    if (!(params.sigma_alpha > 0.0)) return kNegInf;
    switch (priors.sigma_alpha.kind) {
      case SigmaAlphaPriorKind::Pcp: {
        const double lambda = priors.sigma_alpha.lambda();
        lp.add(std::log(lambda) - lambda * params.sigma_alpha);
        break;
      }
      case SigmaAlphaPriorKind::ExpHier:
        lp.add(std::log(params.kappa) - params.kappa * params.sigma_alpha);
        break;
      case SigmaAlphaPriorKind::InvGamma:
        lp.add(invgamma_logpdf(params.sigma_alpha * params.sigma_alpha,
                               priors.sigma_alpha.shape,
                               priors.sigma_alpha.scale) +
               std::log(2.0 * params.sigma_alpha));
        break;
    }
  }
  if (params.family.has_mixing()) {
    // nu ~ Gamma(shape, rate) truncated to nu > nu_min; the truncation mass
    // is a constant, so the untruncated density is used.
    if (!(params.family.nu > params.family.nu_min())) return kNegInf;
    lp.add(gamma_logpdf(params.family.nu, priors.nu_shape, priors.nu_rate));
  }
  return lp.value();
}

double obs_loglik(double y, double h, double alpha, double u, double w,
                  const MixingFamily& family) {
  const SnParams sp = standardize(alpha, family);
  const double root_u = std::sqrt(u);
  const double hyp = std::hypot(1.0, alpha);
  const double delta = alpha / hyp;
  const double eh = std::exp(0.5 * h);
  const double m = (sp.gamma + sp.omega * delta * w / root_u) * eh;
  const double s = sp.omega / (hyp * root_u) * eh;
  return norm_logpdf(y, m, s);
}

double log_posterior(const ModelParams& params, const LatentPath& latents,
                     const Dataset& data, const PriorConfig& priors,
                     bool dynamic_skewness) {
  data.validate();
  const std::size_t T = data.size();
  if (latents.h.size() != T || latents.alpha.size() != T ||
      latents.u.size() != T || latents.w.size() != T) {
    throw std::invalid_argument("latent path length does not match the data");
  }
  const double lp = log_prior(params, priors, dynamic_skewness);
  if (lp == kNegInf) return kNegInf;
  if (!all_finite(latents.h) || !all_finite(latents.alpha) ||
      !all_finite(latents.u) || !all_finite(latents.w)) {
    return kNegInf;
  }
  if (latents.alpha[0] != params.alpha1) return kNegInf;
  for (std::size_t t = 0; t < T; ++t) {
    if (!(latents.w[t] > 0.0)) return kNegInf;
    if (params.family.has_mixing() && !(latents.u[t] > 0.0)) return kNegInf;
    if (params.family.kind == MixKind::Slash && !(latents.u[t] < 1.0)) {
      return kNegInf;
    }
    if (!params.family.has_mixing() && latents.u[t] != 1.0) return kNegInf;
    if (!dynamic_skewness && latents.alpha[t] != params.alpha1) return kNegInf;
  }

  CompensatedSum acc;
  acc.add(lp);
  // Volatility path.
  const double stat_sd =
      params.sigma_h / std::sqrt(1.0 - params.phi * params.phi);
  acc.add(norm_logpdf(latents.h[0], params.mu, stat_sd));
  for (std::size_t t = 1; t < T; ++t) {
    acc.add(norm_logpdf(latents.h[t],
                        params.mu + params.phi * (latents.h[t - 1] - params.mu),
                        params.sigma_h));
  }
  // Skewness path.
  if (dynamic_skewness) {
    for (std::size_t t = 1; t < T; ++t) {
      acc.add(norm_logpdf(latents.alpha[t], latents.alpha[t - 1],
                          params.sigma_alpha));
    }
  }
  // Mixing and half-normal latents.
  for (std::size_t t = 0; t < T; ++t) {
    if (params.family.has_mixing()) {
      const double mp = mixing_logpdf(latents.u[t], params.family);
      if (mp == kNegInf) return kNegInf;
      acc.add(mp);
    }
    acc.add(std::log(2.0) + norm_logpdf(latents.w[t]));
  }
  // Observations.
  for (std::size_t t = 0; t < T; ++t) {
    acc.add(obs_loglik(data.y[t], latents.h[t], latents.alpha[t], latents.u[t],
                       latents.w[t], params.family));
  }
  const double v = acc.value();
  if (std::isnan(v)) {
    throw NumericError("posterior kernel evaluated to NaN");
  }
  return v;
}

ParamLayout::ParamLayout(MixKind kind, bool dynamic_skewness, std::size_t T)
    : kind_(kind), dynamic_(dynamic_skewness), T_(T) {
  if (T < 2) {
    throw std::domain_error("series length must be at least 2");
  }
  n_scalars_ = 5 + (dynamic_ ? 1 : 0) + (has_mixing() ? 1 : 0);
  dim_ = n_scalars_ + T_ + (dynamic_ ? T_ - 1 : 0) + (has_mixing() ? T_ : 0) + T_;
}

double ParamLayout::nu_min() const {
  return MixingFamily{kind_, 0.0}.nu_min();
}

std::vector<std::string> ParamLayout::scalar_names() const {
  std::vector<std::string> names = {"mu", "phi", "sigma_h", "alpha1", "kappa"};
  if (dynamic_) names.push_back("sigma_alpha");
  if (has_mixing()) names.push_back("nu");
  return names;
}

void ParamLayout::to_unconstrained(const ModelParams& params,
                                   const LatentPath& latents,
                                   std::span<double> x) const {
  if (x.size() != dim_) {
    throw std::invalid_argument("unconstrained vector has the wrong length");
  }
  if (latents.h.size() != T_ || latents.alpha.size() != T_ ||
      latents.u.size() != T_ || latents.w.size() != T_) {
    throw std::invalid_argument("latent path length does not match the layout");
  }
  if (!(params.sigma_h > 0.0) || !(params.kappa > 0.0) ||
      !(std::abs(params.phi) < 1.0) || (dynamic_ && !(params.sigma_alpha > 0.0)) ||
      (has_mixing() && !(params.family.nu > nu_min()))) {
    throw std::domain_error("parameters outside the transformable support");
  }
  x[i_mu()] = params.mu;
  x[i_phi()] = std::log((1.0 + params.phi) / (1.0 - params.phi));
  x[i_sigma_h()] = std::log(params.sigma_h);
  x[i_alpha1()] = params.alpha1;
  x[i_kappa()] = std::log(params.kappa);
  if (dynamic_) x[i_sigma_alpha()] = std::log(params.sigma_alpha);
  if (has_mixing()) x[i_nu()] = std::log(params.family.nu - nu_min());
  for (std::size_t t = 0; t < T_; ++t) x[off_h() + t] = latents.h[t];
  if (dynamic_) {
    for (std::size_t t = 1; t < T_; ++t) {
      x[off_alpha() + t - 1] = latents.alpha[t];
    }
  }
  if (has_mixing()) {
    for (std::size_t t = 0; t < T_; ++t) {
      const double u = latents.u[t];
      x[off_u() + t] = kind_ == MixKind::Slash ? logit(u) : std::log(u);
    }
  }
  for (std::size_t t = 0; t < T_; ++t) {
    x[off_w() + t] = std::log(latents.w[t]);
  }
}

double ParamLayout::to_constrained(std::span<const double> x,
                                   ModelParams& params,
                                   LatentPath& latents) const {
  if (x.size() != dim_) {
    throw std::invalid_argument("unconstrained vector has the wrong length");
  }
  if (!all_finite(x)) {
    throw NumericError("non-finite entry in unconstrained vector");
  }
  CompensatedSum logj;
  params.mu = x[i_mu()];
  params.phi = std::tanh(0.5 * x[i_phi()]);
  logj.add(std::log1p(-params.phi * params.phi) - std::log(2.0));
  params.sigma_h = std::exp(x[i_sigma_h()]);
  logj.add(x[i_sigma_h()]);
  params.alpha1 = x[i_alpha1()];
  params.kappa = std::exp(x[i_kappa()]);
  logj.add(x[i_kappa()]);
  if (dynamic_) {
    params.sigma_alpha = std::exp(x[i_sigma_alpha()]);
    logj.add(x[i_sigma_alpha()]);
  } else {
    params.sigma_alpha = 0.0;
  }
  params.family.kind = kind_;
  if (has_mixing()) {
    params.family.nu = nu_min() + std::exp(x[i_nu()]);
    logj.add(x[i_nu()]);
  } else {
    params.family.nu = 0.0;
  }
  latents.h.assign(x.begin() + off_h(), x.begin() + off_h() + T_);
  latents.alpha.assign(T_, params.alpha1);
  if (dynamic_) {
    for (std::size_t t = 1; t < T_; ++t) {
      latents.alpha[t] = x[off_alpha() + t - 1];
    }
  }
  latents.u.assign(T_, 1.0);
  if (has_mixing()) {
    for (std::size_t t = 0; t < T_; ++t) {
      const double xu = x[off_u() + t];
      if (kind_ == MixKind::Slash) {
        const double u = logistic(xu);
        latents.u[t] = u;
        logj.add(std::log(u) + std::log1p(-u));
      } else {
        latents.u[t] = std::exp(xu);
        logj.add(xu);
      }
    }
  }
  latents.w.resize(T_);
  for (std::size_t t = 0; t < T_; ++t) {
    latents.w[t] = std::exp(x[off_w() + t]);
    logj.add(x[off_w() + t]);
  }
  return logj.value();
}

}  // namespace dynssv
