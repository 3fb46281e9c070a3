#include "dynssv/target.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/digamma.hpp>

#include "dynssv/math.hpp"

namespace dynssv {

std::pair<double, std::vector<double>> gradient(const LogDensity& target,
                                                std::span<const double> x) {
  std::vector<double> g(target.dim(), 0.0);
  const double v = target.value_and_grad(x, g);
  return {v, std::move(g)};
}

PosteriorTarget::PosteriorTarget(Dataset data, ModelConfig model,
                                 PriorConfig priors)
    : data_(std::move(data)),
      model_(model),
      priors_(std::move(priors)),
      layout_(model.kind, model.dynamic_skewness, data_.size()) {
  data_.validate();
  priors_.validate();
  const std::size_t T = data_.size();
  for (auto* buf : {&delta_, &hyp_, &omega_, &wi_, &m_, &s_, &r_, &eh_,
                    &invsu_, &hbar_, &abar_}) {
    buf->resize(T);
  }
  slat_.h.resize(T);
  slat_.alpha.resize(T);
  slat_.u.resize(T);
  slat_.w.resize(T);
}

bool PosteriorTarget::unpack(std::span<const double> v, ModelParams& p,
                             LatentPath& lat) const {
  const ParamLayout& L = layout_;
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  p.mu = v[L.i_mu()];
  p.phi = std::tanh(0.5 * v[L.i_phi()]);
  p.sigma_h = std::exp(v[L.i_sigma_h()]);
  p.alpha1 = v[L.i_alpha1()];
  p.kappa = std::exp(v[L.i_kappa()]);
  p.sigma_alpha = L.dynamic() ? std::exp(v[L.i_sigma_alpha()]) : 0.0;
  p.family.kind = L.kind();
  p.family.nu = L.has_mixing() ? L.nu_min() + std::exp(v[L.i_nu()]) : 0.0;
  if (!(p.sigma_h > 0.0) || !std::isfinite(p.sigma_h)) return false;
  if (!(p.kappa > 0.0) || !std::isfinite(p.kappa)) return false;
  if (!(std::abs(p.phi) < 1.0)) return false;
  if (L.dynamic() &&
      (!(p.sigma_alpha > 0.0) || !std::isfinite(p.sigma_alpha))) {
    return false;
  }
  if (L.has_mixing() &&
      (!(p.family.nu > L.nu_min()) || !std::isfinite(p.family.nu))) {
    return false;
  }

  const std::size_t T = L.T();
  const double stat = 1.0 / std::sqrt((1.0 - p.phi) * (1.0 + p.phi));
  lat.h[0] = p.mu + p.sigma_h * stat * v[L.off_h()];
  for (std::size_t t = 1; t < T; ++t) {
    lat.h[t] = p.mu + p.phi * (lat.h[t - 1] - p.mu) +
               p.sigma_h * v[L.off_h() + t];
  }
  lat.alpha[0] = p.alpha1;
  if (L.dynamic()) {
    for (std::size_t t = 1; t < T; ++t) {
      lat.alpha[t] = lat.alpha[t - 1] + p.sigma_alpha * v[L.off_alpha() + t - 1];
    }
  } else {
    std::fill(lat.alpha.begin(), lat.alpha.end(), p.alpha1);
  }
  if (L.kind() == MixKind::Normal) {
    std::fill(lat.u.begin(), lat.u.end(), 1.0);
  } else if (L.kind() == MixKind::StudentT) {
    for (std::size_t t = 0; t < T; ++t) lat.u[t] = std::exp(v[L.off_u() + t]);
  } else {
    for (std::size_t t = 0; t < T; ++t) lat.u[t] = logistic(v[L.off_u() + t]);
  }
  for (std::size_t t = 0; t < T; ++t) lat.w[t] = std::exp(v[L.off_w() + t]);
  if (!std::isfinite(lat.h[T - 1]) || !std::isfinite(lat.alpha[T - 1])) {
    return false;
  }
  return true;
}

void PosteriorTarget::constrain(std::span<const double> v, ModelParams& params,
                                LatentPath& latents) const {
  latents.h.resize(layout_.T());
  latents.alpha.resize(layout_.T());
  latents.u.resize(layout_.T());
  latents.w.resize(layout_.T());
  if (!unpack(v, params, latents)) {
    throw NumericError("sampled vector is outside the target support");
  }
}

void PosteriorTarget::to_centered(std::span<const double> v,
                                  std::span<double> x) const {
  ModelParams p;
  LatentPath lat;
  constrain(v, p, lat);
  layout_.to_unconstrained(p, lat, x);
}

double PosteriorTarget::value(std::span<const double> x) const {
  return eval(x, {}, false);
}

double PosteriorTarget::value_and_grad(std::span<const double> x,
                                       std::span<double> grad) const {
  return eval(x, grad, true);
}

double PosteriorTarget::eval(std::span<const double> v, std::span<double> grad,
                             bool with_grad) const {
  const ParamLayout& L = layout_;
  if (v.size() != L.dim() || (with_grad && grad.size() != L.dim())) {
    throw std::invalid_argument("vector length does not match the layout");
  }
  if (with_grad) std::fill(grad.begin(), grad.end(), 0.0);
  ModelParams& p = sp_;
  LatentPath& lat = slat_;
  if (!unpack(v, p, lat)) return kNegInf;

  const std::size_t T = L.T();
  const double b = kSqrtTwoOverPi;
  const double c = kTwoOverPi;
  const double nu = p.family.nu;

  // Mixing moments and their nu-derivatives, shared across t.
  double k1 = 1.0, k2 = 1.0, dk1 = 0.0, dk2 = 0.0;
  if (L.kind() == MixKind::StudentT) {
    k1 = std::sqrt(0.5 * nu) *
         std::exp(std::lgamma(0.5 * (nu - 1.0)) - std::lgamma(0.5 * nu));
    k2 = nu / (nu - 2.0);
    if (with_grad) {
      dk1 = k1 * (0.5 / nu + 0.5 * boost::math::digamma(0.5 * (nu - 1.0)) -
                  0.5 * boost::math::digamma(0.5 * nu));
      dk2 = -2.0 / square(nu - 2.0);
    }
  } else if (L.kind() == MixKind::Slash) {
    k1 = 2.0 * nu / (2.0 * nu - 1.0);
    k2 = nu / (nu - 1.0);
    dk1 = -2.0 / square(2.0 * nu - 1.0);
    dk2 = -1.0 / square(nu - 1.0);
  }
  if (!std::isfinite(k1) || !std::isfinite(k2)) return kNegInf;

  CompensatedSum val;
  // Innovation priors (identity slots, no Jacobian).
  for (std::size_t t = 0; t < T; ++t) val.add(norm_logpdf(v[L.off_h() + t]));
  if (L.dynamic()) {
    for (std::size_t t = 1; t < T; ++t) {
      val.add(norm_logpdf(v[L.off_alpha() + t - 1]));
    }
  }
  // Mixing-variable priors plus their transform Jacobians.
  if (L.kind() == MixKind::StudentT) {
    const double hn = 0.5 * nu;
    const double cnu = hn * std::log(hn) - std::lgamma(hn);
    for (std::size_t t = 0; t < T; ++t) {
      const double xu = v[L.off_u() + t];
      val.add(cnu + (hn - 1.0) * xu - hn * lat.u[t] + xu);
    }
  } else if (L.kind() == MixKind::Slash) {
    const double lnu = std::log(nu);
    for (std::size_t t = 0; t < T; ++t) {
      const double u = lat.u[t];
      if (!(u > 0.0) || !(u < 1.0)) return kNegInf;
      val.add(lnu + nu * std::log(u) + std::log1p(-u));
    }
  }
  // Half-normal latents plus log Jacobian.
  for (std::size_t t = 0; t < T; ++t) {
    val.add(std::log(2.0) + norm_logpdf(lat.w[t]) + v[L.off_w() + t]);
  }
  // Parameter priors on the natural scale plus transform Jacobians.
  const double lp = log_prior(p, priors_, L.dynamic());
  if (lp == kNegInf) return kNegInf;
  val.add(lp);
  val.add(std::log1p(-p.phi * p.phi) - std::log(2.0));
  val.add(v[L.i_sigma_h()]);
  val.add(v[L.i_kappa()]);
  if (L.dynamic()) val.add(v[L.i_sigma_alpha()]);
  if (L.has_mixing()) val.add(v[L.i_nu()]);

  // Observation terms.
  for (std::size_t t = 0; t < T; ++t) {
    const double a = lat.alpha[t];
    const double hp = std::hypot(1.0, a);
    const double del = a / hp;
    const double zeta = k2 - c * del * del * k1 * k1;
    const double om = 1.0 / std::sqrt(zeta);
    const double isu = 1.0 / std::sqrt(lat.u[t]);
    const double e = std::exp(0.5 * lat.h[t]);
    const double wiv = lat.w[t] * isu - b * k1;
    const double mm = om * del * wiv * e;
    const double ss = om / hp * isu * e;
    if (!(ss > 0.0) || !std::isfinite(ss) || !std::isfinite(mm)) return kNegInf;
    const double rr = (data_.y[t] - mm) / ss;
    const double obs = -0.5 * kLog2Pi - std::log(ss) - 0.5 * rr * rr;
    if (!std::isfinite(obs)) return kNegInf;
    val.add(obs);
    delta_[t] = del;
    hyp_[t] = hp;
    omega_[t] = om;
    wi_[t] = wiv;
    m_[t] = mm;
    s_[t] = ss;
    r_[t] = rr;
    eh_[t] = e;
    invsu_[t] = isu;
  }
  const double value = val.value();
  if (!std::isfinite(value)) return kNegInf;
  if (!with_grad) return value;

  // Reverse pass. Adjoints named after the natural-scale quantity.
  std::fill(hbar_.begin(), hbar_.end(), 0.0);
  std::fill(abar_.begin(), abar_.end(), 0.0);
  double k1bar = 0.0, k2bar = 0.0, nubar = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const double u = lat.u[t];
    const double w = lat.w[t];
    const double del = delta_[t];
    const double hp = hyp_[t];
    const double om = omega_[t];
    const double s = s_[t];
    const double r = r_[t];
    const double isu = invsu_[t];
    const double mbar = r / s;
    const double sbar = (r * r - 1.0) / s;
    hbar_[t] += 0.5 * (mbar * m_[t] + r * r - 1.0);
    const double qbar = mbar * eh_[t];
    double wbar = qbar * om * del * isu - w;
    double ubar = -0.5 * (qbar * om * del * w * isu + sbar * s) / u;
    const double obar = qbar * del * wi_[t] + sbar * s / om;
    const double zetabar = -0.5 * om * om * om * obar;
    abar_[t] += (qbar * om * wi_[t] - sbar * s * del * hp * hp -
                 zetabar * 2.0 * c * del * k1 * k1) /
                (hp * hp * hp);
    if (L.kind() == MixKind::StudentT) {
      k1bar += -zetabar * 2.0 * c * del * del * k1 - qbar * b * om * del;
      k2bar += zetabar;
      const double xu = v[L.off_u() + t];
      ubar += (0.5 * nu - 1.0) / u - 0.5 * nu;
      nubar += 0.5 * std::log(0.5 * nu) + 0.5 -
               0.5 * boost::math::digamma(0.5 * nu) + 0.5 * xu - 0.5 * u;
      grad[L.off_u() + t] = ubar * u + 1.0;
    } else if (L.kind() == MixKind::Slash) {
      k1bar += -zetabar * 2.0 * c * del * del * k1 - qbar * b * om * del;
      k2bar += zetabar;
      ubar += (nu - 1.0) / u;
      nubar += 1.0 / nu + std::log(u);
      grad[L.off_u() + t] = ubar * u * (1.0 - u) + 1.0 - 2.0 * u;
    }
    grad[L.off_w() + t] = wbar * w + 1.0;
  }

  // Volatility path recursion.
  double mubar = 0.0, phibar = 0.0, shbar = 0.0, sabar = 0.0;
  for (std::size_t t = T - 1; t >= 1; --t) {
    const double hb = hbar_[t];
    grad[L.off_h() + t] = p.sigma_h * hb - v[L.off_h() + t];
    phibar += (lat.h[t - 1] - p.mu) * hb;
    mubar += (1.0 - p.phi) * hb;
    shbar += v[L.off_h() + t] * hb;
    hbar_[t - 1] += p.phi * hb;
  }
  const double stat = 1.0 / std::sqrt((1.0 - p.phi) * (1.0 + p.phi));
  const double hb0 = hbar_[0];
  grad[L.off_h()] = p.sigma_h * stat * hb0 - v[L.off_h()];
  mubar += hb0;
  shbar += stat * v[L.off_h()] * hb0;
  phibar += p.sigma_h * v[L.off_h()] * p.phi * stat * stat * stat * hb0;

  // Skewness path recursion.
  double a1bar = 0.0;
  if (L.dynamic()) {
    for (std::size_t t = T - 1; t >= 1; --t) {
      const double ab = abar_[t];
      grad[L.off_alpha() + t - 1] = p.sigma_alpha * ab - v[L.off_alpha() + t - 1];
      sabar += v[L.off_alpha() + t - 1] * ab;
      abar_[t - 1] += ab;
    }
    a1bar = abar_[0];
  } else {
    for (std::size_t t = 0; t < T; ++t) a1bar += abar_[t];
  }

  // Parameter priors.
  mubar += -(p.mu - priors_.mu_mean) / priors_.mu_var;
  const double xb = 0.5 * (p.phi + 1.0);
  phibar += 0.5 * ((priors_.phi_beta_a - 1.0) / xb -
                   (priors_.phi_beta_b - 1.0) / (1.0 - xb));
  shbar += -(2.0 * priors_.sh2_shape + 1.0) / p.sigma_h +
           2.0 * priors_.sh2_scale / (p.sigma_h * p.sigma_h * p.sigma_h);
  const double sgn = p.alpha1 > 0.0 ? 1.0 : (p.alpha1 < 0.0 ? -1.0 : 0.0);
  a1bar += -p.kappa * sgn;
  double kapbar = 1.0 / p.kappa - std::abs(p.alpha1) +
                  (priors_.kappa_shape - 1.0) / p.kappa - priors_.kappa_rate;
  if (L.dynamic()) {
    switch (priors_.sigma_alpha.kind) {
      case SigmaAlphaPriorKind::Pcp:
        sabar += -priors_.sigma_alpha.lambda();
        break;
      case SigmaAlphaPriorKind::ExpHier:
        sabar += -p.kappa;
        kapbar += 1.0 / p.kappa - p.sigma_alpha;
        break;
      case SigmaAlphaPriorKind::InvGamma: {
        const double sa = p.sigma_alpha;
        sabar += -(2.0 * priors_.sigma_alpha.shape + 1.0) / sa +
                 2.0 * priors_.sigma_alpha.scale / (sa * sa * sa);
        break;
      }
    }
  }
  if (L.has_mixing()) {
    nubar += (priors_.nu_shape - 1.0) / nu - priors_.nu_rate + k1bar * dk1 +
             k2bar * dk2;
  }

  // Chain through the scalar transforms (d theta / dx plus d logJ / dx).
  grad[L.i_mu()] = mubar;
  grad[L.i_phi()] = phibar * 0.5 * (1.0 - p.phi * p.phi) - p.phi;
  grad[L.i_sigma_h()] = shbar * p.sigma_h + 1.0;
  grad[L.i_alpha1()] = a1bar;
  grad[L.i_kappa()] = kapbar * p.kappa + 1.0;
  if (L.dynamic()) grad[L.i_sigma_alpha()] = sabar * p.sigma_alpha + 1.0;
  if (L.has_mixing()) grad[L.i_nu()] = nubar * (nu - L.nu_min()) + 1.0;
  return value;
}

}  // namespace dynssv
