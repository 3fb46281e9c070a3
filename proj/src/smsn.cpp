#include "dynssv/smsn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/owens_t.hpp>

#include "dynssv/math.hpp"

namespace dynssv {

namespace {

using boost::math::quadrature::gauss_kronrod;

double require_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw std::domain_error(std::string(what) + " must be finite");
  }
  return x;
}

// log density of Student-t with nu dof at r.
double t_logpdf(double r, double nu) {
  return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
         0.5 * std::log(nu * kPi) -
         0.5 * (nu + 1.0) * std::log1p(r * r / nu);
}

// CDF of Student-t with nu dof, via the regularized incomplete beta.
double t_cdf(double x, double nu) {
  boost::math::students_t dist(nu);
  return boost::math::cdf(dist, x);
}

// Skew-normal CDF: Phi(z) - 2 T(z, alpha) with Owen's T function.
double sn_cdf_std(double z, double alpha) {
  return norm_cdf(z) - 2.0 * boost::math::owens_t(z, alpha);
}

}  // namespace

std::string MixingFamily::name() const {
  switch (kind) {
    case MixKind::Normal: return "normal";
    case MixKind::StudentT: return "student_t";
    case MixKind::Slash: return "slash";
  }
  return "unknown";
}

void MixingFamily::validate() const {
  if (kind == MixKind::Normal) return;
  if (!std::isfinite(nu) || nu <= nu_min()) {
    std::ostringstream msg;
    msg << name() << " mixing requires nu > " << nu_min() << ", got " << nu;
    throw std::domain_error(msg.str());
  }
}

MixingFamily family_from_name(const std::string& name, double nu) {
  MixingFamily f;
  if (name == "n" || name == "normal") {
    f = MixingFamily::normal();
  } else if (name == "t" || name == "student_t" || name == "student-t") {
    f = MixingFamily::student_t(nu);
  } else if (name == "slash") {
    f = MixingFamily::slash(nu);
  } else {
    throw std::domain_error("unknown mixing family: " + name);
  }
  f.validate();
  return f;
}

double SnParams::delta() const { return alpha / std::hypot(1.0, alpha); }

void SnParams::validate() const {
  require_finite(gamma, "location");
  require_finite(alpha, "shape");
  if (!std::isfinite(omega) || omega <= 0.0) {
    throw std::domain_error("scale must be positive and finite");
  }
}

double k_moment(const MixingFamily& family, int m) {
  if (m != 1 && m != 2) {
    throw std::domain_error("mixing moment order must be 1 or 2");
  }
  family.validate();
  const double md = static_cast<double>(m);
  switch (family.kind) {
    case MixKind::Normal:
      return 1.0;
    case MixKind::StudentT:
      return std::pow(0.5 * family.nu, 0.5 * md) *
             std::exp(std::lgamma(0.5 * (family.nu - md)) -
                      std::lgamma(0.5 * family.nu));
    case MixKind::Slash:
      return 2.0 * family.nu / (2.0 * family.nu - md);
  }
  throw std::logic_error("unreachable");
}

double tail_g(const MixingFamily& family) {
  const double k1 = k_moment(family, 1);
  const double k2 = k_moment(family, 2);
  return 0.5 * kPi * k2 / (k1 * k1);
}

double sn_logpdf(double x, const SnParams& p) {
  p.validate();
  require_finite(x, "x");
  const double r = (x - p.gamma) / p.omega;
  return std::log(2.0) + norm_logpdf(r) - std::log(p.omega) +
         norm_logcdf(p.alpha * r);
}

namespace {

// Marginal slash density by quadrature over the mixing variable u in (0,1):
//   f(x) = int_0^1 (2 sqrt(u)/omega) phi(sqrt(u) r) Phi(sqrt(u) alpha r)
//          nu u^(nu-1) du.
// Evaluated in log space around the integrand maximum so that far-tail
// densities stay representable. Absolute tolerance on the density: 1e-10.
double slash_logpdf(double x, const SnParams& p, double nu) {
  const double r = (x - p.gamma) / p.omega;
  const double r2 = r * r;
  if (!std::isfinite(r2)) return kNegInf;
  const double log_c = std::log(2.0 * nu) - std::log(p.omega);
  // Substituting u = exp(s) turns the mixing integral into
  //   int_{-inf}^{0} exp(l(e^s) + s) ds
  // whose integrand is a bump of O(1) width in s wherever the density mass
  // sits, so the adaptive grid resolves arbitrarily deep tails.
  const auto log_integrand = [&](double s) {
    const double su = std::exp(0.5 * s);
    return log_c + (nu + 0.5) * s + norm_logpdf(su * r) +
           norm_logcdf(su * p.alpha * r);
  };

  // Peak of the dominant u^(nu+1/2) exp(-u r^2/2) factor; outside-peak decay
  // is exponential in |s - s_peak|, so an 80-wide window is exhaustive.
  const double s_peak =
      r2 > 2.0 * nu + 1.0 ? std::log((2.0 * nu + 1.0) / r2) : 0.0;
  const double s_lo = s_peak - 80.0;
  double shift = kNegInf;
  for (int j = 0; j <= 128; ++j) {
    shift = std::max(shift, log_integrand(s_lo - s_lo * j / 128.0));
  }
  if (shift == kNegInf || !std::isfinite(shift)) return kNegInf;

  double err = 0.0;
  const double integral = gauss_kronrod<double, 15>::integrate(
      [&](double s) { return std::exp(log_integrand(s) - shift); }, s_lo, 0.0,
      15, 1e-12, &err);
  if (!(integral > 0.0) || !std::isfinite(integral)) {
    throw NumericError("slash density quadrature returned a non-positive value");
  }
  // Absolute error on the density is err * exp(shift); compare in log space.
  if (err > 0.0 && std::log(err) + shift > std::log(1e-10)) {
    std::ostringstream msg;
    msg << "slash density quadrature tolerance not met at x=" << x
        << " nu=" << nu << " (log abs err " << std::log(err) + shift << ")";
    throw NumericError(msg.str());
  }
  return shift + std::log(integral);
}

}  // namespace

double smsn_logpdf(double x, const SnParams& p, const MixingFamily& family) {
  p.validate();
  family.validate();
  require_finite(x, "x");
  switch (family.kind) {
    case MixKind::Normal:
      return sn_logpdf(x, p);
    case MixKind::StudentT: {
      const double nu = family.nu;
      const double r = (x - p.gamma) / p.omega;
      const double scaled = p.alpha * r * std::sqrt((nu + 1.0) / (nu + r * r));
      return std::log(2.0) + t_logpdf(r, nu) - std::log(p.omega) +
             std::log(t_cdf(scaled, nu + 1.0));
    }
    case MixKind::Slash:
      return slash_logpdf(x, p, family.nu);
  }
  throw std::logic_error("unreachable");
}

Moments smsn_moments(const SnParams& p, const MixingFamily& family) {
  p.validate();
  const double k1 = k_moment(family, 1);
  const double k2 = k_moment(family, 2);
  const double d = p.delta();
  Moments m;
  m.mean = p.gamma + kSqrtTwoOverPi * p.omega * d * k1;
  m.variance = p.omega * p.omega * (k2 - kTwoOverPi * d * d * k1 * k1);
  return m;
}

SnParams standardize(double alpha, const MixingFamily& family) {
  require_finite(alpha, "shape");
  const double k1 = k_moment(family, 1);
  const double k2 = k_moment(family, 2);
  const double d = alpha / std::hypot(1.0, alpha);
  const double zeta = k2 - kTwoOverPi * d * d * k1 * k1;
  if (!(zeta > 0.0)) {
    throw NumericError("variance factor must be positive");
  }
  SnParams p;
  p.alpha = alpha;
  p.omega = 1.0 / std::sqrt(zeta);
  p.gamma = -kSqrtTwoOverPi * p.omega * d * k1;
  return p;
}

AugmentedDraw smsn_draw_augmented(std::mt19937_64& rng, const SnParams& p,
                                  const MixingFamily& family) {
  p.validate();
  family.validate();
  std::normal_distribution<double> normal(0.0, 1.0);
  AugmentedDraw d;
  switch (family.kind) {
    case MixKind::Normal:
      d.u = 1.0;
      break;
    case MixKind::StudentT: {
      std::gamma_distribution<double> gamma(0.5 * family.nu, 2.0 / family.nu);
      d.u = gamma(rng);
      break;
    }
    case MixKind::Slash: {
      // Beta(nu, 1) by inverse CDF.
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      d.u = std::pow(unif(rng), 1.0 / family.nu);
      break;
    }
  }
  d.w = std::abs(normal(rng));
  const double del = p.delta();
  const double e = normal(rng);
  d.z = p.gamma + p.omega / std::sqrt(d.u) *
                      (del * d.w + std::sqrt(1.0 - del * del) * e);
  return d;
}

std::vector<double> smsn_sample(std::mt19937_64& rng, const SnParams& p,
                                const MixingFamily& family, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = smsn_draw_augmented(rng, p, family).z;
  }
  return out;
}

double smsn_cdf(double x, const SnParams& p, const MixingFamily& family) {
  p.validate();
  family.validate();
  require_finite(x, "x");
  const double r = (x - p.gamma) / p.omega;
  double value = 0.0;
  switch (family.kind) {
    case MixKind::Normal:
      value = sn_cdf_std(r, p.alpha);
      break;
    case MixKind::StudentT: {
      // Mix over u reparameterized by its own CDF so the domain is (0,1).
      boost::math::gamma_distribution<double> mix(0.5 * family.nu,
                                                  2.0 / family.nu);
      value = gauss_kronrod<double, 15>::integrate(
          [&](double q) {
            const double u = boost::math::quantile(mix, q);
            return sn_cdf_std(std::sqrt(u) * r, p.alpha);
          },
          0.0, 1.0, 12, 1e-10);
      break;
    }
    case MixKind::Slash: {
      const double nu = family.nu;
      value = gauss_kronrod<double, 15>::integrate(
          [&](double u) {
            return sn_cdf_std(std::sqrt(u) * r, p.alpha) * nu *
                   std::pow(u, nu - 1.0);
          },
          0.0, 1.0, 12, 1e-10);
      break;
    }
  }
  return std::clamp(value, 0.0, 1.0);
}

}  // namespace dynssv
