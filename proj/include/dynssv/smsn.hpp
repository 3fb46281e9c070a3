#pragma once

// Scale mixtures of skew-normal distributions: densities, mixing-law
// moments, standardization to zero mean / unit variance, and sampling.
//
// A variate is Z = gamma + U^{-1/2} * X with X ~ SN(0, omega^2, alpha) and
// U a positive mixing variable: U == 1 (normal), U ~ Gamma(nu/2, rate nu/2)
// (student_t) or U ~ Beta(nu, 1) (slash).

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace dynssv {

enum class MixKind { Normal, StudentT, Slash };

struct MixingFamily {
  MixKind kind = MixKind::Normal;
  double nu = 0.0;  // ignored for Normal

  static MixingFamily normal() { return {MixKind::Normal, 0.0}; }
  static MixingFamily student_t(double nu) { return {MixKind::StudentT, nu}; }
  static MixingFamily slash(double nu) { return {MixKind::Slash, nu}; }

  bool has_mixing() const { return kind != MixKind::Normal; }
  // Smallest admissible nu: both mixing moments k_1, k_2 must exist.
  double nu_min() const { return kind == MixKind::StudentT ? 2.0 : 1.0; }
  std::string name() const;
  // Throws std::domain_error when nu is non-finite or <= nu_min().
  void validate() const;
};

MixingFamily family_from_name(const std::string& name, double nu);

struct SnParams {
  double gamma = 0.0;  // location
  double omega = 1.0;  // scale, > 0
  double alpha = 0.0;  // shape

  double delta() const;  // alpha / sqrt(1 + alpha^2), in (-1, 1)
  void validate() const;
};

// E[U^{-m/2}] for m in {1, 2}. Closed form for all three families.
double k_moment(const MixingFamily& family, int m);

// Tail-weight index g(nu) = (pi/2) k_2 / k_1^2. Equals pi/2 for the normal
// family and strictly exceeds 1 everywhere; larger means heavier tails.
double tail_g(const MixingFamily& family);

// log of the skew-normal density (2/omega) phi(r) Phi(alpha r), r = (x-gamma)/omega.
// Finite for every finite x; the Phi factor is evaluated in log space.
double sn_logpdf(double x, const SnParams& p);

// log of the marginal SMSN density. Normal: skew-normal. Student-t: closed
// form skew-t. Slash: adaptive quadrature over the mixing variable,
// absolute density tolerance 1e-10 (NumericError when unattainable).
double smsn_logpdf(double x, const SnParams& p, const MixingFamily& family);

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

// Exact mean/variance of the marginal law (mixing moments k_1, k_2).
Moments smsn_moments(const SnParams& p, const MixingFamily& family);

// Location/scale pair making the SMSN law with shape alpha have mean 0 and
// variance 1: omega^2 = 1 / (k_2 - (2/pi) delta^2 k_1^2),
// gamma = -sqrt(2/pi) omega delta k_1. The variance factor is provably
// positive on the admissible nu range.
SnParams standardize(double alpha, const MixingFamily& family);

// One draw in hierarchical form: w = |N(0,1)|, u from the mixing law,
// z = gamma + omega u^{-1/2} (delta w + sqrt(1-delta^2) e), e ~ N(0,1).
struct AugmentedDraw {
  double z = 0.0;
  double u = 1.0;
  double w = 0.0;
};

AugmentedDraw smsn_draw_augmented(std::mt19937_64& rng, const SnParams& p,
                                  const MixingFamily& family);

std::vector<double> smsn_sample(std::mt19937_64& rng, const SnParams& p,
                                const MixingFamily& family, std::size_t n);

// Marginal CDF computed by integrating smsn_logpdf; used by goodness-of-fit
// tests. Values are clamped to [0, 1].
double smsn_cdf(double x, const SnParams& p, const MixingFamily& family);

}  // namespace dynssv
