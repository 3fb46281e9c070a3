#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "dynssv/math.hpp"
#include "dynssv/model.hpp"
#include "dynssv/target.hpp"

using namespace dynssv;

namespace {

struct Quadratic final : LogDensity {
  std::size_t n;
  explicit Quadratic(std::size_t n_) : n(n_) {}
  std::size_t dim() const override { return n; }
  double value(std::span<const double> x) const override {
    double s = 0.0;
    for (double v : x) s += v * v;
    return -0.5 * s;
  }
  double value_and_grad(std::span<const double> x,
                        std::span<double> g) const override {
    for (std::size_t i = 0; i < n; ++i) g[i] = -x[i];
    return value(x);
  }
};

MixingFamily family_for(MixKind kind) {
  switch (kind) {
    case MixKind::StudentT: return MixingFamily::student_t(5.0);
    case MixKind::Slash: return MixingFamily::slash(2.0);
    default: return MixingFamily::normal();
  }
}

Dataset make_data(MixKind kind, std::size_t T, std::uint64_t seed) {
  ModelParams p;
  p.mu = -0.3;
  p.phi = 0.95;
  p.sigma_h = 0.2;
  p.alpha1 = -0.5;
  p.kappa = 0.9;
  p.sigma_alpha = 0.08;
  p.family = family_for(kind);
  std::mt19937_64 rng(seed);
  return simulate(p, T, rng).data;
}

// Random interior point on the sampled (non-centered unconstrained) scale.
std::vector<double> random_point(const ParamLayout& L, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 0.5);
  std::vector<double> v(L.dim());
  for (auto& x : v) x = nd(rng);
  v[L.i_mu()] = -0.2 + nd(rng);
  v[L.i_phi()] = 3.0 + nd(rng);          // phi near 0.9
  v[L.i_sigma_h()] = -1.6 + nd(rng);     // sigma_h near 0.2
  v[L.i_alpha1()] = -0.6 + 0.2 * nd(rng);  // keep clear of the Laplace kink
  v[L.i_kappa()] = nd(rng);
  if (L.dynamic()) v[L.i_sigma_alpha()] = -2.3 + nd(rng);
  if (L.has_mixing()) v[L.i_nu()] = 1.2 + 0.3 * nd(rng);
  return v;
}

double max_grad_rel_err(const PosteriorTarget& tgt,
                        std::span<const double> v) {
  auto [val, g] = gradient(tgt, v);
  REQUIRE(std::isfinite(val));
  const double step = 1e-5;
  std::vector<double> x(v.begin(), v.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + step;
    const double up = tgt.value(x);
    x[i] = keep - step;
    const double dn = tgt.value(x);
    x[i] = keep;
    const double fd = (up - dn) / (2.0 * step);
    const double rel = std::abs(g[i] - fd) / std::max(1.0, std::abs(fd));
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace

TEST_CASE("gradient wrapper is exact on a quadratic") {
  Quadratic q(4);
  std::vector<double> x = {0.3, -1.2, 2.0, 0.0};
  auto [v, g] = gradient(q, x);
  CHECK(v == doctest::Approx(-0.5 * (0.09 + 1.44 + 4.0)));
  for (std::size_t i = 0; i < 4; ++i) CHECK(g[i] == -x[i]);
}

TEST_CASE("hand-coded gradient matches finite differences on every cell") {
  const std::size_t T = 50;
  int cell = 0;
  for (MixKind kind : {MixKind::Normal, MixKind::StudentT, MixKind::Slash}) {
    for (const char* prior : {"pcp:0.5,0.5", "exp", "ig:2.5,0.025"}) {
      for (bool dynamic : {true, false}) {
        ++cell;
        ModelConfig mc{kind, dynamic};
        PriorConfig pc = PriorConfig::defaults(family_for(kind));
        pc.sigma_alpha = SigmaAlphaPrior::parse(prior);
        PosteriorTarget tgt(make_data(kind, T, 100 + cell), mc, pc);
        for (int rep = 0; rep < 2; ++rep) {
          auto v = random_point(tgt.layout(), 1000 * cell + rep);
          CHECK(max_grad_rel_err(tgt, v) <= 1e-5);
        }
      }
    }
  }
}

TEST_CASE("value and value_and_grad agree") {
  ModelConfig mc{MixKind::Slash, true};
  PriorConfig pc = PriorConfig::defaults(MixingFamily::slash(2.0));
  PosteriorTarget tgt(make_data(MixKind::Slash, 40, 5), mc, pc);
  for (int rep = 0; rep < 5; ++rep) {
    auto v = random_point(tgt.layout(), 50 + rep);
    std::vector<double> g(tgt.dim());
    CHECK(tgt.value(v) == tgt.value_and_grad(v, g));
  }
}

TEST_CASE("non-centered target equals the centered kernel up to the exact shift") {
  for (MixKind kind : {MixKind::Normal, MixKind::StudentT, MixKind::Slash}) {
    for (bool dynamic : {true, false}) {
      const std::size_t T = 60;
      ModelConfig mc{kind, dynamic};
      PriorConfig pc = PriorConfig::defaults(family_for(kind));
      Dataset data = make_data(kind, T, 77);
      PosteriorTarget tgt(data, mc, pc);
      const ParamLayout& L = tgt.layout();
      for (int rep = 0; rep < 3; ++rep) {
        auto v = random_point(L, 900 + rep);
        const double nc = tgt.value(v);
        REQUIRE(std::isfinite(nc));
        ModelParams p;
        LatentPath lat;
        tgt.constrain(v, p, lat);
        std::vector<double> xc(L.dim());
        tgt.to_centered(v, xc);
        ModelParams p2;
        LatentPath lat2;
        const double lj = L.to_constrained(xc, p2, lat2);
        const double centered =
            log_posterior(p2, lat2, data, pc, dynamic) + lj;
        double shift = T * std::log(p.sigma_h) -
                       0.5 * std::log1p(-p.phi * p.phi);
        if (dynamic) shift += (T - 1.0) * std::log(p.sigma_alpha);
        CHECK(nc == doctest::Approx(centered + shift).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("points near the support boundary keep finite gradients") {
  ModelConfig mc{MixKind::Slash, true};
  PriorConfig pc = PriorConfig::defaults(MixingFamily::slash(2.0));
  PosteriorTarget tgt(make_data(MixKind::Slash, 30, 9), mc, pc);
  const ParamLayout& L = tgt.layout();
  auto v = random_point(L, 4);
  v[L.i_phi()] = 12.0;         // phi within 2e-5 of 1
  v[L.off_h()] = 0.01;         // keep h_1 in range at the inflated scale
  v[L.off_u() + 3] = 34.0;     // u within 2e-15 of 1
  v[L.off_u() + 7] = -34.0;
  std::vector<double> g(L.dim());
  const double val = tgt.value_and_grad(v, g);
  CHECK(std::isfinite(val));
  for (double gi : g) CHECK(std::isfinite(gi));
}

TEST_CASE("non-finite input is a rejection, not a crash") {
  ModelConfig mc{MixKind::StudentT, true};
  PriorConfig pc = PriorConfig::defaults(MixingFamily::student_t(5.0));
  PosteriorTarget tgt(make_data(MixKind::StudentT, 30, 2), mc, pc);
  auto v = random_point(tgt.layout(), 8);
  v[10] = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> g(tgt.dim());
  CHECK(tgt.value_and_grad(v, g) == kNegInf);
  v[10] = std::numeric_limits<double>::infinity();
  CHECK(tgt.value(v) == kNegInf);
  // Overflowing scale parameters are likewise rejected gracefully.
  auto w = random_point(tgt.layout(), 9);
  w[tgt.layout().i_sigma_h()] = 800.0;
  CHECK(tgt.value(w) == kNegInf);
}
