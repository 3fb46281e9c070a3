#include "dynssv/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/gamma.hpp>

namespace dynssv {

void SamplerConfig::validate() const {
  if (iterations == 0 || warmup >= iterations)
    throw std::invalid_argument("sampler: need warmup < iterations");
  if (chains < 1) throw std::invalid_argument("sampler: chains must be >= 1");
  if (!(target_accept > 0.0 && target_accept < 1.0))
    throw std::invalid_argument("sampler: target_accept must be in (0,1)");
  if (max_tree_depth < 1 || max_tree_depth > 20)
    throw std::invalid_argument("sampler: max_tree_depth out of range");
  if (!(init_jitter >= 0.0) || !std::isfinite(init_jitter))
    throw std::invalid_argument("sampler: init_jitter must be >= 0");
}

double leapfrog_step(const LogDensity& target,
                     std::span<const double> inv_metric, double eps,
                     std::vector<double>& q, std::vector<double>& p,
                     std::vector<double>& grad) {
  const std::size_t n = q.size();
  const double half = 0.5 * eps;
  for (std::size_t i = 0; i < n; ++i) p[i] += half * grad[i];
  for (std::size_t i = 0; i < n; ++i) q[i] += eps * inv_metric[i] * p[i];
  const double logp = target.value_and_grad(q, grad);
  for (std::size_t i = 0; i < n; ++i) p[i] += half * grad[i];
  return logp;
}

namespace {

struct PhasePoint {
  std::vector<double> q, p, grad;
  double logp = 0.0;
};

// Nesterov dual averaging of log step size (gamma=0.05, t0=10, kappa=0.75).
class DualAveraging {
 public:
  void restart(double eps) {
    mu_ = std::log(10.0 * eps);
    log_eps_bar_ = std::log(eps);
    h_bar_ = 0.0;
    count_ = 0;
  }
  double update(double accept, double target) {
    ++count_;
    h_bar_ += ((target - accept) - h_bar_) / (count_ + 10.0);
    const double log_eps = mu_ - std::sqrt(double(count_)) / 0.05 * h_bar_;
    const double w = std::pow(double(count_), -0.75);
    log_eps_bar_ = w * log_eps + (1.0 - w) * log_eps_bar_;
    return std::exp(log_eps);
  }
  double smoothed() const { return std::exp(log_eps_bar_); }

 private:
  double mu_ = 0.0, log_eps_bar_ = 0.0, h_bar_ = 0.0;
  std::size_t count_ = 0;
};

// Per-coordinate running moments for the metric windows.
class VectorMoments {
 public:
  explicit VectorMoments(std::size_t n) : mean_(n, 0.0), m2_(n, 0.0) {}

  void reset() {
    n_ = 0;
    std::fill(mean_.begin(), mean_.end(), 0.0);
    std::fill(m2_.begin(), m2_.end(), 0.0);
  }
  void add(std::span<const double> x) {
    ++n_;
    for (std::size_t i = 0; i < mean_.size(); ++i) {
      const double d = x[i] - mean_[i];
      mean_[i] += d / double(n_);
      m2_[i] += d * (x[i] - mean_[i]);
    }
  }
  // Sample variance shrunk toward 1e-3, as in the reference windowed scheme:
  // var * n/(n+5) + 1e-3 * 5/(n+5).
  std::vector<double> shrunk_variance() const {
    std::vector<double> v(mean_.size(), 1.0);
    if (n_ < 2) return v;
    const double w = double(n_) / (double(n_) + 5.0);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double var = m2_[i] / (double(n_) - 1.0);
      const double s = w * var + 1e-3 * (1.0 - w);
      if (std::isfinite(s) && s > 0.0) v[i] = s;
    }
    return v;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> mean_, m2_;
};

// Trajectory-doubling sampler over one chain's state.
class NutsChain {
 public:
  NutsChain(const LogDensity& target, std::uint64_t seed, int max_depth)
      : target_(target),
        rng_(seed),
        max_depth_(max_depth),
        inv_metric_(target.dim(), 1.0) {}

  void set_position(std::span<const double> q) {
    cur_.q.assign(q.begin(), q.end());
    cur_.p.assign(q.size(), 0.0);
    cur_.grad.assign(q.size(), 0.0);
    cur_.logp = target_.value_and_grad(cur_.q, cur_.grad);
    if (!std::isfinite(cur_.logp))
      throw std::invalid_argument(
          "sampler: initial point has non-finite target value");
  }

  const std::vector<double>& position() const { return cur_.q; }
  double step_size() const { return eps_; }
  void set_step_size(double e) { eps_ = e; }
  const std::vector<double>& inv_metric() const { return inv_metric_; }
  void set_inv_metric(std::vector<double> m) { inv_metric_ = std::move(m); }

  // Doubling/halving heuristic: scale eps until the one-step acceptance
  // ratio crosses 1/2, starting from eps = 1.
  double find_initial_step() {
    PhasePoint probe = cur_;
    draw_momentum(probe);
    const double h0 = hamiltonian(probe);
    const double crit = std::log(0.5);
    double eps = 1.0;
    auto log_ratio = [&](double e) {
      PhasePoint s = probe;
      s.logp = leapfrog_step(target_, inv_metric_, e, s.q, s.p, s.grad);
      const double a = h0 - hamiltonian(s);
      return std::isnan(a) ? kNegInf : a;
    };
    double a = log_ratio(eps);
    const int dir = a > crit ? 1 : -1;
    for (int i = 0; i < 100; ++i) {
      if (dir > 0 && !(a > crit)) break;
      if (dir < 0 && !(a < crit)) break;
      eps *= dir > 0 ? 2.0 : 0.5;
      if (eps > 1e7 || eps < 1e-10) break;
      a = log_ratio(eps);
    }
    eps_ = std::clamp(eps, 1e-10, 1e7);
    return eps_;
  }

  struct Outcome {
    double accept = 0.0;
    int depth = 0;
    bool divergent = false;
  };

  Outcome transition() {
    draw_momentum(cur_);
    cur_.logp = target_.value_and_grad(cur_.q, cur_.grad);
    h0_ = hamiltonian(cur_);
    sum_accept_ = 0.0;
    n_leaves_ = 0;
    divergent_ = false;

    Subtree traj;
    traj.lo = cur_;
    traj.hi = cur_;
    traj.chosen = cur_;
    traj.log_w = 0.0;

    int depth = 0;
    while (depth < max_depth_) {
      const int dir = unif_(rng_) < 0.5 ? -1 : 1;
      PhasePoint z = dir > 0 ? traj.hi : traj.lo;
      Subtree ext;
      if (!build(depth, dir, z, ext)) break;
      // Biased progressive sampling: favor the fresh half.
      if (std::log(unif_(rng_)) < ext.log_w - traj.log_w)
        traj.chosen = std::move(ext.chosen);
      traj.log_w = log_sum_exp(traj.log_w, ext.log_w);
      if (dir > 0)
        traj.hi = std::move(ext.hi);
      else
        traj.lo = std::move(ext.lo);
      ++depth;
      if (uturn(traj.lo, traj.hi)) break;
    }
    cur_ = std::move(traj.chosen);

    Outcome out;
    out.accept = n_leaves_ ? sum_accept_ / double(n_leaves_) : 0.0;
    out.depth = depth;
    out.divergent = divergent_;
    return out;
  }

 private:
  struct Subtree {
    PhasePoint lo, hi;  // trajectory-time endpoints (backward, forward)
    PhasePoint chosen;
    double log_w = kNegInf;
  };

  void draw_momentum(PhasePoint& s) {
    for (std::size_t i = 0; i < s.p.size(); ++i)
      s.p[i] = normal_(rng_) / std::sqrt(inv_metric_[i]);
  }

  double kinetic(const PhasePoint& s) const {
    double k = 0.0;
    for (std::size_t i = 0; i < s.p.size(); ++i)
      k += inv_metric_[i] * s.p[i] * s.p[i];
    return 0.5 * k;
  }
  double hamiltonian(const PhasePoint& s) const { return -s.logp + kinetic(s); }

  bool uturn(const PhasePoint& lo, const PhasePoint& hi) const {
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < lo.q.size(); ++i) {
      const double dq = hi.q[i] - lo.q[i];
      a += dq * inv_metric_[i] * lo.p[i];
      b += dq * inv_metric_[i] * hi.p[i];
    }
    return a < 0.0 || b < 0.0;
  }

  // Extends z by 2^depth leapfrog steps in direction dir. Returns false if
  // the subtree diverged or made a U-turn; out is then unusable.
  bool build(int depth, int dir, PhasePoint& z, Subtree& out) {
    if (depth == 0) {
      z.logp = leapfrog_step(target_, inv_metric_, dir * eps_, z.q, z.p, z.grad);
      const double dh = hamiltonian(z) - h0_;
      ++n_leaves_;
      if (dh == dh) sum_accept_ += std::min(1.0, std::exp(-dh));
      if (!(dh < 1000.0)) {  // energy error beyond cutoff, or NaN
        divergent_ = true;
        return false;
      }
      out.lo = z;
      out.hi = z;
      out.chosen = z;
      out.log_w = -dh;
      return true;
    }
    Subtree first, second;
    if (!build(depth - 1, dir, z, first)) return false;
    if (!build(depth - 1, dir, z, second)) return false;
    const double total = log_sum_exp(first.log_w, second.log_w);
    out.chosen = std::log(unif_(rng_)) < second.log_w - total
                     ? std::move(second.chosen)
                     : std::move(first.chosen);
    out.log_w = total;
    if (dir > 0) {
      out.lo = std::move(first.lo);
      out.hi = std::move(second.hi);
    } else {
      out.lo = std::move(second.lo);
      out.hi = std::move(first.hi);
    }
    return !uturn(out.lo, out.hi);
  }

  const LogDensity& target_;
  std::mt19937_64 rng_;
  int max_depth_;
  std::vector<double> inv_metric_;
  double eps_ = 1.0;
  PhasePoint cur_;
  double h0_ = 0.0;
  double sum_accept_ = 0.0;
  std::size_t n_leaves_ = 0;
  bool divergent_ = false;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// Warmup phases: step-size burn-in, expanding metric windows (base 25,
// doubling, last window absorbs the remainder), step-size polish.
struct WarmupSchedule {
  std::size_t metric_start = 0;
  std::size_t metric_end = 0;
  std::vector<std::size_t> window_ends;
};

WarmupSchedule make_schedule(std::size_t warmup) {
  WarmupSchedule s;
  if (warmup == 0) return s;
  s.metric_start = warmup * 15 / 100;
  s.metric_end = warmup - warmup / 10;
  std::size_t pos = s.metric_start, width = 25;
  while (pos < s.metric_end) {
    std::size_t end = pos + width;
    if (end > s.metric_end || end + 2 * width > s.metric_end)
      end = s.metric_end;
    s.window_ends.push_back(end);
    pos = end;
    width *= 2;
  }
  return s;
}

}  // namespace

ChainOutput run_chain(const LogDensity& target, const SamplerConfig& config,
                      std::span<const double> init) {
  config.validate();
  if (init.size() != target.dim())
    throw std::invalid_argument("sampler: init size does not match target");
  for (double v : init)
    if (!std::isfinite(v))
      throw std::invalid_argument("sampler: non-finite initial value");

  const auto t_start = std::chrono::steady_clock::now();
  const std::size_t dim = target.dim();
  const std::size_t kept = config.kept();

  NutsChain chain(target, config.seed, config.max_tree_depth);
  chain.set_position(init);

  const WarmupSchedule sched = make_schedule(config.warmup);
  DualAveraging da;
  da.restart(chain.find_initial_step());
  VectorMoments moments(dim);
  std::size_t window = 0;
  std::size_t warmup_divergences = 0;

  ChainOutput out;
  out.draws = Matrix(kept, dim);
  out.accept_stats.reserve(kept);
  out.step_sizes.reserve(kept);
  out.tree_depths.reserve(kept);
  out.divergent.reserve(kept);

  for (std::size_t it = 0; it < config.iterations; ++it) {
    const auto res = chain.transition();
    if (it < config.warmup) {
      warmup_divergences += res.divergent ? 1 : 0;
      chain.set_step_size(da.update(res.accept, config.target_accept));
      if (it >= sched.metric_start && it < sched.metric_end) {
        moments.add(chain.position());
        if (window < sched.window_ends.size() &&
            it + 1 == sched.window_ends[window]) {
          chain.set_inv_metric(moments.shrunk_variance());
          moments.reset();
          ++window;
          da.restart(chain.find_initial_step());
        }
      }
      if (it + 1 == config.warmup) {
        if (warmup_divergences == config.warmup)
          throw std::runtime_error(
              "sampler: every warmup iteration diverged (step size " +
              std::to_string(chain.step_size()) +
              "); the chain could not leave its initial point");
        chain.set_step_size(da.smoothed());
      }
    } else {
      const std::size_t r = it - config.warmup;
      std::copy(chain.position().begin(), chain.position().end(),
                out.draws.row(r).begin());
      out.accept_stats.push_back(res.accept);
      out.step_sizes.push_back(chain.step_size());
      out.tree_depths.push_back(res.depth);
      out.divergent.push_back(res.divergent ? 1 : 0);
      out.divergences += res.divergent ? 1 : 0;
    }
  }

  out.step_size_final = chain.step_size();
  out.inv_metric = chain.inv_metric();
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return out;
}

std::size_t thread_budget() {
  const char* env = std::getenv("DYNSSV_THREADS");
  if (env == nullptr) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || v < 1) return 1;
  return static_cast<std::size_t>(v);
}

namespace {

// Median of the truncated-to-(lo,inf) gamma law used for the nu prior.
double truncated_gamma_median(double shape, double rate, double lo) {
  boost::math::gamma_distribution<double> g(shape, 1.0 / rate);
  const double p_lo = boost::math::cdf(g, lo);
  return boost::math::quantile(g, p_lo + 0.5 * (1.0 - p_lo));
}

double inv_gamma_sqrt_median(double shape, double scale) {
  boost::math::gamma_distribution<double> g(shape, 1.0);
  return std::sqrt(scale / boost::math::quantile(g, 0.5));
}

// Centered moving variance of y over a 21-point window, floored at 1e-6,
// as the volatility-path starting level.
std::vector<double> moving_log_variance(std::span<const double> y) {
  const std::size_t T = y.size();
  std::vector<double> h(T);
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t lo = t >= 10 ? t - 10 : 0;
    const std::size_t hi = std::min(T - 1, t + 10);
    const std::size_t n = hi - lo + 1;
    double mean = 0.0;
    for (std::size_t i = lo; i <= hi; ++i) mean += y[i];
    mean /= double(n);
    double var = 0.0;
    for (std::size_t i = lo; i <= hi; ++i) var += square(y[i] - mean);
    var /= double(n);
    h[t] = std::log(std::max(var, 1e-6));
  }
  return h;
}

// Starting point near the prior medians on the unconstrained non-centered
// scale: the volatility block is back-solved so that h matches the moving
// variance of the data at the jittered scalar values.
std::vector<double> initial_point(const PosteriorTarget& target,
                                  double jitter, std::mt19937_64& rng) {
  const ParamLayout& lay = target.layout();
  const PriorConfig& pr = target.prior_config();
  const std::size_t T = lay.T();
  std::vector<double> v(lay.dim(), 0.0);
  std::uniform_real_distribution<double> u(-jitter, jitter);

  const std::vector<double> h0 = moving_log_variance(target.data().y);
  double h_level = mean_of(h0);

  boost::math::beta_distribution<double> phi_beta(pr.phi_beta_a, pr.phi_beta_b);
  const double phi_med = 2.0 * boost::math::quantile(phi_beta, 0.5) - 1.0;
  const double sh_med = inv_gamma_sqrt_median(pr.sh2_shape, pr.sh2_scale);
  boost::math::gamma_distribution<double> kappa_gamma(pr.kappa_shape,
                                                      1.0 / pr.kappa_rate);
  const double kappa_med = boost::math::quantile(kappa_gamma, 0.5);

  v[lay.i_mu()] = h_level + u(rng);
  v[lay.i_phi()] = 2.0 * std::atanh(phi_med) + u(rng);
  v[lay.i_sigma_h()] = std::log(sh_med) + u(rng);
  v[lay.i_alpha1()] = u(rng);
  v[lay.i_kappa()] = std::log(kappa_med) + u(rng);
  if (lay.dynamic()) {
    double sa_med = 0.1;
    const SigmaAlphaPrior& sap = pr.sigma_alpha;
    switch (sap.kind) {
      case SigmaAlphaPriorKind::Pcp:
        sa_med = std::log(2.0) / sap.lambda();
        break;
      case SigmaAlphaPriorKind::ExpHier:
        sa_med = std::log(2.0) / kappa_med;
        break;
      case SigmaAlphaPriorKind::InvGamma:
        sa_med = inv_gamma_sqrt_median(sap.shape, sap.scale);
        break;
    }
    sa_med = std::clamp(sa_med, 1e-4, 1.0);
    v[lay.i_sigma_alpha()] = std::log(sa_med) + u(rng);
  }
  double nu_med = 0.0;
  if (lay.has_mixing()) {
    nu_med = truncated_gamma_median(pr.nu_shape, pr.nu_rate, lay.nu_min());
    v[lay.i_nu()] = std::log(nu_med - lay.nu_min()) + u(rng);
  }

  // Back-solve the volatility innovations at the jittered scalars.
  const double mu = v[lay.i_mu()];
  const double phi = std::tanh(0.5 * v[lay.i_phi()]);
  const double sh = std::exp(v[lay.i_sigma_h()]);
  v[lay.off_h()] = (h0[0] - mu) * std::sqrt(1.0 - phi * phi) / sh + u(rng);
  for (std::size_t t = 1; t < T; ++t)
    v[lay.off_h() + t] =
        (h0[t] - mu - phi * (h0[t - 1] - mu)) / sh + u(rng);

  if (lay.dynamic())
    for (std::size_t t = 0; t + 1 < T; ++t) v[lay.off_alpha() + t] = u(rng);

  if (lay.has_mixing()) {
    double u_med = 0.5, u_slot = 0.0;
    if (lay.kind() == MixKind::StudentT) {
      boost::math::gamma_distribution<double> mix(nu_med / 2.0, 2.0 / nu_med);
      u_med = boost::math::quantile(mix, 0.5);
      u_slot = std::log(u_med);
    } else {
      u_med = std::exp(std::log(0.5) / nu_med);
      u_slot = logit(u_med);
    }
    for (std::size_t t = 0; t < T; ++t) v[lay.off_u() + t] = u_slot + u(rng);
  }

  const double w_slot = std::log(0.6744897501960817);
  for (std::size_t t = 0; t < T; ++t) v[lay.off_w() + t] = w_slot + u(rng);
  return v;
}

void fill_fit_outputs(const PosteriorTarget& target, ChainOutput& chain) {
  const ParamLayout& lay = target.layout();
  const std::size_t T = lay.T();
  const std::size_t kept = chain.draws.rows;
  const auto names = lay.scalar_names();
  chain.constrained_names = names;
  chain.constrained = Matrix(kept, names.size());
  chain.pointwise_loglik = Matrix(kept, T);

  ModelParams params;
  LatentPath latents;
  for (std::size_t r = 0; r < kept; ++r) {
    target.constrain(chain.draws.row(r), params, latents);
    auto row = chain.constrained.row(r);
    row[lay.i_mu()] = params.mu;
    row[lay.i_phi()] = params.phi;
    row[lay.i_sigma_h()] = params.sigma_h;
    row[lay.i_alpha1()] = params.alpha1;
    row[lay.i_kappa()] = params.kappa;
    if (lay.dynamic()) row[lay.i_sigma_alpha()] = params.sigma_alpha;
    if (lay.has_mixing()) row[lay.i_nu()] = params.family.nu;
    auto ll = chain.pointwise_loglik.row(r);
    for (std::size_t t = 0; t < T; ++t)
      ll[t] = obs_loglik(target.data().y[t], latents.h[t], latents.alpha[t],
                         latents.u[t], latents.w[t], params.family);
  }
}

}  // namespace

std::vector<double> FitResult::scalar_draws(const std::string& name) const {
  std::vector<double> all;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    const auto one = scalar_draws(name, c);
    all.insert(all.end(), one.begin(), one.end());
  }
  return all;
}

std::vector<double> FitResult::scalar_draws(const std::string& name,
                                            std::size_t chain) const {
  const ChainOutput& ch = chains.at(chain);
  const auto& names = ch.constrained_names;
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end())
    throw std::invalid_argument("fit: unknown parameter " + name);
  const std::size_t j = std::size_t(it - names.begin());
  std::vector<double> col(ch.constrained.rows);
  for (std::size_t r = 0; r < col.size(); ++r) col[r] = ch.constrained(r, j);
  return col;
}

Matrix FitResult::pooled_loglik() const {
  const std::size_t T = chains.at(0).pointwise_loglik.cols;
  std::size_t rows = 0;
  for (const auto& c : chains) rows += c.pointwise_loglik.rows;
  Matrix out(rows, T);
  std::size_t r = 0;
  for (const auto& c : chains)
    for (std::size_t i = 0; i < c.pointwise_loglik.rows; ++i, ++r)
      std::copy(c.pointwise_loglik.row(i).begin(),
                c.pointwise_loglik.row(i).end(), out.row(r).begin());
  return out;
}

std::vector<double> deviance_draws(const FitResult& fit) {
  std::vector<double> dev;
  for (const auto& ch : fit.chains)
    for (std::size_t r = 0; r < ch.pointwise_loglik.rows; ++r) {
      CompensatedSum s;
      for (double v : ch.pointwise_loglik.row(r)) s.add(v);
      dev.push_back(-2.0 * s.value());
    }
  return dev;
}

double deviance_at_mean(const FitResult& fit) {
  ModelParams p;
  p.mu = mean_of(fit.scalar_draws("mu"));
  p.phi = mean_of(fit.scalar_draws("phi"));
  p.sigma_h = mean_of(fit.scalar_draws("sigma_h"));
  p.alpha1 = mean_of(fit.scalar_draws("alpha1"));
  p.kappa = mean_of(fit.scalar_draws("kappa"));
  if (fit.model.dynamic_skewness)
    p.sigma_alpha = mean_of(fit.scalar_draws("sigma_alpha"));
  if (fit.model.kind == MixKind::StudentT)
    p.family = MixingFamily::student_t(mean_of(fit.scalar_draws("nu")));
  else if (fit.model.kind == MixKind::Slash)
    p.family = MixingFamily::slash(mean_of(fit.scalar_draws("nu")));
  CompensatedSum s;
  for (std::size_t t = 0; t < fit.T(); ++t)
    s.add(obs_loglik(fit.data.y[t], fit.h_mean[t], fit.alpha_mean[t],
                     fit.u_mean[t], fit.w_mean[t], p.family));
  return -2.0 * s.value();
}

FitResult fit(const Dataset& data, const ModelConfig& model,
              const PriorConfig& priors, const SamplerConfig& sampler) {
  data.validate();
  priors.validate();
  sampler.validate();

  FitResult result;
  result.model = model;
  result.priors = priors;
  result.sampler = sampler;
  result.data = data;
  result.chains.resize(sampler.chains);

  const PosteriorTarget base(data, model, priors);

  std::uint64_t stream = sampler.seed ^ 0x5851f42d4c957f2dULL;
  std::vector<std::uint64_t> init_seeds(sampler.chains),
      chain_seeds(sampler.chains);
  for (std::size_t c = 0; c < sampler.chains; ++c) {
    init_seeds[c] = splitmix64(stream);
    chain_seeds[c] = splitmix64(stream);
  }

  const std::size_t workers =
      std::min<std::size_t>(sampler.chains, thread_budget());
  std::atomic<std::size_t> next{0};
  std::vector<std::string> failures(sampler.chains);

  auto run_one = [&](std::size_t c) {
    const PosteriorTarget target(base);  // private scratch per chain
    std::mt19937_64 init_rng(init_seeds[c]);
    std::vector<double> start;
    bool ok = false;
    for (int attempt = 0; attempt < 50 && !ok; ++attempt) {
      start = initial_point(target, sampler.init_jitter, init_rng);
      ok = std::isfinite(target.value(start));
    }
    if (!ok)
      throw std::runtime_error(
          "sampler: could not find a finite starting point");
    SamplerConfig cfg = sampler;
    cfg.seed = chain_seeds[c];
    result.chains[c] = run_chain(target, cfg, start);
    fill_fit_outputs(target, result.chains[c]);
  };

  if (workers <= 1) {
    for (std::size_t c = 0; c < sampler.chains; ++c) run_one(c);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t c = next.fetch_add(1);
          if (c >= sampler.chains) return;
          try {
            run_one(c);
          } catch (const std::exception& e) {
            failures[c] = e.what();
          }
        }
      });
    for (auto& t : pool) t.join();
    for (const auto& f : failures)
      if (!f.empty()) throw std::runtime_error(f);
  }

  // Pooled latent summaries and thinned paths for plots.
  const ParamLayout& lay = base.layout();
  const std::size_t T = data.size();
  result.h_mean.assign(T, 0.0);
  result.alpha_mean.assign(T, 0.0);
  result.u_mean.assign(T, 1.0);
  result.w_mean.assign(T, 0.0);
  if (lay.has_mixing()) std::fill(result.u_mean.begin(), result.u_mean.end(), 0.0);

  const std::size_t kept = sampler.kept();
  const std::size_t total = kept * sampler.chains;
  const std::size_t stride = std::max<std::size_t>(1, total / 200);

  ModelParams params;
  LatentPath latents;
  std::vector<std::vector<double>> h_keep, a_keep;
  for (std::size_t c = 0; c < sampler.chains; ++c) {
    const ChainOutput& ch = result.chains[c];
    for (std::size_t r = 0; r < kept; ++r) {
      base.constrain(ch.draws.row(r), params, latents);
      for (std::size_t t = 0; t < T; ++t) {
        result.h_mean[t] += latents.h[t];
        result.alpha_mean[t] += latents.alpha[t];
        result.w_mean[t] += latents.w[t];
        if (lay.has_mixing()) result.u_mean[t] += latents.u[t];
      }
      if ((c * kept + r) % stride == 0) {
        h_keep.push_back(latents.h);
        a_keep.push_back(latents.alpha);
      }
    }
  }
  for (std::size_t t = 0; t < T; ++t) {
    result.h_mean[t] /= double(total);
    result.alpha_mean[t] /= double(total);
    result.w_mean[t] /= double(total);
    if (lay.has_mixing()) result.u_mean[t] /= double(total);
  }
  result.h_draws = Matrix(h_keep.size(), T);
  result.alpha_draws = Matrix(a_keep.size(), T);
  for (std::size_t i = 0; i < h_keep.size(); ++i) {
    std::copy(h_keep[i].begin(), h_keep[i].end(), result.h_draws.row(i).begin());
    std::copy(a_keep[i].begin(), a_keep[i].end(),
              result.alpha_draws.row(i).begin());
  }
  return result;
}

}  // namespace dynssv
