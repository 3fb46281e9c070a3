#include "dynssv/study.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "dynssv/diagnostics.hpp"

namespace dynssv {

void Scenario::validate() const {
  if (T < 2) throw std::invalid_argument("scenario: T must be >= 2");
  if (replicates < 1)
    throw std::invalid_argument("scenario: replicates must be >= 1");
  if (prior_menu.empty())
    throw std::invalid_argument("scenario: prior menu is empty");
  const ModelParams& p = true_params;
  if (!(p.sigma_h > 0.0))
    throw std::invalid_argument("scenario: sigma_h must be positive");
  if (!(p.sigma_alpha >= 0.0))
    throw std::invalid_argument("scenario: sigma_alpha must be >= 0");
  if (!(std::fabs(p.phi) < 1.0))
    throw std::invalid_argument("scenario: |phi| must be below 1");
  if (!(p.kappa > 0.0))
    throw std::invalid_argument("scenario: kappa must be positive");
  p.family.validate();
  for (const auto& pc : prior_menu) pc.validate();
  sampler.validate();
}

double relative_bias(std::span<const double> estimates, double truth) {
  if (estimates.empty())
    throw std::invalid_argument("relative_bias: no estimates");
  CompensatedSum s;
  for (double e : estimates) s.add(e - truth);
  const double mean_err = s.value() / double(estimates.size());
  return truth == 0.0 ? mean_err : mean_err / truth;
}

double relative_rmse(std::span<const double> estimates, double truth) {
  if (estimates.empty())
    throw std::invalid_argument("relative_rmse: no estimates");
  CompensatedSum s;
  for (double e : estimates) s.add(square(e - truth));
  const double rmse = std::sqrt(s.value() / double(estimates.size()));
  return truth == 0.0 ? rmse : rmse / std::fabs(truth);
}

double coverage(const std::vector<std::pair<double, double>>& intervals,
                double truth) {
  if (intervals.empty()) throw std::invalid_argument("coverage: no intervals");
  std::size_t hit = 0;
  for (const auto& [lo, hi] : intervals)
    hit += (lo <= truth && truth <= hi) ? 1 : 0;
  return double(hit) / double(intervals.size());
}

std::pair<double, double> coverage_band(double mass, std::size_t m) {
  if (m < 1) throw std::invalid_argument("coverage_band: m must be >= 1");
  const double half = 1.96 * std::sqrt(mass * (1.0 - mass) / double(m));
  return {std::max(0.0, mass - half), std::min(1.0, mass + half)};
}

namespace {

double truth_of(const ModelParams& p, const std::string& name) {
  if (name == "mu") return p.mu;
  if (name == "phi") return p.phi;
  if (name == "sigma_h") return p.sigma_h;
  if (name == "alpha1") return p.alpha1;
  if (name == "kappa") return p.kappa;
  if (name == "sigma_alpha") return p.sigma_alpha;
  if (name == "nu") return p.family.nu;
  throw std::logic_error("unknown parameter name " + name);
}

}  // namespace

std::vector<std::string> table_parameters(MixKind kind, bool dynamic) {
  std::vector<std::string> names{"mu", "phi", "sigma_h"};
  if (dynamic) names.push_back("sigma_alpha");
  if (kind != MixKind::Normal) names.push_back("nu");
  return names;
}

StudyResult run_scenario(const Scenario& s) {
  s.validate();

  // Deterministic sub-seeds, fixed before any parallel scheduling.
  std::uint64_t stream = s.sampler.seed ^ 0x9e3779b97f4a7c15ULL;
  std::vector<std::uint64_t> sim_seeds(s.replicates);
  std::vector<std::vector<std::uint64_t>> fit_seeds(
      s.replicates, std::vector<std::uint64_t>(s.prior_menu.size()));
  for (std::size_t r = 0; r < s.replicates; ++r) {
    sim_seeds[r] = splitmix64(stream);
    for (auto& v : fit_seeds[r]) v = splitmix64(stream);
  }

  const std::vector<std::string> names =
      table_parameters(s.model.kind, s.model.dynamic_skewness);

  std::vector<std::vector<RepRecord>> records(
      s.prior_menu.size(), std::vector<RepRecord>(s.replicates));

  auto run_replicate = [&](std::size_t r) {
    std::mt19937_64 rng(sim_seeds[r]);
    const Simulation sim = simulate(s.true_params, s.T, rng);
    for (std::size_t p = 0; p < s.prior_menu.size(); ++p) {
      RepRecord& rec = records[p][r];
      try {
        SamplerConfig cfg = s.sampler;
        cfg.seed = fit_seeds[r][p];
        const FitResult res = fit(sim.data, s.model, s.prior_menu[p], cfg);
        for (const auto& name : names) {
          const auto draws = res.scalar_draws(name);
          const auto [lo, hi] = hpd(draws, 0.95);
          rec.means.push_back(mean_of(draws));
          rec.lows.push_back(lo);
          rec.highs.push_back(hi);
          rec.cds.push_back(geweke_cd(draws));
        }
        rec.ok = true;
      } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
      }
    }
  };

  const std::size_t workers =
      std::min<std::size_t>(s.replicates, thread_budget());
  if (workers <= 1) {
    for (std::size_t r = 0; r < s.replicates; ++r) run_replicate(r);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t r = next.fetch_add(1);
          if (r >= s.replicates) return;
          run_replicate(r);
        }
      });
    for (auto& t : pool) t.join();
  }

  StudyResult out;
  out.replicates = s.replicates;
  for (std::size_t p = 0; p < s.prior_menu.size(); ++p) {
    PriorMetrics pm;
    pm.prior_label = s.prior_menu[p].sigma_alpha.describe();
    for (std::size_t r = 0; r < s.replicates; ++r) {
      if (records[p][r].ok)
        ++pm.included;
      else {
        ++pm.failed;
        pm.failure_messages.push_back(records[p][r].error);
      }
    }
    for (std::size_t j = 0; j < names.size(); ++j) {
      ParamMetrics row;
      row.name = names[j];
      row.truth = truth_of(s.true_params, names[j]);
      std::vector<double> means;
      std::vector<std::pair<double, double>> intervals;
      CompensatedSum lo_sum, hi_sum, cd_sum;
      for (std::size_t r = 0; r < s.replicates; ++r) {
        const RepRecord& rec = records[p][r];
        if (!rec.ok) continue;
        means.push_back(rec.means[j]);
        intervals.emplace_back(rec.lows[j], rec.highs[j]);
        lo_sum.add(rec.lows[j]);
        hi_sum.add(rec.highs[j]);
        cd_sum.add(rec.cds[j]);
      }
      if (!means.empty()) {
        row.mean = mean_of(means);
        row.inf = lo_sum.value() / double(means.size());
        row.sup = hi_sum.value() / double(means.size());
        row.cd = cd_sum.value() / double(means.size());
        row.bias_rel = relative_bias(means, row.truth);
        row.rmse_rel = relative_rmse(means, row.truth);
        row.coverage = coverage(intervals, row.truth);
      }
      pm.rows.push_back(row);
    }
    pm.reps = std::move(records[p]);
    out.priors.push_back(std::move(pm));
  }
  return out;
}

std::string study_csv(const StudyResult& r) {
  std::ostringstream os;
  os.precision(6);
  os << "prior,parameter,truth,mean,inf,sup,cd,bias_rel,rmse_rel,coverage,"
        "included,failed\n";
  for (const auto& pm : r.priors)
    for (const auto& row : pm.rows)
      os << pm.prior_label << ',' << row.name << ',' << row.truth << ','
         << row.mean << ',' << row.inf << ',' << row.sup << ',' << row.cd
         << ',' << row.bias_rel << ',' << row.rmse_rel << ',' << row.coverage
         << ',' << pm.included << ',' << pm.failed << '\n';
  return os.str();
}

namespace {

// Kind only; nu 3.0 clears every family's admissibility floor.
MixKind kind_from_json(const nlohmann::json& j) {
  return family_from_name(j.value("family", std::string("normal")), 3.0).kind;
}

}  // namespace

namespace {

Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario s;
  const auto& tp = j.at("true_params");
  s.true_params.mu = tp.value("mu", 0.0);
  s.true_params.phi = tp.value("phi", 0.95);
  s.true_params.sigma_h = tp.value("sigma_h", 0.15);
  s.true_params.alpha1 = tp.value("alpha1", 0.0);
  s.true_params.kappa = tp.value("kappa", 1.0);
  s.true_params.sigma_alpha = tp.value("sigma_alpha", 0.0);
  s.true_params.family = family_from_name(
      tp.value("family", std::string("normal")), tp.value("nu", 0.0));

  s.T = j.value("T", std::size_t(500));
  s.replicates = j.value("replicates", std::size_t(20));

  if (j.contains("model")) {
    const auto& m = j.at("model");
    s.model.kind = kind_from_json(m);
    s.model.dynamic_skewness = m.value("dynamic_skewness", true);
  } else {
    s.model.kind = s.true_params.family.kind;
    s.model.dynamic_skewness = true;
  }

  // Placeholder nu values only select the family-specific prior defaults.
  const MixingFamily menu_family =
      s.model.kind == MixKind::Normal
          ? MixingFamily::normal()
          : (s.model.kind == MixKind::StudentT ? MixingFamily::student_t(10.0)
                                               : MixingFamily::slash(2.0));
  if (j.contains("prior_menu"))
    for (const auto& entry : j.at("prior_menu")) {
      PriorConfig pc = PriorConfig::defaults(menu_family);
      pc.sigma_alpha = SigmaAlphaPrior::parse(entry.get<std::string>());
      s.prior_menu.push_back(pc);
    }
  else
    s.prior_menu.push_back(PriorConfig::defaults(menu_family));

  if (j.contains("sampler")) {
    const auto& sj = j.at("sampler");
    s.sampler.iterations = sj.value("iterations", s.sampler.iterations);
    s.sampler.warmup = sj.value("warmup", s.sampler.warmup);
    s.sampler.chains = sj.value("chains", s.sampler.chains);
    s.sampler.seed = sj.value("seed", s.sampler.seed);
    s.sampler.target_accept =
        sj.value("target_accept", s.sampler.target_accept);
    s.sampler.max_tree_depth =
        sj.value("max_tree_depth", s.sampler.max_tree_depth);
    s.sampler.init_jitter = sj.value("init_jitter", s.sampler.init_jitter);
  }
  return s;
}

}  // namespace

Scenario Scenario::from_json_text(const std::string& text) {
  Scenario s;
  try {
    s = scenario_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("scenario JSON: ") + e.what());
  }
  s.validate();
  return s;
}

std::string Scenario::to_json_text() const {
  nlohmann::json j;
  j["true_params"] = {
      {"mu", true_params.mu},           {"phi", true_params.phi},
      {"sigma_h", true_params.sigma_h}, {"alpha1", true_params.alpha1},
      {"kappa", true_params.kappa},     {"sigma_alpha", true_params.sigma_alpha},
      {"family", true_params.family.name()}};
  if (true_params.family.has_mixing()) j["true_params"]["nu"] = true_params.family.nu;
  j["T"] = T;
  j["replicates"] = replicates;
  j["model"] = {{"family", MixingFamily{model.kind, 3.0}.name()},
                {"dynamic_skewness", model.dynamic_skewness}};
  j["prior_menu"] = nlohmann::json::array();
  for (const auto& pc : prior_menu)
    j["prior_menu"].push_back(pc.sigma_alpha.describe());
  j["sampler"] = {{"iterations", sampler.iterations},
                  {"warmup", sampler.warmup},
                  {"chains", sampler.chains},
                  {"seed", sampler.seed},
                  {"target_accept", sampler.target_accept},
                  {"max_tree_depth", sampler.max_tree_depth},
                  {"init_jitter", sampler.init_jitter}};
  return j.dump(2);
}

}  // namespace dynssv
