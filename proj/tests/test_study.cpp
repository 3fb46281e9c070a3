#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dynssv/study.hpp"

using namespace dynssv;

namespace {

Scenario small_scenario() {
  Scenario s;
  s.true_params.mu = 0.0;
  s.true_params.phi = 0.9;
  s.true_params.sigma_h = 0.25;
  s.true_params.alpha1 = -0.5;
  s.true_params.kappa = 1.0;
  s.true_params.sigma_alpha = 0.08;
  s.true_params.family = MixingFamily::normal();
  s.T = 40;
  s.replicates = 3;
  s.model = {MixKind::Normal, true};
  s.prior_menu = {PriorConfig::defaults(MixingFamily::normal()),
                  PriorConfig::defaults(MixingFamily::normal())};
  s.prior_menu[0].sigma_alpha = SigmaAlphaPrior::parse("pcp:0.5,0.5");
  s.prior_menu[1].sigma_alpha = SigmaAlphaPrior::parse("ig:2.5,0.025");
  s.sampler.iterations = 500;
  s.sampler.warmup = 250;
  s.sampler.chains = 1;
  s.sampler.seed = 77;
  s.sampler.target_accept = 0.9;
  return s;
}

}  // namespace

TEST_CASE("relative bias follows the mean-ratio convention") {
  const std::vector<double> equal{0.37, 0.37, 0.37};
  CHECK(relative_bias(equal, 0.37) == doctest::Approx(0.0).epsilon(1e-14));

  const std::vector<double> inflated{0.074, 0.074, 0.074, 0.074};
  CHECK(relative_bias(inflated, 0.01) == doctest::Approx(6.4).epsilon(1e-12));

  // At a zero truth the ratio degenerates; the raw mean error is reported.
  const std::vector<double> near_zero{0.004, 0.014};
  CHECK(relative_bias(near_zero, 0.0) ==
        doctest::Approx(0.009).epsilon(1e-12));

  CHECK_THROWS_AS(relative_bias(std::vector<double>{}, 1.0),
                  std::invalid_argument);
}

TEST_CASE("relative rmse follows the scaled-root convention") {
  const std::vector<double> equal{-2.0, -2.0};
  CHECK(relative_rmse(equal, -2.0) == doctest::Approx(0.0).epsilon(1e-14));

  const std::vector<double> symmetric{-1.5, -2.5};  // truth -2, offsets +-0.5
  CHECK(relative_rmse(symmetric, -2.0) ==
        doctest::Approx(0.25).epsilon(1e-12));

  const std::vector<double> around_zero{3.0, -4.0};
  CHECK(relative_rmse(around_zero, 0.0) ==
        doctest::Approx(3.5355339059327378).epsilon(1e-12));

  CHECK_THROWS_AS(relative_rmse(std::vector<double>{}, 1.0),
                  std::invalid_argument);
}

TEST_CASE("coverage fraction and binomial band") {
  const std::vector<std::pair<double, double>> intervals{
      {0.0, 1.0}, {0.4, 0.6}, {0.7, 0.9}};
  CHECK(coverage(intervals, 0.5) == doctest::Approx(2.0 / 3.0));
  CHECK(coverage(intervals, 0.95) == doctest::Approx(1.0 / 3.0));

  const std::vector<std::pair<double, double>> all{{0.0, 1.0}, {0.2, 0.8}};
  CHECK(coverage(all, 0.5) == doctest::Approx(1.0));

  const auto [lo300, hi300] = coverage_band(0.95, 300);
  CHECK(lo300 == doctest::Approx(0.9253372075114489).epsilon(1e-12));
  CHECK(hi300 == doctest::Approx(0.974662792488551).epsilon(1e-12));

  // Small m pushes the upper bound past 1; it is clipped.
  const auto [lo20, hi20] = coverage_band(0.95, 20);
  CHECK(lo20 == doctest::Approx(0.8544814154208721).epsilon(1e-12));
  CHECK(hi20 == doctest::Approx(1.0));

  CHECK_THROWS_AS(coverage(std::vector<std::pair<double, double>>{}, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(coverage_band(0.95, 0), std::invalid_argument);
}

TEST_CASE("oracle estimates give zero bias and full coverage") {
  const std::vector<double> truths{0.0, 0.95, 0.15, -0.8, 1.0, 0.05, 8.0};
  for (double truth : truths) {
    const std::vector<double> oracle(5, truth);
    CHECK(relative_bias(oracle, truth) == doctest::Approx(0.0));
    CHECK(relative_rmse(oracle, truth) == doctest::Approx(0.0));
    const std::vector<std::pair<double, double>> bands(
        5, {truth - 0.1, truth + 0.1});
    CHECK(coverage(bands, truth) == doctest::Approx(1.0));
  }
}

TEST_CASE("scenario validation rejects degenerate configurations") {
  CHECK_NOTHROW(small_scenario().validate());

  auto s = small_scenario();
  s.true_params.sigma_h = 0.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);

  s = small_scenario();
  s.replicates = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);

  s = small_scenario();
  s.prior_menu.clear();
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);

  s = small_scenario();
  s.true_params.phi = 1.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);

  s = small_scenario();
  s.true_params.kappa = 0.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);

  s = small_scenario();
  s.T = 1;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);

  s = small_scenario();
  s.sampler.warmup = s.sampler.iterations;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);

  s = small_scenario();
  s.true_params.family = {MixKind::StudentT, 2.0};  // at the moment floor
  CHECK_THROWS_AS(s.validate(), std::domain_error);
}

TEST_CASE("scenario json round trip preserves every field") {
  Scenario s;
  s.true_params = {0.1, 0.97, 0.12, -0.4, 2.0, 0.05,
                   MixingFamily::student_t(8.0)};
  s.T = 60;
  s.replicates = 4;
  s.model = {MixKind::StudentT, true};
  s.prior_menu = {PriorConfig::defaults(MixingFamily::student_t(8.0)),
                  PriorConfig::defaults(MixingFamily::student_t(8.0)),
                  PriorConfig::defaults(MixingFamily::student_t(8.0))};
  s.prior_menu[0].sigma_alpha = SigmaAlphaPrior::parse("pcp:0.5,0.5");
  s.prior_menu[1].sigma_alpha = SigmaAlphaPrior::parse("exp");
  s.prior_menu[2].sigma_alpha = SigmaAlphaPrior::parse("ig:2.5,0.025");
  s.sampler.iterations = 800;
  s.sampler.warmup = 400;
  s.sampler.chains = 2;
  s.sampler.seed = 99;
  s.sampler.target_accept = 0.85;
  s.sampler.max_tree_depth = 8;
  s.sampler.init_jitter = 0.3;

  const Scenario back = Scenario::from_json_text(s.to_json_text());
  CHECK(back.true_params.mu == doctest::Approx(s.true_params.mu));
  CHECK(back.true_params.phi == doctest::Approx(s.true_params.phi));
  CHECK(back.true_params.sigma_h == doctest::Approx(s.true_params.sigma_h));
  CHECK(back.true_params.alpha1 == doctest::Approx(s.true_params.alpha1));
  CHECK(back.true_params.kappa == doctest::Approx(s.true_params.kappa));
  CHECK(back.true_params.sigma_alpha ==
        doctest::Approx(s.true_params.sigma_alpha));
  CHECK(back.true_params.family.kind == s.true_params.family.kind);
  CHECK(back.true_params.family.nu == doctest::Approx(8.0));
  CHECK(back.T == s.T);
  CHECK(back.replicates == s.replicates);
  CHECK(back.model.kind == s.model.kind);
  CHECK(back.model.dynamic_skewness == s.model.dynamic_skewness);
  REQUIRE(back.prior_menu.size() == 3);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(back.prior_menu[i].sigma_alpha.describe() ==
          s.prior_menu[i].sigma_alpha.describe());
  CHECK(back.prior_menu[0].nu_shape ==
        doctest::Approx(s.prior_menu[0].nu_shape));
  CHECK(back.sampler.iterations == s.sampler.iterations);
  CHECK(back.sampler.warmup == s.sampler.warmup);
  CHECK(back.sampler.chains == s.sampler.chains);
  CHECK(back.sampler.seed == s.sampler.seed);
  CHECK(back.sampler.target_accept == doctest::Approx(0.85));
  CHECK(back.sampler.max_tree_depth == 8);
  CHECK(back.sampler.init_jitter == doctest::Approx(0.3));
}

TEST_CASE("scenario json parse failures are reported") {
  CHECK_THROWS_AS(Scenario::from_json_text("not json"),
                  std::invalid_argument);
  CHECK_THROWS_AS(Scenario::from_json_text("{}"), std::invalid_argument);
  CHECK_THROWS_AS(Scenario::from_json_text(
                      R"({"true_params":{"family":"cauchy"}})"),
                  std::domain_error);
  // Valid JSON, inadmissible tail index.
  CHECK_THROWS_AS(Scenario::from_json_text(
                      R"({"true_params":{"family":"t","nu":1.5}})"),
                  std::domain_error);
}

TEST_CASE("small scenario runs deterministically with full accounting") {
  const Scenario s = small_scenario();
  const StudyResult first = run_scenario(s);
  const StudyResult second = run_scenario(s);
  CHECK(study_csv(first) == study_csv(second));

  REQUIRE(first.priors.size() == 2);
  CHECK(first.priors[0].prior_label == "pcp:0.5,0.5");
  CHECK(first.priors[1].prior_label == "ig:2.5,0.025");
  for (const auto& pm : first.priors) {
    CHECK(pm.included == 3);
    CHECK(pm.failed == 0);
    CHECK(pm.included + pm.failed == s.replicates);
    REQUIRE(pm.rows.size() == 4);
    CHECK(pm.rows[0].name == "mu");
    CHECK(pm.rows[1].name == "phi");
    CHECK(pm.rows[2].name == "sigma_h");
    CHECK(pm.rows[3].name == "sigma_alpha");
    REQUIRE(pm.reps.size() == s.replicates);
    for (const auto& rec : pm.reps) {
      CHECK(rec.ok);
      CHECK(rec.cds.size() == pm.rows.size());
      CHECK(rec.means.size() == pm.rows.size());
    }
    for (const auto& row : pm.rows) {
      CHECK(std::isfinite(row.mean));
      CHECK(row.inf <= row.sup);
      CHECK(std::isfinite(row.cd));
      CHECK(row.rmse_rel >= 0.0);
      CHECK(row.coverage >= 0.0);
      CHECK(row.coverage <= 1.0);
    }
  }

  const std::string csv = study_csv(first);
  CHECK(csv.rfind("prior,parameter,truth,mean,inf,sup,cd,bias_rel,rmse_rel,"
                  "coverage,included,failed\n",
                  0) == 0);
  // Header plus one row per prior and parameter.
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 4);
}

TEST_CASE("sampler failures are recorded and excluded, never dropped") {
  Scenario s = small_scenario();
  s.replicates = 2;
  s.prior_menu.resize(1);
  s.sampler.iterations = 60;
  s.sampler.warmup = 30;
  // An absurd jitter makes every initialization overflow, so each fit
  // exhausts its retries and fails; the harness must account for that.
  s.sampler.init_jitter = 1e8;

  const StudyResult r = run_scenario(s);
  REQUIRE(r.priors.size() == 1);
  CHECK(r.priors[0].included == 0);
  CHECK(r.priors[0].failed == 2);
  CHECK(r.priors[0].included + r.priors[0].failed == s.replicates);
  REQUIRE(r.priors[0].failure_messages.size() == 2);
  CHECK(!r.priors[0].failure_messages[0].empty());
  REQUIRE(r.priors[0].reps.size() == 2);
  CHECK(!r.priors[0].reps[0].ok);
  CHECK(!r.priors[0].reps[0].error.empty());
  CHECK(r.priors[0].reps[0].cds.empty());
  for (const auto& row : r.priors[0].rows) {
    CHECK(std::isnan(row.mean));
    CHECK(std::isnan(row.coverage));
  }
}
