#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "dynssv/dataio.hpp"
#include "dynssv/math.hpp"

using namespace dynssv;

namespace {

PriceSeries tiny_series() {
  PriceSeries p;
  p.dates = {"2020-01-01", "2020-01-02", "2020-01-03"};
  p.close = {100.0, 110.0, 105.0};
  return p;
}

}  // namespace

TEST_CASE("returns are mean-corrected percentage log differences") {
  const Dataset d = compute_returns(tiny_series());
  REQUIRE(d.y.size() == 2);
  CHECK(d.y[0] == doctest::Approx(7.091509771960886).epsilon(1e-12));
  CHECK(d.y[1] == doctest::Approx(-7.091509771960886).epsilon(1e-12));

  PriceSeries flat = tiny_series();
  flat.close = {42.0, 42.0, 42.0};
  const Dataset z = compute_returns(flat);
  CHECK(z.y[0] == doctest::Approx(0.0));
  CHECK(z.y[1] == doctest::Approx(0.0));
}

TEST_CASE("returns sum to zero and ignore price units") {
  std::mt19937_64 rng(5);
  std::lognormal_distribution<double> step(0.0, 0.03);
  PriceSeries p;
  double price = 250.0;
  const std::chrono::sys_days base{std::chrono::year{2010} /
                                   std::chrono::January / 4};
  for (int i = 0; i < 400; ++i) {
    const std::chrono::year_month_day ymd{base + std::chrono::days{i}};
    std::ostringstream date;
    date << int(ymd.year()) << '-' << (unsigned(ymd.month()) < 10 ? "0" : "")
         << unsigned(ymd.month()) << '-' << (unsigned(ymd.day()) < 10 ? "0" : "")
         << unsigned(ymd.day());
    p.dates.push_back(date.str());
    p.close.push_back(price);
    price *= step(rng);
  }
  const Dataset d = compute_returns(p);
  CompensatedSum total;
  for (double y : d.y) total.add(y);
  CHECK(std::fabs(total.value()) < 1e-10);

  PriceSeries scaled = p;
  for (double& c : scaled.close) c *= 37.25;
  const Dataset ds = compute_returns(scaled);
  for (std::size_t t = 0; t < d.y.size(); ++t)
    CHECK(ds.y[t] == doctest::Approx(d.y[t]).epsilon(1e-10));

  const SummaryStats s = summary_stats(d);
  CHECK(std::fabs(s.mean) < 1e-10);
}

TEST_CASE("price series invariants are enforced") {
  CHECK_NOTHROW(tiny_series().validate());

  PriceSeries p = tiny_series();
  p.close[1] = 0.0;
  CHECK_THROWS_WITH_AS(p.validate(),
                       doctest::Contains("row 2"), std::runtime_error);

  p = tiny_series();
  p.dates[2] = "2020-01-02";  // duplicate day
  CHECK_THROWS_AS(p.validate(), std::runtime_error);

  p = tiny_series();
  p.dates[1] = "2019-12-31";  // goes backwards
  CHECK_THROWS_AS(p.validate(), std::runtime_error);

  p = tiny_series();
  p.dates[0] = "2020-02-30";  // impossible calendar day
  CHECK_THROWS_AS(p.validate(), std::runtime_error);

  p = tiny_series();
  p.dates.pop_back();
  p.close.pop_back();
  CHECK_THROWS_AS(p.validate(), std::runtime_error);  // too short
}

TEST_CASE("summary statistics use population moments") {
  // Alternating +-1: every odd central moment cancels exactly.
  std::vector<double> two_point;
  for (int i = 0; i < 50; ++i) {
    two_point.push_back(-1.0);
    two_point.push_back(1.0);
  }
  const SummaryStats s2 = summary_stats(two_point);
  CHECK(s2.mean == 0.0);
  CHECK(s2.sd == doctest::Approx(1.0));
  CHECK(s2.skewness == 0.0);
  CHECK(s2.kurtosis == doctest::Approx(1.0));  // m4 = m2^2 for two-point

  std::mt19937_64 rng(12);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> big(200000);
  for (double& v : big) v = normal(rng);
  const SummaryStats sn = summary_stats(big);
  CHECK(std::fabs(sn.skewness) < 0.03);
  CHECK(sn.kurtosis == doctest::Approx(3.0).epsilon(0.1 / 3.0));
  CHECK(sn.sd == doctest::Approx(1.0).epsilon(0.01));
  CHECK(sn.min < -3.0);
  CHECK(sn.max > 3.0);

  CHECK_THROWS_AS(summary_stats(std::vector<double>{1.0, 2.0, 3.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(summary_stats(std::vector<double>(10, 7.0)),
                  std::runtime_error);  // zero variance
}

TEST_CASE("rolling skewness marks the warmup prefix as missing") {
  std::vector<double> y;
  for (int i = 0; i < 30; ++i) {
    y.push_back(double(i % 5) - 2.0);  // symmetric around 0
  }
  const auto r = rolling_skewness(y, 10);
  REQUIRE(r.size() == y.size());
  std::size_t missing = 0;
  for (double v : r) missing += std::isnan(v) ? 1 : 0;
  CHECK(missing == 9);
  for (std::size_t t = 9; t < r.size(); ++t)
    CHECK(r[t] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("an extreme negative outlier drives window skewness negative") {
  std::vector<double> y{0.5, -0.5, 0.3, -0.3, 0.1, -0.1, -9.0, 0.2, -0.2, 0.0};
  const auto r = rolling_skewness(y, 10);
  REQUIRE(r.size() == 10);
  CHECK(r[9] == doctest::Approx(-2.613903523423102).epsilon(1e-12));
}

TEST_CASE("rolling skewness edge behaviour") {
  std::vector<double> y(20, 1.0);
  y[15] = 2.0;
  const auto r = rolling_skewness(y, 5);
  // Windows not touching the bump have zero variance: missing, not an error.
  CHECK(std::isnan(r[10]));
  CHECK(!std::isnan(r[15]));

  // Full-length window leaves exactly one value, equal to the global stat.
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 2.0);
  std::vector<double> sample(120);
  for (double& v : sample) v = normal(rng);
  const auto full = rolling_skewness(sample, sample.size());
  std::size_t defined = 0;
  for (double v : full) defined += std::isnan(v) ? 0 : 1;
  CHECK(defined == 1);
  CHECK(full.back() ==
        doctest::Approx(summary_stats(sample).skewness).epsilon(1e-14));

  CHECK_THROWS_AS(rolling_skewness(sample, 3), std::invalid_argument);
  CHECK_THROWS_AS(rolling_skewness(sample, sample.size() + 1),
                  std::invalid_argument);
}

TEST_CASE("price csv ingestion honours the schema") {
  std::istringstream good(
      "date,close,volume\n"
      "2021-03-01,100.0,5\n"
      "2021-03-02,110.0,6\n"
      "\n"
      "2021-03-03,105.0,7\n");
  const PriceSeries p = parse_price_csv(good, "demo");
  REQUIRE(p.close.size() == 3);
  CHECK(p.dates[2] == "2021-03-03");
  CHECK(p.close[1] == doctest::Approx(110.0));
  const Dataset d = compute_returns(p);
  CHECK(d.y[0] == doctest::Approx(7.091509771960886).epsilon(1e-12));
  CHECK(d.label == "demo");

  std::istringstream blank(
      "date,close\n2021-03-01,100\n2021-03-02,\n2021-03-03,105\n");
  CHECK_THROWS_WITH_AS(parse_price_csv(blank, "demo"),
                       doctest::Contains("line 3"), std::runtime_error);

  std::istringstream negative(
      "date,close\n2021-03-01,100\n2021-03-02,-4\n2021-03-03,105\n");
  CHECK_THROWS_AS(parse_price_csv(negative, ""), std::runtime_error);

  std::istringstream garbled(
      "date,close\n2021-03-01,100\n2021-03-02,ten\n2021-03-03,105\n");
  CHECK_THROWS_AS(parse_price_csv(garbled, ""), std::runtime_error);

  std::istringstream missing_col("date,price\n2021-03-01,100\n");
  CHECK_THROWS_WITH_AS(parse_price_csv(missing_col, ""),
                       doctest::Contains("close"), std::runtime_error);

  std::istringstream crlf(
      "date,close\r\n2021-03-01,100\r\n2021-03-02,110\r\n2021-03-03,105\r\n");
  CHECK(parse_price_csv(crlf, "").close.size() == 3);
}

TEST_CASE("dataset csv round trip") {
  Dataset d;
  d.label = "sim";
  d.y = {1.25, -0.5, 3.75e-3, -2.0};
  const std::string text = dataset_to_csv(d);
  CHECK(text.rfind("t,y\n1,1.25\n", 0) == 0);

  std::istringstream in(text);
  const Dataset back = parse_dataset_csv(in, "sim");
  REQUIRE(back.y.size() == d.y.size());
  for (std::size_t t = 0; t < d.y.size(); ++t)
    CHECK(back.y[t] == doctest::Approx(d.y[t]).epsilon(1e-15));

  std::istringstream bad("t,y\n1,1.0\n2,oops\n");
  CHECK_THROWS_AS(parse_dataset_csv(bad, ""), std::runtime_error);
  std::istringstream short_series("t,y\n1,1.0\n");
  CHECK_THROWS_AS(parse_dataset_csv(short_series, ""), std::runtime_error);
}

TEST_CASE("summary json carries the headline columns") {
  const Dataset d = compute_returns(tiny_series());
  std::vector<double> padded = d.y;
  padded.push_back(0.4);
  padded.push_back(-0.4);
  const SummaryStats s = summary_stats(padded);
  const std::string j = stats_to_json(s, "demo");
  CHECK(j.find("\"series\": \"demo\"") != std::string::npos);
  CHECK(j.find("\"kurtosis\"") != std::string::npos);
  CHECK(j.find("\"skewness\"") != std::string::npos);
  CHECK(j.find("\"sd\"") != std::string::npos);
  CHECK(j.find("\"n\": 4") != std::string::npos);
}
